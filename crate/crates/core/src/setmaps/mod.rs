//! Set-valued maps `F: R^n ⇉ R^n` with finite point-set values.
//!
//! Built-in maps are described by a serializable [`MapSpec`] (constant,
//! piecewise-linear subdifferential, linear, first-match table); arbitrary
//! rules can be wrapped with [`SetValuedMap::from_fn`]. Upper semicontinuity
//! is an assumption on the caller's map. The only check offered is the
//! sampling diagnostic [`usc_defect`], which can refute a closed graph along
//! a given approach sequence but never prove one.

mod problem;

pub(crate) use problem::validate_step_counts;
pub use problem::{parse_problem, GridSpec, ProblemSpec};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{dist_to_set, CompactSet, Vector};

/// Relative activity tolerance for pieces of a [`PlConvexFunction`].
pub const PIECE_ACTIVITY_TOL: f64 = 1e-12;

/// Number of lattice points per axis used by the sampled local bound.
const LOCAL_BOUND_SAMPLES: usize = 5;

/// One affine piece `x ↦ ⟨slope, x⟩ + offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: Vector,
    pub offset: f64,
}

impl AffinePiece {
    pub fn new(slope: impl Into<Vector>, offset: f64) -> Self {
        Self {
            slope: slope.into(),
            offset,
        }
    }

    #[inline]
    pub fn eval(&self, x: &Vector) -> f64 {
        self.slope.dot(x) + self.offset
    }
}

/// `f(x) = max_i (⟨a_i, x⟩ + b_i)`, convex by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlConvexFunction {
    pub pieces: Vec<AffinePiece>,
}

impl PlConvexFunction {
    pub fn new(pieces: Vec<AffinePiece>) -> Result<Self> {
        let f = Self { pieces };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        let first = self
            .pieces
            .first()
            .ok_or_else(|| Error::MalformedMap("piecewise-linear function has no pieces".into()))?;
        let dim = first.slope.dim();
        if dim == 0 {
            return Err(Error::MalformedMap("zero-dimensional slope".into()));
        }
        for p in &self.pieces {
            check_dim(dim, p.slope.dim())?;
            if !p.slope.is_finite() || !p.offset.is_finite() {
                return Err(Error::NonFinite("affine piece"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].slope.dim()
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &Vector) -> f64 {
        self.pieces.iter().map(|p| p.eval(x)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Slopes of the pieces attaining the max at `x`, in piece order, without
    /// repeats.
    pub fn active_slopes(&self, x: &Vector) -> Result<CompactSet> {
        check_dim(self.dim(), x.dim())?;
        let values: Vec<f64> = self.pieces.iter().map(|p| p.eval(x)).collect();
        let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cutoff = top - PIECE_ACTIVITY_TOL * top.abs().max(1.0);
        let mut slopes: Vec<Vector> = Vec::new();
        for (p, &val) in self.pieces.iter().zip(&values) {
            if val >= cutoff && !slopes.contains(&p.slope) {
                slopes.push(p.slope.clone());
            }
        }
        CompactSet::new(slopes)
    }
}

/// Comparison used in a half-space constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

/// `⟨normal, x⟩ rel offset`, evaluated exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub normal: Vector,
    pub rel: Relation,
    pub offset: f64,
}

impl Constraint {
    pub fn new(normal: impl Into<Vector>, rel: Relation, offset: f64) -> Self {
        Self {
            normal: normal.into(),
            rel,
            offset,
        }
    }

    pub fn holds(&self, x: &Vector) -> bool {
        let lhs = self.normal.dot(x);
        match self.rel {
            Relation::Lt => lhs < self.offset,
            Relation::Le => lhs <= self.offset,
            Relation::Eq => lhs == self.offset,
            Relation::Ge => lhs >= self.offset,
            Relation::Gt => lhs > self.offset,
        }
    }
}

/// A table region: the conjunction of `when` selects `points`. An empty
/// `when` matches everything.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    #[serde(default)]
    pub when: Vec<Constraint>,
    pub points: CompactSet,
}

impl Region {
    pub fn new(when: Vec<Constraint>, points: CompactSet) -> Self {
        Self { when, points }
    }

    pub fn matches(&self, x: &Vector) -> bool {
        self.when.iter().all(|c| c.holds(x))
    }
}

/// Serializable description of a built-in map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    Constant { points: CompactSet },
    PlSubdifferential(PlConvexFunction),
    Linear { matrix: Vec<Vector> },
    Table { regions: Vec<Region> },
}

type Evaluator = dyn Fn(&Vector) -> Result<CompactSet> + Send + Sync;
type BoundFn = dyn Fn(&Vector, f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Rule {
    Builtin(MapSpec),
    Custom(Arc<Evaluator>),
}

/// An immutable, deterministic set-valued map.
#[derive(Clone)]
pub struct SetValuedMap {
    dim: usize,
    rule: Rule,
    bound: Option<Arc<BoundFn>>,
}

impl fmt::Debug for SetValuedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Rule::Builtin(spec) => f
                .debug_struct("SetValuedMap")
                .field("dim", &self.dim)
                .field("spec", spec)
                .finish(),
            Rule::Custom(_) => f
                .debug_struct("SetValuedMap")
                .field("dim", &self.dim)
                .field("spec", &"<custom>")
                .finish(),
        }
    }
}

impl PartialEq for SetValuedMap {
    fn eq(&self, other: &Self) -> bool {
        match (&self.rule, &other.rule) {
            (Rule::Builtin(a), Rule::Builtin(b)) => a == b,
            (Rule::Custom(a), Rule::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl SetValuedMap {
    /// Validates a description and builds the map.
    pub fn from_spec(spec: MapSpec) -> Result<Self> {
        let dim = match &spec {
            MapSpec::Constant { points } => points.dim(),
            MapSpec::PlSubdifferential(f) => {
                f.validate()?;
                f.dim()
            }
            MapSpec::Linear { matrix } => {
                let n = matrix.len();
                if n == 0 {
                    return Err(Error::MalformedMap("empty matrix".into()));
                }
                for row in matrix {
                    if row.dim() != n {
                        return Err(Error::MalformedMap(format!(
                            "matrix must be square: {n} rows but a row of length {}",
                            row.dim()
                        )));
                    }
                    if !row.is_finite() {
                        return Err(Error::NonFinite("matrix"));
                    }
                }
                n
            }
            MapSpec::Table { regions } => {
                let first = regions
                    .first()
                    .ok_or_else(|| Error::MalformedMap("table map has no regions".into()))?;
                let dim = first.points.dim();
                for r in regions {
                    check_dim(dim, r.points.dim())?;
                    for c in &r.when {
                        check_dim(dim, c.normal.dim())?;
                        if !c.normal.is_finite() || !c.offset.is_finite() {
                            return Err(Error::NonFinite("table constraint"));
                        }
                    }
                }
                dim
            }
        };
        Ok(Self {
            dim,
            rule: Rule::Builtin(spec),
            bound: None,
        })
    }

    /// Wraps an arbitrary evaluator. Without [`Self::with_local_bound`], the
    /// local bound is sampled.
    pub fn from_fn<F>(dim: usize, evaluator: F) -> Self
    where
        F: Fn(&Vector) -> Result<CompactSet> + Send + Sync + 'static,
    {
        Self {
            dim,
            rule: Rule::Custom(Arc::new(evaluator)),
            bound: None,
        }
    }

    pub fn with_local_bound<B>(mut self, bound: B) -> Self
    where
        B: Fn(&Vector, f64) -> f64 + Send + Sync + 'static,
    {
        self.bound = Some(Arc::new(bound));
        self
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The description this map was built from; `None` for custom maps.
    pub fn spec(&self) -> Option<&MapSpec> {
        match &self.rule {
            Rule::Builtin(spec) => Some(spec),
            Rule::Custom(_) => None,
        }
    }

    /// `F(x)`.
    pub fn eval(&self, x: &Vector) -> Result<CompactSet> {
        check_dim(self.dim, x.dim())?;
        let value = match &self.rule {
            Rule::Builtin(MapSpec::Constant { points }) => points.clone(),
            Rule::Builtin(MapSpec::PlSubdifferential(f)) => f.active_slopes(x)?,
            Rule::Builtin(MapSpec::Linear { matrix }) => {
                CompactSet::singleton(matrix.iter().map(|row| row.dot(x)).collect::<Vec<_>>().into())?
            }
            Rule::Builtin(MapSpec::Table { regions }) => regions
                .iter()
                .find(|r| r.matches(x))
                .map(|r| r.points.clone())
                .ok_or_else(|| Error::NotCovered(x.clone()))?,
            Rule::Custom(f) => f(x)?,
        };
        check_dim(self.dim, value.dim())?;
        Ok(value)
    }

    /// An upper bound on `‖F(y)‖` for `|y − center| ≤ radius`.
    ///
    /// Built-in maps use analytic bounds. Custom maps use the bound supplied
    /// with [`Self::with_local_bound`], or else the maximum of `‖F(y)‖` over
    /// a lattice sample of the ball.
    pub fn local_bound(&self, center: &Vector, radius: f64) -> Result<f64> {
        check_dim(self.dim, center.dim())?;
        if let Some(bound) = &self.bound {
            return Ok(bound(center, radius));
        }
        match &self.rule {
            Rule::Builtin(MapSpec::Constant { points }) => Ok(points.norm()),
            Rule::Builtin(MapSpec::PlSubdifferential(f)) => {
                Ok(f.pieces.iter().map(|p| p.slope.norm()).fold(0.0, f64::max))
            }
            Rule::Builtin(MapSpec::Linear { matrix }) => {
                let frobenius = matrix.iter().map(Vector::norm_squared).sum::<f64>().sqrt();
                Ok(frobenius * (center.norm() + radius))
            }
            Rule::Builtin(MapSpec::Table { regions }) => {
                Ok(regions.iter().map(|r| r.points.norm()).fold(0.0, f64::max))
            }
            Rule::Custom(_) => self.sampled_bound(center, radius),
        }
    }

    fn sampled_bound(&self, center: &Vector, radius: f64) -> Result<f64> {
        let low: Vector = center.coords().iter().map(|c| c - radius).collect::<Vec<_>>().into();
        let high: Vector = center.coords().iter().map(|c| c + radius).collect::<Vec<_>>().into();
        let grid = sample_grid(&low, &high, &vec![LOCAL_BOUND_SAMPLES; self.dim])?;
        let mut best = self.eval(center)?.norm();
        for y in grid.iter().filter(|y| y.distance(center) <= radius) {
            best = best.max(self.eval(y)?.norm());
        }
        Ok(best)
    }
}

/// `F(x) ≡ A`.
pub fn constant_map(points: CompactSet) -> SetValuedMap {
    SetValuedMap::from_spec(MapSpec::Constant { points }).expect("a compact set is a valid constant map")
}

/// `F(x)` = slopes of the pieces of `f` active at `x`; each value is a subset
/// of `∂f(x)`, so the map is cyclic monotone.
pub fn pl_subdifferential_map(f: PlConvexFunction) -> Result<SetValuedMap> {
    SetValuedMap::from_spec(MapSpec::PlSubdifferential(f))
}

/// `F(x) = {M x}` for a square matrix given by rows.
pub fn linear_map(rows: Vec<Vector>) -> Result<SetValuedMap> {
    SetValuedMap::from_spec(MapSpec::Linear { matrix: rows })
}

/// First matching region wins; uncovered points are an evaluation error.
pub fn table_map(regions: Vec<Region>) -> Result<SetValuedMap> {
    SetValuedMap::from_spec(MapSpec::Table { regions })
}

/// Regular lattice on the box `[low, high]` with `counts[i]` points on axis
/// `i`, both endpoints included. The first axis varies slowest.
pub fn sample_grid(low: &Vector, high: &Vector, counts: &[usize]) -> Result<Vec<Vector>> {
    check_dim(low.dim(), high.dim())?;
    check_dim(low.dim(), counts.len())?;
    for i in 0..low.dim() {
        if low[i].partial_cmp(&high[i]).is_none_or(|o| o.is_gt()) {
            return Err(Error::InvalidGrid(format!(
                "axis {i}: low {} exceeds high {}",
                low[i], high[i]
            )));
        }
        if counts[i] == 0 {
            return Err(Error::InvalidGrid(format!("axis {i}: count must be at least 1")));
        }
    }
    let axes: Vec<Vec<f64>> = (0..low.dim())
        .map(|i| {
            let c = counts[i];
            if c == 1 {
                return vec![low[i]];
            }
            let step = (high[i] - low[i]) / (c - 1) as f64;
            (0..c)
                .map(|k| if k == c - 1 { high[i] } else { low[i] + k as f64 * step })
                .collect()
        })
        .collect();
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        out.push(Vector::from(
            idx.iter().zip(&axes).map(|(&k, axis)| axis[k]).collect::<Vec<_>>(),
        ));
        for a in (0..axes.len()).rev() {
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(out)
}

/// Closed-graph diagnostic along `approach → limit`: the largest distance
/// from a value in `F(approach.last())` to `F(limit)`. For a USC map this
/// tends to zero as the approach points converge to `limit`.
pub fn usc_defect(map: &SetValuedMap, limit: &Vector, approach: &[Vector]) -> Result<f64> {
    let at_limit = map.eval(limit)?;
    let Some(last) = approach.last() else {
        return Ok(0.0);
    };
    let mut worst: f64 = 0.0;
    for v in &map.eval(last)? {
        worst = worst.max(dist_to_set(v, &at_limit)?);
    }
    Ok(worst)
}
