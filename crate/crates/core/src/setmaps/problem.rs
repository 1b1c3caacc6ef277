//! TOML problem documents.
//!
//! ```toml
//! x0 = [0.0]
//! v0 = [1.0]
//! T = 1.0
//! h = 0.01
//! strategy = "inertial"   # exhaustive | support | inertial
//! tol = 1e-9
//! max_length = 3          # optional
//! steps = [25, 50, 100]   # optional
//!
//! [map]
//! kind = "constant"
//! points = [[-1.0], [1.0]]
//!
//! [grid]                  # optional
//! low = [-1.0]
//! high = [1.0]
//! counts = [3]
//! ```

use serde::{Deserialize, Serialize};

use super::{sample_grid, MapSpec, SetValuedMap};
use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::solver::Strategy;

/// Axis-aligned sampling box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub low: Vector,
    pub high: Vector,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<Vector>> {
        sample_grid(&self.low, &self.high, &self.counts)
    }

    /// Parses `low:high:count` per axis, axes separated by commas, e.g.
    /// `-1:1:3,-1:1:3`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut low = Vec::new();
        let mut high = Vec::new();
        let mut counts = Vec::new();
        for axis in text.split(',') {
            let parts: Vec<&str> = axis.trim().split(':').collect();
            let [lo, hi, n] = parts[..] else {
                return Err(Error::InvalidGrid(format!(
                    "axis `{axis}` is not of the form low:high:count"
                )));
            };
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidGrid(format!("`{s}`: {e}")))
            };
            low.push(num(lo)?);
            high.push(num(hi)?);
            counts.push(
                n.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::InvalidGrid(format!("`{n}`: {e}")))?,
            );
        }
        let grid = Self {
            low: Vector::try_new(low)?,
            high: Vector::try_new(high)?,
            counts,
        };
        grid.points()?;
        Ok(grid)
    }

    /// A box of half-width `radius` around `center`, `count` points per axis.
    pub fn around(center: &Vector, radius: f64, count: usize) -> Self {
        Self {
            low: center.coords().iter().map(|c| c - radius).collect::<Vec<_>>().into(),
            high: center.coords().iter().map(|c| c + radius).collect::<Vec<_>>().into(),
            counts: vec![count; center.dim()],
        }
    }
}

/// A validated initial-value problem for `ẋ ∈ F(x)`, `x(0) = x0`, `t ∈ [0, T]`,
/// together with optional sampling parameters used by the classifiers and
/// refinement studies.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub map: SetValuedMap,
    pub x0: Vector,
    pub v0: Vector,
    pub horizon: f64,
    pub step: f64,
    pub strategy: Strategy,
    pub tol: f64,
    pub grid: Option<GridSpec>,
    pub max_length: Option<usize>,
    pub steps: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    x0: Vector,
    v0: Vector,
    #[serde(rename = "T")]
    horizon: f64,
    h: f64,
    #[serde(default)]
    strategy: Strategy,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    steps: Option<Vec<usize>>,
    map: MapSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<GridSpec>,
}

fn default_tol() -> f64 {
    crate::DEFAULT_TOL
}

impl ProblemSpec {
    /// Builds and validates a problem from parts.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        map: SetValuedMap,
        x0: Vector,
        v0: Vector,
        horizon: f64,
        step: f64,
        strategy: Strategy,
        tol: f64,
    ) -> Result<Self> {
        let spec = Self {
            map,
            x0,
            v0,
            horizon,
            step,
            strategy,
            tol,
            grid: None,
            max_length: None,
            steps: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.map.dim();
        for (name, v) in [("x0", &self.x0), ("v0", &self.v0)] {
            if v.dim() != n {
                return Err(Error::Validation(format!(
                    "{name} has dimension {} but the map has dimension {n}",
                    v.dim()
                )));
            }
            if !v.is_finite() {
                return Err(Error::Validation(format!("{name} must be finite")));
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Validation(format!(
                "horizon T must be positive and finite, got {}",
                self.horizon
            )));
        }
        if !(self.step > 0.0 && self.step <= self.horizon) {
            return Err(Error::Validation(format!(
                "step h must satisfy 0 < h <= T, got h = {} with T = {}",
                self.step, self.horizon
            )));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::Validation(format!("tol must be nonnegative, got {}", self.tol)));
        }
        if let Some(grid) = &self.grid {
            if grid.low.dim() != n {
                return Err(Error::Validation(format!(
                    "grid has dimension {} but the map has dimension {n}",
                    grid.low.dim()
                )));
            }
            grid.points()?;
        }
        if self.max_length == Some(0) {
            return Err(Error::Validation("max_length must be at least 1".into()));
        }
        if let Some(steps) = &self.steps {
            validate_step_counts(steps)?;
        }
        let f0 = self.map.eval(&self.x0)?;
        if !f0.contains(&self.v0) {
            return Err(Error::Validation("initial velocity not in F(x0)".into()));
        }
        Ok(())
    }

    /// TOML text that [`parse_problem`] maps back to an equal spec.
    pub fn to_toml(&self) -> Result<String> {
        let map = self
            .map
            .spec()
            .cloned()
            .ok_or_else(|| Error::Serialize("custom maps have no textual form".into()))?;
        let doc = Document {
            x0: self.x0.clone(),
            v0: self.v0.clone(),
            horizon: self.horizon,
            h: self.step,
            strategy: self.strategy,
            tol: self.tol,
            max_length: self.max_length,
            steps: self.steps.clone(),
            map,
            grid: self.grid.clone(),
        };
        toml::to_string(&doc).map_err(|e| Error::Serialize(e.to_string()))
    }
}

pub(crate) fn validate_step_counts(steps: &[usize]) -> Result<()> {
    if steps.is_empty() {
        return Err(Error::Validation("step counts must be nonempty".into()));
    }
    if steps[0] == 0 {
        return Err(Error::Validation("step counts must be positive".into()));
    }
    for w in steps.windows(2) {
        if w[1] <= w[0] || w[1] % w[0] != 0 {
            return Err(Error::Validation(format!(
                "step counts must increase with each dividing the next, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Parses and validates a problem document.
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let map = SetValuedMap::from_spec(doc.map).map_err(|e| Error::Validation(format!("map: {e}")))?;
    let spec = ProblemSpec {
        map,
        x0: doc.x0,
        v0: doc.v0,
        horizon: doc.horizon,
        step: doc.h,
        strategy: doc.strategy,
        tol: doc.tol,
        grid: doc.grid,
        max_length: doc.max_length,
        steps: doc.steps,
    };
    spec.validate()?;
    Ok(spec)
}
