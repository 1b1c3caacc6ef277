//! Euler polygons whose nodes form a cyclic-monotone sequence.
//!
//! Starting from `(x_0, v_0)`, each step moves `x_{k+1} = x_k + (t_{k+1} − t_k)·v_k`
//! and then picks `v_{k+1} ∈ F(x_{k+1})` so that the running node sequence
//! stays CM. A velocity is also selected at the final node, so every node
//! carries one.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cm::{
    best_extension, chain_slack, extension_slacks, inertial_pick, support_pick, verify_cm, CmCheck, CmSequence,
    GraphPair,
};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{dist_to_hull, dist_to_set, CompactSet, Vector};
use crate::setmaps::{validate_step_counts, PlConvexFunction, ProblemSpec, SetValuedMap};

/// Tolerance passed to the nearest-point iteration in [`trajectory_residual`].
pub const HULL_TOL: f64 = 1e-12;

/// Velocity selection rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Largest chain slack over all of `F(x_{k+1})`.
    Exhaustive,
    /// Support maximizer in direction `x_{k+1} − x_0`, checked and backed by
    /// exhaustive search.
    Support,
    /// Nearest velocity to `v_k` keeping `⟨x_{k+1} − x_0, v − v_k⟩ ≥ 0`,
    /// backed by exhaustive search.
    #[default]
    Inertial,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Exhaustive => "exhaustive",
            Strategy::Support => "support",
            Strategy::Inertial => "inertial",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Strategy::Exhaustive),
            "support" => Ok(Strategy::Support),
            "inertial" => Ok(Strategy::Inertial),
            other => Err(Error::Validation(format!(
                "unknown strategy `{other}` (expected exhaustive, support or inertial)"
            ))),
        }
    }
}

/// One polygon node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub t: f64,
    pub x: Vector,
    pub v: Vector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    nodes: Vec<Node>,
    step: f64,
    strategy: Strategy,
    fallbacks: usize,
}

impl Trajectory {
    /// Wraps hand-built nodes. Only shape is checked: at least one node,
    /// `t_0 = 0`, equal dimensions.
    pub fn from_nodes(nodes: Vec<Node>, step: f64, strategy: Strategy) -> Result<Self> {
        let first = nodes
            .first()
            .ok_or_else(|| Error::Precondition("a trajectory needs at least one node".into()))?;
        if first.t != 0.0 {
            return Err(Error::Precondition("trajectory must start at t = 0".into()));
        }
        let n = first.x.dim();
        for node in &nodes {
            check_dim(n, node.x.dim())?;
            check_dim(n, node.v.dim())?;
        }
        Ok(Self {
            nodes,
            step,
            strategy,
            fallbacks: 0,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].x.dim()
    }

    /// Number of steps, one less than the number of nodes.
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn anchor(&self) -> GraphPair {
        GraphPair {
            x: self.nodes[0].x.clone(),
            v: self.nodes[0].v.clone(),
        }
    }

    pub fn final_node(&self) -> &Node {
        self.nodes.last().expect("nonempty")
    }

    /// Steps where the chosen strategy had to defer to exhaustive search.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    /// The node pairs `(x_k, v_k)` as a graph sequence.
    pub fn sequence(&self) -> CmSequence {
        CmSequence::from_pairs(
            self.nodes
                .iter()
                .map(|n| GraphPair {
                    x: n.x.clone(),
                    v: n.v.clone(),
                })
                .collect(),
        )
        .expect("trajectory nodes are finite with equal dimensions")
    }

    /// CSV with header `t,x0,…,x{n−1},v0,…,v{n−1}` and shortest round-trip
    /// decimals.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..n).map(|i| format!("v{i}")));
        w.write_record(&header).map_err(csv_error)?;
        for node in &self.nodes {
            let mut row = vec![node.t.to_string()];
            row.extend(node.x.coords().iter().map(f64::to_string));
            row.extend(node.v.coords().iter().map(f64::to_string));
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Serialize(e.to_string())
}

/// Replay state for a step where no velocity keeps the node sequence CM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionFailure {
    /// Index of the node that could not be assigned a velocity.
    pub step: usize,
    /// Total step count of the run.
    pub steps: usize,
    pub t: f64,
    pub x: Vector,
    /// The CM sequence through node `step − 1`.
    pub sequence: CmSequence,
    /// Chain slack of every candidate in `F(x)`.
    pub candidates: Vec<(Vector, f64)>,
    pub tol: f64,
}

impl SelectionFailure {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }
}

/// `⌈T/h⌉`, snapping to the nearest integer when `T/h` is within rounding of
/// it.
pub fn step_count(horizon: f64, step: f64) -> usize {
    let ratio = horizon / step;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        (nearest as usize).max(1)
    } else {
        (ratio.ceil() as usize).max(1)
    }
}

fn select(
    strategy: Strategy,
    seq: &CmSequence,
    x: &Vector,
    values: &CompactSet,
    tol: f64,
) -> Result<(Option<Vector>, bool)> {
    match strategy {
        Strategy::Exhaustive => Ok((best_extension(seq, x, values, tol)?, false)),
        Strategy::Support => {
            let pick = support_pick(seq, x, values);
            let pair = GraphPair {
                x: x.clone(),
                v: pick.clone(),
            };
            if chain_slack(&seq.anchor().x, &pair, seq.sum_through(x)) >= -tol {
                Ok((Some(pair.v), false))
            } else {
                Ok((best_extension(seq, x, values, tol)?, true))
            }
        }
        Strategy::Inertial => match inertial_pick(seq, x, values, tol)? {
            Some(v) => Ok((Some(v), false)),
            None => Ok((best_extension(seq, x, values, tol)?, true)),
        },
    }
}

/// Integrates the problem on `[0, T]` with step `h`; the last step is
/// shortened to land on `T`.
///
/// Fails with [`Error::SelectionFailed`] when neither the strategy nor the
/// exhaustive fallback finds a CM continuation.
pub fn euler_solve(spec: &ProblemSpec) -> Result<Trajectory> {
    spec.validate()?;
    let n = step_count(spec.horizon, spec.step);
    solve_steps(spec, n, spec.step)
}

fn solve_steps(spec: &ProblemSpec, n: usize, h: f64) -> Result<Trajectory> {
    let mut seq = CmSequence::anchored(spec.x0.clone(), spec.v0.clone())?;
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(Node {
        t: 0.0,
        x: spec.x0.clone(),
        v: spec.v0.clone(),
    });
    let mut fallbacks = 0;
    for k in 0..n {
        let prev = &nodes[k];
        let t = if k + 1 == n { spec.horizon } else { (k + 1) as f64 * h };
        let x = prev.x.axpy(t - prev.t, &prev.v);
        if !x.is_finite() {
            return Err(Error::NonFinite("trajectory state"));
        }
        let values = spec.map.eval(&x)?;
        let (v, fell_back) = select(spec.strategy, &seq, &x, &values, spec.tol)?;
        let Some(v) = v else {
            let candidates = extension_slacks(&seq, &x, &values)?;
            return Err(Error::SelectionFailed(Box::new(SelectionFailure {
                step: k + 1,
                steps: n,
                t,
                x,
                sequence: seq,
                candidates,
                tol: spec.tol,
            })));
        };
        fallbacks += usize::from(fell_back);
        seq.push(x.clone(), v.clone());
        nodes.push(Node { t, x, v });
    }
    Ok(Trajectory {
        nodes,
        step: h,
        strategy: spec.strategy,
        fallbacks,
    })
}

/// `(max_k dist(v_k, F(x_k)), max_k dist(v_k, conv F(x_k)))`.
pub fn trajectory_residual(traj: &Trajectory, map: &SetValuedMap) -> Result<(f64, f64)> {
    check_dim(map.dim(), traj.dim())?;
    let mut node = 0.0f64;
    let mut hull = 0.0f64;
    for n in &traj.nodes {
        let values = map.eval(&n.x)?;
        let d = dist_to_set(&n.v, &values)?;
        node = node.max(d);
        hull = hull.max(dist_to_hull(&n.v, &values, HULL_TOL)?.min(d));
    }
    Ok((node, hull))
}

/// Chain check of the node sequence.
pub fn trajectory_cm_check(traj: &Trajectory, tol: f64) -> CmCheck {
    verify_cm(&traj.sequence(), tol)
}

/// `f(x_{k+1}) − f(x_k) − (t_{k+1} − t_k)|v_k|²` for each step. Nonnegative
/// up to rounding when every `v_k` is a subgradient of `f` at `x_k`.
pub fn ascent_margins(traj: &Trajectory, f: &PlConvexFunction) -> Result<Vec<f64>> {
    check_dim(f.dim(), traj.dim())?;
    Ok(traj
        .nodes
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            f.value_unchecked(&w[1].x) - f.value_unchecked(&w[0].x) - dt * w[0].v.norm_squared()
        })
        .collect())
}

/// `f(x_{k+1}) ≥ f(x_k) − tol·(t_{k+1} − t_k)` at every step.
pub fn lyapunov_check(traj: &Trajectory, f: &PlConvexFunction, tol: f64) -> Result<bool> {
    check_dim(f.dim(), traj.dim())?;
    Ok(traj.nodes.windows(2).all(|w| {
        let dt = w[1].t - w[0].t;
        f.value_unchecked(&w[1].x) >= f.value_unchecked(&w[0].x) - tol * dt
    }))
}

/// `r / M` with `M` the local bound of `F` on the ball of radius `r` around
/// `x0`: a horizon over which polygons stay in that ball. Reported only.
pub fn suggest_horizon(map: &SetValuedMap, x0: &Vector, radius: f64) -> Result<f64> {
    let m = map.local_bound(x0, radius)?;
    Ok(if m > 0.0 { radius / m } else { f64::INFINITY })
}

/// Sup-distance between two polygons on `[0, T]` whose step counts divide.
/// Both are piecewise linear, so the maximum is attained at a node of the
/// finer one; there the coarse polygon is `x_i + (t − t_i)·v_i`.
pub fn sup_distance(coarse: &Trajectory, fine: &Trajectory) -> Result<f64> {
    check_dim(coarse.dim(), fine.dim())?;
    let (nc, nf) = (coarse.steps(), fine.steps());
    if nc == 0 || nf % nc != 0 {
        return Err(Error::Precondition(format!(
            "step count {nf} is not a multiple of {nc}"
        )));
    }
    let r = nf / nc;
    let mut sup = 0.0f64;
    for (j, node) in fine.nodes.iter().enumerate() {
        let i = j / r;
        let c = &coarse.nodes[i];
        let d = if j % r == 0 {
            node.x.distance(&c.x)
        } else {
            node.x.distance(&c.x.axpy(node.t - c.t, &c.v))
        };
        sup = sup.max(d);
    }
    Ok(sup)
}

/// One resolution of a refinement study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineRow {
    pub steps: usize,
    pub h: f64,
    /// Sup-distance to the previous (coarser) polygon; absent on the first row.
    pub sup_distance: Option<f64>,
    pub node_residual: f64,
    pub hull_residual: f64,
    pub cm_holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineTable {
    pub rows: Vec<RefineRow>,
}

impl RefineTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "steps",
            "h",
            "sup_distance",
            "node_residual",
            "hull_residual",
            "cm_holds",
        ])
        .map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                r.steps.to_string(),
                r.h.to_string(),
                r.sup_distance.map(|d| d.to_string()).unwrap_or_default(),
                r.node_residual.to_string(),
                r.hull_residual.to_string(),
                r.cm_holds.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Consecutive sup-distances, coarse to fine.
    pub fn sup_distances(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.sup_distance).collect()
    }
}

/// Solves at `h = T/N` for each count (in parallel) and compares consecutive
/// polygons. Evidence of Cauchy behaviour only.
pub fn refine_study(spec: &ProblemSpec, counts: &[usize]) -> Result<RefineTable> {
    spec.validate()?;
    validate_step_counts(counts)?;
    let runs: Vec<Trajectory> = counts
        .par_iter()
        .map(|&n| solve_steps(spec, n, spec.horizon / n as f64))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(runs.len());
    for (i, traj) in runs.iter().enumerate() {
        let (node_residual, hull_residual) = trajectory_residual(traj, &spec.map)?;
        let sup = if i == 0 {
            None
        } else {
            Some(sup_distance(&runs[i - 1], traj)?)
        };
        rows.push(RefineRow {
            steps: traj.steps(),
            h: traj.step(),
            sup_distance: sup,
            node_residual,
            hull_residual,
            cm_holds: trajectory_cm_check(traj, spec.tol).holds(),
        });
    }
    Ok(RefineTable { rows })
}
