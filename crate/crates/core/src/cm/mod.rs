//! Cyclic-monotone sequences, their extension rules, and sample-based
//! classification of maps into monotonicity classes.
//!
//! A graph sequence `(x_0, v_0), …, (x_k, v_k)` is cyclic monotone (CM) when
//!
//! ```text
//! ⟨x_m − x_0, v_m⟩ ≥ Σ_{i=1}^{m} ⟨x_i − x_{i−1}, v_{i−1}⟩   for m = 1..k.
//! ```
//!
//! All checks compare the slack `⟨x_m − x_0, v_m⟩ − s_m` against `−tol`.

mod classify;
mod report;
mod sequence;

pub use classify::{
    check_condition4, classify_cyclic_monotone, classify_monotone, classify_wcm, classify_weakly_monotone,
    point_chains, ChainBudget, Classifier,
};
pub use report::{ClassReport, MonotonicityClass, Verdict, Witness};
pub use sequence::{CmSequence, GraphPair};

pub(crate) use sequence::chain_slack;

use std::cmp::Ordering;

use crate::error::{check_dim, Result};
use crate::geometry::{nearest_point, support_argmax_unchecked, CompactSet, Vector};
use crate::setmaps::SetValuedMap;

/// Outcome of [`verify_cm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CmCheck {
    pub first_violation: Option<usize>,
}

impl CmCheck {
    #[inline]
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks the chain inequality at every index `m = 1..k`. One-pair sequences
/// are CM by definition.
pub fn verify_cm(seq: &CmSequence, tol: f64) -> CmCheck {
    let first_violation = (1..seq.len()).find(|&m| seq.slack(m) < -tol);
    CmCheck { first_violation }
}

/// Chain slack each candidate would have as the next pair at `x_next`.
pub fn extension_slacks(seq: &CmSequence, x_next: &Vector, values: &CompactSet) -> Result<Vec<(Vector, f64)>> {
    check_dim(seq.dim(), x_next.dim())?;
    check_dim(seq.dim(), values.dim())?;
    let x0 = &seq.anchor().x;
    let sum = seq.sum_through(x_next);
    Ok(values
        .iter()
        .map(|v| {
            let pair = GraphPair {
                x: x_next.clone(),
                v: v.clone(),
            };
            (v.clone(), chain_slack(x0, &pair, sum))
        })
        .collect())
}

/// Maximum-slack continuation from a precomputed value set.
pub(crate) fn best_extension(
    seq: &CmSequence,
    x_next: &Vector,
    values: &CompactSet,
    tol: f64,
) -> Result<Option<Vector>> {
    let slacks = extension_slacks(seq, x_next, values)?;
    let best = slacks.into_iter().reduce(|best, cand| match cand.1.total_cmp(&best.1) {
        Ordering::Greater => cand,
        Ordering::Equal if cand.0.lex_cmp(&best.0) == Ordering::Less => cand,
        _ => best,
    });
    Ok(best.filter(|(_, s)| *s >= -tol).map(|(v, _)| v))
}

/// Searches all of `F(x_next)` for a CM continuation and returns the
/// candidate of largest slack (ties lexicographic), or `None` if every
/// candidate breaks the chain by more than `tol`.
pub fn extend_exhaustive(seq: &CmSequence, x_next: &Vector, map: &SetValuedMap, tol: f64) -> Result<Option<Vector>> {
    check_dim(seq.dim(), x_next.dim())?;
    let values = map.eval(x_next)?;
    best_extension(seq, x_next, &values, tol)
}

/// The support-function selection: a maximizer of `⟨x_next − x_0, ·⟩` over
/// `F(x_next)`. When `x_next = x_0` the direction vanishes and the point of
/// `F(x_next)` nearest `v_k` is returned instead.
///
/// The result is a CM continuation whenever the map satisfies the support
/// inequality of [`check_condition4`] along the sequence; otherwise callers
/// must re-verify.
pub fn extend_support(seq: &CmSequence, x_next: &Vector, map: &SetValuedMap) -> Result<Vector> {
    check_dim(seq.dim(), x_next.dim())?;
    let values = map.eval(x_next)?;
    Ok(support_pick(seq, x_next, &values).clone())
}

pub(crate) fn support_pick<'a>(seq: &CmSequence, x_next: &Vector, values: &'a CompactSet) -> &'a Vector {
    let dir = x_next - &seq.anchor().x;
    if dir.is_zero() {
        nearest_point(values, &seq.last().v)
    } else {
        support_argmax_unchecked(values, &dir)
    }
}

/// The inertial selection: among `v ∈ F(x_next)` with
/// `⟨x_next − x_0, v − v_k⟩ ≥ −tol`, the one nearest `v_k` (ties
/// lexicographic) whose extension passes the chain check.
///
/// With exact data and `tol = 0` the first candidate always passes, since the
/// new chain slack equals the inertial slack plus the previous chain slack.
/// Under rounding the chain check is what is guaranteed.
pub fn extend_inertial(seq: &CmSequence, x_next: &Vector, map: &SetValuedMap, tol: f64) -> Result<Option<Vector>> {
    check_dim(seq.dim(), x_next.dim())?;
    let values = map.eval(x_next)?;
    inertial_pick(seq, x_next, &values, tol)
}

pub(crate) fn inertial_pick(
    seq: &CmSequence,
    x_next: &Vector,
    values: &CompactSet,
    tol: f64,
) -> Result<Option<Vector>> {
    let x0 = &seq.anchor().x;
    let vk = &seq.last().v;
    let dir = x_next - x0;
    let mut candidates: Vec<(&Vector, f64)> = values
        .iter()
        .filter(|v| dir.dot(&(*v - vk)) >= -tol)
        .map(|v| (v, v.distance(vk)))
        .collect();
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.lex_cmp(b.0)));
    let sum = seq.sum_through(x_next);
    for (v, _) in candidates {
        let pair = GraphPair {
            x: x_next.clone(),
            v: v.clone(),
        };
        if chain_slack(x0, &pair, sum) >= -tol {
            return Ok(Some(pair.v));
        }
    }
    Ok(None)
}
