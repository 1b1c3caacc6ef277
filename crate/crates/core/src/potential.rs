//! Finite-family convex potential and the cyclic-monotone submap it induces.
//!
//! Each CM sequence `S = ((x_0, v_0), …, (x_k, v_k))` defines the affine
//! function
//!
//! ```text
//! g(S, x) = ⟨x − x_k, v_k⟩ + Σ_{i=1}^{k} ⟨x_i − x_{i−1}, v_{i−1}⟩ .
//! ```
//!
//! The potential is the supremum of these over all CM sequences anchored at
//! `(x_0, v_0)`. A [`SequenceFamily`] holds finitely many of them, so
//! [`g_lower`] is a convex piecewise-affine lower bound of that supremum that
//! can only increase as the family grows. Correspondingly [`membership_G`]
//! accepts a superset of the true submap value: a `true` answer is necessary
//! for membership, not sufficient.

use serde::{Deserialize, Serialize};

use crate::cm::{chain_slack, verify_cm, CmSequence, GraphPair};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{nearest_point, support_argmax_unchecked, Vector};
use crate::setmaps::SetValuedMap;

pub const DEFAULT_FAMILY_CAP: usize = 4096;

/// `g(S, x)`.
pub fn g_of_sequence(seq: &CmSequence, x: &Vector) -> Result<f64> {
    check_dim(seq.dim(), x.dim())?;
    Ok(seq.sum_through(x))
}

/// Finitely many CM sequences sharing one anchor. The one-pair sequence
/// `[(x_0, v_0)]` is always the first member and is never evicted.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceFamily {
    members: Vec<CmSequence>,
    working_box: Option<(Vector, Vector)>,
    cap: usize,
    tol: f64,
}

impl SequenceFamily {
    /// The trivial family `{[(x0, v0)]}`. Members are admitted when they pass
    /// the chain check at the default tolerance.
    pub fn new(x0: impl Into<Vector>, v0: impl Into<Vector>) -> Result<Self> {
        Ok(Self {
            members: vec![CmSequence::anchored(x0, v0)?],
            working_box: None,
            cap: DEFAULT_FAMILY_CAP,
            tol: crate::DEFAULT_TOL,
        })
    }

    /// Admission tolerance for new members. With a positive tolerance,
    /// `g_lower(x_0)` may exceed zero by at most this amount.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Enables dominance pruning: a member whose affine function lies below
    /// another member's at every vertex of `[low, high]` is dropped.
    /// [`g_lower`] is then unaffected inside the box only.
    pub fn with_working_box(mut self, low: Vector, high: Vector) -> Result<Self> {
        check_dim(self.dim(), low.dim())?;
        check_dim(self.dim(), high.dim())?;
        if (0..low.dim()).any(|i| low[i].partial_cmp(&high[i]).is_none_or(|o| o.is_gt())) {
            return Err(Error::InvalidGrid("working box has low > high".into()));
        }
        self.working_box = Some((low, high));
        Ok(self)
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap.max(1);
        self
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn anchor(&self) -> &GraphPair {
        self.members[0].anchor()
    }

    pub fn members(&self) -> &[CmSequence] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// The member attaining `g_lower(x)`, first in insertion order on ties.
    pub fn best_member(&self, x: &Vector) -> Result<&CmSequence> {
        check_dim(self.dim(), x.dim())?;
        let mut best = &self.members[0];
        let mut best_val = best.sum_through(x);
        for m in &self.members[1..] {
            let val = m.sum_through(x);
            if val > best_val {
                best = m;
                best_val = val;
            }
        }
        Ok(best)
    }

    fn vertices(&self) -> Option<Vec<Vector>> {
        let (low, high) = self.working_box.as_ref()?;
        let n = low.dim();
        Some(
            (0..1usize << n)
                .map(|mask| {
                    (0..n)
                        .map(|i| if mask >> i & 1 == 1 { high[i] } else { low[i] })
                        .collect::<Vec<_>>()
                        .into()
                })
                .collect(),
        )
    }

    /// In-place growth; see [`grow_family`].
    pub fn grow(&mut self, seq: &CmSequence) -> Result<()> {
        check_dim(self.dim(), seq.dim())?;
        if seq.anchor() != self.anchor() {
            return Err(Error::AnchorMismatch);
        }
        if let Some(m) = verify_cm(seq, self.tol).first_violation {
            return Err(Error::NotCyclicMonotone(m));
        }
        let vertices = self.vertices();
        for len in 2..=seq.len() {
            let candidate = seq.prefix(len)?;
            if self.members.contains(&candidate) {
                continue;
            }
            if let Some(vs) = &vertices {
                let values: Vec<f64> = vs.iter().map(|v| candidate.sum_through(v)).collect();
                let dominated = |m: &CmSequence| vs.iter().zip(&values).all(|(v, &c)| m.sum_through(v) >= c);
                if self.members.iter().any(dominated) {
                    continue;
                }
                let mut i = 1;
                while i < self.members.len() {
                    let m = &self.members[i];
                    if vs.iter().zip(&values).all(|(v, &c)| m.sum_through(v) <= c) {
                        self.members.remove(i);
                    } else {
                        i += 1;
                    }
                }
            }
            self.members.push(candidate);
            while self.members.len() > self.cap.max(1) {
                self.evict();
            }
        }
        Ok(())
    }

    /// Drops the oldest member dominated everywhere (same slope, lower
    /// offset) by another, else the oldest non-trivial member.
    fn evict(&mut self) {
        if self.members.len() <= 1 {
            return;
        }
        let offset = |s: &CmSequence| s.sum_through(&Vector::zeros(s.dim()));
        let dominated = (1..self.members.len()).find(|&i| {
            let m = &self.members[i];
            self.members
                .iter()
                .enumerate()
                .any(|(j, o)| j != i && o.last().v == m.last().v && offset(o) >= offset(m))
        });
        self.members.remove(dominated.unwrap_or(1));
    }

    pub fn to_json(&self) -> Result<String> {
        let dump = FamilyDump {
            anchor: self.anchor().clone(),
            tol: self.tol,
            cap: self.cap,
            working_box: self.working_box.clone(),
            members: self.members.clone(),
        };
        serde_json::to_string_pretty(&dump).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Rebuilds a family from [`Self::to_json`] output, re-verifying every
    /// member.
    pub fn from_json(text: &str) -> Result<Self> {
        let dump: FamilyDump = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut fam = Self::new(dump.anchor.x, dump.anchor.v)?
            .with_tol(dump.tol)
            .with_cap(dump.cap);
        if let Some((low, high)) = dump.working_box {
            fam = fam.with_working_box(low, high)?;
        }
        if dump.members.first() != fam.members.first() {
            return Err(Error::Parse("first member must be the anchor pair".into()));
        }
        for m in &dump.members[1..] {
            check_dim(fam.dim(), m.dim())?;
            if m.anchor() != fam.anchor() {
                return Err(Error::AnchorMismatch);
            }
            if let Some(i) = verify_cm(m, fam.tol).first_violation {
                return Err(Error::NotCyclicMonotone(i));
            }
        }
        fam.members = dump.members;
        Ok(fam)
    }
}

#[derive(Serialize, Deserialize)]
struct FamilyDump {
    anchor: GraphPair,
    tol: f64,
    cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    working_box: Option<(Vector, Vector)>,
    members: Vec<CmSequence>,
}

/// `max_{S ∈ fam} g(S, x)`.
pub fn g_lower(fam: &SequenceFamily, x: &Vector) -> Result<f64> {
    check_dim(fam.dim(), x.dim())?;
    Ok(fam
        .members
        .iter()
        .map(|m| m.sum_through(x))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Adds `seq` and all of its prefixes. Errors if `seq` is not anchored at the
/// family anchor or fails the chain check at the family tolerance.
pub fn grow_family(fam: &SequenceFamily, seq: &CmSequence) -> Result<SequenceFamily> {
    let mut next = fam.clone();
    next.grow(seq)?;
    Ok(next)
}

/// The support maximizer `v* ∈ F(x)` in direction `x − x_0`, returned when
/// it passes the finite-family membership test. At `x = x_0` the point
/// nearest `v_0` is used.
#[allow(non_snake_case)]
pub fn select_G(fam: &SequenceFamily, map: &SetValuedMap, x: &Vector, tol: f64) -> Result<Option<Vector>> {
    check_dim(fam.dim(), x.dim())?;
    let values = map.eval(x)?;
    let anchor = fam.anchor();
    let dir = x - &anchor.x;
    let pick = if dir.is_zero() {
        nearest_point(&values, &anchor.v)
    } else {
        support_argmax_unchecked(&values, &dir)
    };
    Ok(accepts(fam, x, pick, tol)?.then(|| pick.clone()))
}

fn accepts(fam: &SequenceFamily, x: &Vector, v: &Vector, tol: f64) -> Result<bool> {
    let g = g_lower(fam, x)?;
    let pair = GraphPair {
        x: x.clone(),
        v: v.clone(),
    };
    Ok(chain_slack(&fam.anchor().x, &pair, g) >= -tol)
}

/// `⟨x − x_0, v⟩ ≥ g_lower(fam, x) − tol` for `v ∈ F(x)`.
#[allow(non_snake_case)]
pub fn membership_G(fam: &SequenceFamily, map: &SetValuedMap, x: &Vector, v: &Vector, tol: f64) -> Result<bool> {
    check_dim(fam.dim(), x.dim())?;
    check_dim(fam.dim(), v.dim())?;
    if !map.eval(x)?.contains(v) {
        return Err(Error::NotInSet(v.clone()));
    }
    accepts(fam, x, v, tol)
}

/// Finite-family subgradient inequality for an accepted `(x, v)`.
///
/// Grows the family by the best member at `x` extended with `(x, v)` and
/// checks `g_lower(fam', y) ≥ g_lower(fam, x) + ⟨v, y − x⟩ − tol` at every
/// probe. The inequality holds by construction (for probes inside the
/// working box when pruning is enabled), so `false` indicates a defect.
pub fn subgradient_test(
    fam: &SequenceFamily,
    map: &SetValuedMap,
    x: &Vector,
    v: &Vector,
    probes: &[Vector],
    tol: f64,
) -> Result<bool> {
    if !membership_G(fam, map, x, v, tol)? {
        return Err(Error::Precondition(format!(
            "({x}, {v}) is not accepted by the family relaxation of G"
        )));
    }
    let extended = fam.best_member(x)?.with_pair(x.clone(), v.clone())?;
    let mut grown = fam.clone().with_tol(fam.tol.max(tol));
    grown.grow(&extended)?;
    let gx = g_lower(fam, x)?;
    for y in probes {
        let lhs = g_lower(&grown, y)?;
        let rhs = gx + v.dot(&(y - x));
        if lhs < rhs - tol {
            return Ok(false);
        }
    }
    Ok(true)
}
