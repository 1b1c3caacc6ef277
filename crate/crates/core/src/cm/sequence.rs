use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::Vector;

/// One graph point `(x, v)` with `v ∈ F(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphPair {
    pub x: Vector,
    pub v: Vector,
}

impl GraphPair {
    pub fn new(x: impl Into<Vector>, v: impl Into<Vector>) -> Self {
        Self {
            x: x.into(),
            v: v.into(),
        }
    }
}

/// A finite graph sequence `(x_0, v_0), …, (x_k, v_k)` with cached partial
/// sums `s_m = Σ_{i=1}^{m} ⟨x_i − x_{i−1}, v_{i−1}⟩`, `s_0 = 0`.
///
/// The type does not itself enforce the cyclic-monotone chain; use
/// [`verify_cm`](super::verify_cm). Values are immutable: extension returns a
/// new sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GraphPair>", into = "Vec<GraphPair>")]
pub struct CmSequence {
    pairs: Vec<GraphPair>,
    sums: Vec<f64>,
}

impl CmSequence {
    /// The one-pair sequence `[(x0, v0)]`.
    pub fn anchored(x0: impl Into<Vector>, v0: impl Into<Vector>) -> Result<Self> {
        Self::from_pairs(vec![GraphPair::new(x0, v0)])
    }

    pub fn from_pairs(pairs: Vec<GraphPair>) -> Result<Self> {
        let first = pairs
            .first()
            .ok_or_else(|| Error::Precondition("a sequence needs at least one pair".into()))?;
        let dim = first.x.dim();
        let mut sums = Vec::with_capacity(pairs.len());
        sums.push(0.0);
        for (i, p) in pairs.iter().enumerate() {
            check_dim(dim, p.x.dim())?;
            check_dim(dim, p.v.dim())?;
            if !p.x.is_finite() || !p.v.is_finite() {
                return Err(Error::NonFinite("sequence pair"));
            }
            if i > 0 {
                let prev = &pairs[i - 1];
                sums.push(sums[i - 1] + increment(prev, &p.x));
            }
        }
        Ok(Self { pairs, sums })
    }

    /// Appends `(x, v)`, returning the longer sequence.
    pub fn with_pair(&self, x: Vector, v: Vector) -> Result<Self> {
        check_dim(self.dim(), x.dim())?;
        check_dim(self.dim(), v.dim())?;
        let mut next = self.clone();
        next.sums.push(self.sum_through(&x));
        next.pairs.push(GraphPair { x, v });
        Ok(next)
    }

    pub(crate) fn push(&mut self, x: Vector, v: Vector) {
        let sum = self.sum_through(&x);
        self.sums.push(sum);
        self.pairs.push(GraphPair { x, v });
    }

    /// The first `len` pairs.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.pairs.len() {
            return Err(Error::Precondition(format!(
                "prefix length {len} outside 1..={}",
                self.pairs.len()
            )));
        }
        Ok(Self {
            pairs: self.pairs[..len].to_vec(),
            sums: self.sums[..len].to_vec(),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.pairs[0].x.dim()
    }

    /// Number of pairs, `k + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pairs(&self) -> &[GraphPair] {
        &self.pairs
    }

    #[inline]
    pub fn anchor(&self) -> &GraphPair {
        &self.pairs[0]
    }

    #[inline]
    pub fn last(&self) -> &GraphPair {
        self.pairs.last().expect("nonempty")
    }

    /// Cached `s_m`.
    #[inline]
    pub fn partial_sum(&self, m: usize) -> f64 {
        self.sums[m]
    }

    pub fn partial_sums(&self) -> &[f64] {
        &self.sums
    }

    /// `s_k + ⟨x − x_k, v_k⟩`: the partial sum the sequence would carry
    /// after appending a pair at `x`.
    #[inline]
    pub(crate) fn sum_through(&self, x: &Vector) -> f64 {
        self.sums[self.sums.len() - 1] + increment(self.last(), x)
    }

    /// Chain slack at index `m`: `⟨x_m − x_0, v_m⟩ − s_m`.
    pub fn slack(&self, m: usize) -> f64 {
        chain_slack(&self.pairs[0].x, &self.pairs[m], self.sums[m])
    }
}

#[inline]
fn increment(prev: &GraphPair, x: &Vector) -> f64 {
    (x - &prev.x).dot(&prev.v)
}

/// `⟨x − x_0, v⟩ − s`, the single formula behind every chain check.
#[inline]
pub(crate) fn chain_slack(x0: &Vector, pair: &GraphPair, sum: f64) -> f64 {
    (&pair.x - x0).dot(&pair.v) - sum
}

impl TryFrom<Vec<GraphPair>> for CmSequence {
    type Error = Error;
    fn try_from(pairs: Vec<GraphPair>) -> Result<Self> {
        Self::from_pairs(pairs)
    }
}

impl From<CmSequence> for Vec<GraphPair> {
    fn from(seq: CmSequence) -> Self {
        seq.pairs
    }
}
