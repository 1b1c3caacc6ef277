//! Brute-force classification over finite samples.
//!
//! Verdicts are relative to the sample points (and, for the chain-based
//! classes, to the maximal length). A `Fails` verdict always carries a
//! witness that [`Witness::replay`] reproduces; a `Holds` verdict is evidence,
//! not a certificate.

use rayon::prelude::*;

use super::report::support_slack;
use super::{best_extension, chain_slack, ClassReport, CmSequence, GraphPair, MonotonicityClass, Witness};
use crate::error::{Error, Result};
use crate::geometry::{CompactSet, Vector};
use crate::setmaps::SetValuedMap;

/// Cap on the number of chains one classification call may evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainBudget(pub u64);

impl ChainBudget {
    pub const DEFAULT: ChainBudget = ChainBudget(1_000_000);

    fn check(self, required: u128) -> Result<()> {
        if required > self.0 as u128 {
            Err(Error::BudgetExceeded { required, cap: self.0 })
        } else {
            Ok(())
        }
    }
}

impl Default for ChainBudget {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Shared settings for the classifiers.
#[derive(Clone, Debug)]
pub struct Classifier {
    pub tol: f64,
    pub max_length: usize,
    pub budget: ChainBudget,
    descriptor: Option<String>,
}

impl Default for Classifier {
    fn default() -> Self {
        Self {
            tol: crate::DEFAULT_TOL,
            max_length: 2,
            budget: ChainBudget::DEFAULT,
            descriptor: None,
        }
    }
}

struct Graph {
    values: Vec<(Vector, CompactSet)>,
    pairs: Vec<GraphPair>,
}

impl Graph {
    fn sample(map: &SetValuedMap, samples: &[Vector]) -> Result<Self> {
        let mut values = Vec::with_capacity(samples.len());
        let mut pairs = Vec::new();
        for x in samples {
            let fx = map.eval(x)?;
            pairs.extend(fx.iter().map(|v| GraphPair {
                x: x.clone(),
                v: v.clone(),
            }));
            values.push((x.clone(), fx));
        }
        Ok(Self { values, pairs })
    }
}

/// `Σ_{m=1}^{max_len} base^{m+1}`, saturating.
fn chain_count(base: usize, max_len: usize) -> u128 {
    let b = base as u128;
    let mut total: u128 = 0;
    let mut power = b;
    for _ in 0..max_len {
        power = power.saturating_mul(b);
        total = total.saturating_add(power);
    }
    total
}

impl Classifier {
    pub fn new(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn with_max_length(mut self, max_length: usize) -> Self {
        self.max_length = max_length;
        self
    }

    pub fn with_budget(mut self, budget: ChainBudget) -> Self {
        self.budget = budget;
        self
    }

    /// Text recorded as the sample descriptor in reports.
    pub fn with_descriptor(mut self, descriptor: impl Into<String>) -> Self {
        self.descriptor = Some(descriptor.into());
        self
    }

    fn describe(&self, samples: usize) -> String {
        self.descriptor
            .clone()
            .unwrap_or_else(|| format!("{samples} sample points"))
    }

    fn check_length(&self) -> Result<()> {
        if self.max_length == 0 {
            return Err(Error::Precondition("max length must be at least 1".into()));
        }
        Ok(())
    }

    fn check_samples(samples: &[Vector]) -> Result<()> {
        if samples.is_empty() {
            return Err(Error::Precondition("samples must be nonempty".into()));
        }
        Ok(())
    }

    /// `⟨x − y, v_x − v_y⟩ ≥ −tol` over all sample pairs and values.
    pub fn monotone(&self, map: &SetValuedMap, samples: &[Vector]) -> Result<ClassReport> {
        Self::check_samples(samples)?;
        let graph = Graph::sample(map, samples)?;
        self.budget.check((graph.pairs.len() as u128).pow(2))?;
        let mut witness = None;
        'outer: for (i, (x, fx)) in graph.values.iter().enumerate() {
            for (y, fy) in &graph.values[i + 1..] {
                let dx = x - y;
                for vx in fx {
                    for vy in fy {
                        if dx.dot(&(vx - vy)) < -self.tol {
                            witness = Some(Witness::Pair {
                                x: x.clone(),
                                y: y.clone(),
                                vx: vx.clone(),
                                vy: vy.clone(),
                            });
                            break 'outer;
                        }
                    }
                }
            }
        }
        Ok(ClassReport::new(
            MonotonicityClass::Monotone,
            witness,
            self.tol,
            self.describe(samples.len()),
            None,
        ))
    }

    /// For every ordered sample pair `(x, y)` and `v_x ∈ F(x)`, some
    /// `v_y ∈ F(y)` satisfies `⟨x − y, v_x − v_y⟩ ≥ −tol`.
    pub fn weakly_monotone(&self, map: &SetValuedMap, samples: &[Vector]) -> Result<ClassReport> {
        Self::check_samples(samples)?;
        let graph = Graph::sample(map, samples)?;
        self.budget.check((graph.pairs.len() as u128).pow(2))?;
        let mut witness = None;
        'outer: for (i, (x, fx)) in graph.values.iter().enumerate() {
            for (j, (y, fy)) in graph.values.iter().enumerate() {
                if i == j {
                    continue;
                }
                let dx = x - y;
                for vx in fx {
                    if fy.iter().all(|vy| dx.dot(&(vx - vy)) < -self.tol) {
                        witness = Some(Witness::Unanswered {
                            x: x.clone(),
                            y: y.clone(),
                            vx: vx.clone(),
                        });
                        break 'outer;
                    }
                }
            }
        }
        Ok(ClassReport::new(
            MonotonicityClass::WeaklyMonotone,
            witness,
            self.tol,
            self.describe(samples.len()),
            None,
        ))
    }

    /// Every graph sequence of at most `max_length + 1` pairs over the samples
    /// satisfies the chain inequality. Lengths are searched in increasing
    /// order, so a witness is as short as possible.
    pub fn cyclic_monotone(&self, map: &SetValuedMap, samples: &[Vector]) -> Result<ClassReport> {
        Self::check_samples(samples)?;
        self.check_length()?;
        let graph = Graph::sample(map, samples)?;
        let pairs = &graph.pairs;
        self.budget.check(chain_count(pairs.len(), self.max_length))?;
        let mut witness = None;
        for len in 2..=self.max_length + 1 {
            let found = (0..pairs.len()).into_par_iter().find_map_first(|first| {
                let mut idx = vec![first];
                let mut sums = vec![0.0];
                chain_search(pairs, &mut idx, &mut sums, len, self.tol)
            });
            if let Some(idx) = found {
                let seq = CmSequence::from_pairs(idx.iter().map(|&i| pairs[i].clone()).collect())?;
                witness = Some(Witness::Chain { sequence: seq });
                break;
            }
        }
        Ok(ClassReport::new(
            MonotonicityClass::CyclicMonotone,
            witness,
            self.tol,
            self.describe(samples.len()),
            Some(self.max_length),
        ))
    }

    /// Every CM sequence of at most `max_length` pairs over the samples,
    /// anchored at any sample pair, has a CM continuation at every sample.
    pub fn weakly_cyclic_monotone(&self, map: &SetValuedMap, samples: &[Vector]) -> Result<ClassReport> {
        Self::check_samples(samples)?;
        self.check_length()?;
        let graph = Graph::sample(map, samples)?;
        let mut search = WcmSearch {
            graph: &graph,
            tol: self.tol,
            budget: self.budget,
            spent: 0,
        };
        let mut witness = None;
        'depth: for depth in 1..=self.max_length {
            for anchor in &graph.pairs {
                let seq = CmSequence::from_pairs(vec![anchor.clone()])?;
                if let Some(w) = search.run(&seq, depth)? {
                    witness = Some(w);
                    break 'depth;
                }
            }
        }
        Ok(ClassReport::new(
            MonotonicityClass::WeaklyCyclicMonotone,
            witness,
            self.tol,
            self.describe(samples.len()),
            Some(self.max_length),
        ))
    }

    /// The support inequality
    /// `δ*(x_m − x_0, F(x_m)) ≥ Σ_{i=1}^{m} δ*(x_i − x_{i−1}, F(x_{i−1}))`
    /// for each given point sequence, checked at its final index.
    pub fn support_condition(&self, map: &SetValuedMap, sequences: &[Vec<Vector>]) -> Result<ClassReport> {
        if let Some(short) = sequences.iter().find(|s| s.len() < 2) {
            return Err(Error::Precondition(format!(
                "support condition needs at least two points per sequence, got {}",
                short.len()
            )));
        }
        let mut witness = None;
        for points in sequences {
            if support_slack(map, points)? < -self.tol {
                witness = Some(Witness::Points { points: points.clone() });
                break;
            }
        }
        let descriptor = self
            .descriptor
            .clone()
            .unwrap_or_else(|| format!("{} point sequences", sequences.len()));
        Ok(ClassReport::new(
            MonotonicityClass::SupportCondition,
            witness,
            self.tol,
            descriptor,
            None,
        ))
    }
}

fn chain_search(
    pairs: &[GraphPair],
    idx: &mut Vec<usize>,
    sums: &mut Vec<f64>,
    len: usize,
    tol: f64,
) -> Option<Vec<usize>> {
    let x0 = &pairs[idx[0]].x;
    let prev = &pairs[*idx.last().expect("nonempty")];
    let base = *sums.last().expect("nonempty");
    for (j, next) in pairs.iter().enumerate() {
        let sum = base + (&next.x - &prev.x).dot(&prev.v);
        if idx.len() + 1 == len {
            if chain_slack(x0, next, sum) < -tol {
                let mut found = idx.clone();
                found.push(j);
                return Some(found);
            }
        } else {
            idx.push(j);
            sums.push(sum);
            let found = chain_search(pairs, idx, sums, len, tol);
            idx.pop();
            sums.pop();
            if found.is_some() {
                return found;
            }
        }
    }
    None
}

struct WcmSearch<'a> {
    graph: &'a Graph,
    tol: f64,
    budget: ChainBudget,
    spent: u128,
}

impl WcmSearch<'_> {
    fn spend(&mut self, n: usize) -> Result<()> {
        self.spent += n as u128;
        self.budget.check(self.spent)
    }

    fn run(&mut self, seq: &CmSequence, depth: usize) -> Result<Option<Witness>> {
        if seq.len() == depth {
            for (y, fy) in &self.graph.values {
                self.spend(fy.len())?;
                if best_extension(seq, y, fy, self.tol)?.is_none() {
                    return Ok(Some(Witness::Stuck {
                        sequence: seq.clone(),
                        x_next: y.clone(),
                    }));
                }
            }
            return Ok(None);
        }
        for pair in &self.graph.pairs {
            self.spend(1)?;
            let ext = seq.with_pair(pair.x.clone(), pair.v.clone())?;
            if ext.slack(ext.len() - 1) >= -self.tol {
                if let Some(w) = self.run(&ext, depth)? {
                    return Ok(Some(w));
                }
            }
        }
        Ok(None)
    }
}

/// All point sequences over `samples` with 2 to `max_length + 1` points,
/// shortest first.
pub fn point_chains(samples: &[Vector], max_length: usize, budget: ChainBudget) -> Result<Vec<Vec<Vector>>> {
    budget.check(chain_count(samples.len(), max_length))?;
    let mut out = Vec::new();
    let mut level: Vec<Vec<usize>> = (0..samples.len()).map(|i| vec![i]).collect();
    for _ in 0..max_length {
        let mut next = Vec::with_capacity(level.len() * samples.len());
        for chain in &level {
            for j in 0..samples.len() {
                let mut c = chain.clone();
                c.push(j);
                out.push(c.iter().map(|&i| samples[i].clone()).collect());
                next.push(c);
            }
        }
        level = next;
    }
    Ok(out)
}

pub fn classify_monotone(map: &SetValuedMap, samples: &[Vector], tol: f64) -> Result<ClassReport> {
    Classifier::new(tol).monotone(map, samples)
}

pub fn classify_weakly_monotone(map: &SetValuedMap, samples: &[Vector], tol: f64) -> Result<ClassReport> {
    Classifier::new(tol).weakly_monotone(map, samples)
}

pub fn classify_cyclic_monotone(
    map: &SetValuedMap,
    samples: &[Vector],
    max_length: usize,
    tol: f64,
) -> Result<ClassReport> {
    Classifier::new(tol)
        .with_max_length(max_length)
        .cyclic_monotone(map, samples)
}

pub fn classify_wcm(map: &SetValuedMap, samples: &[Vector], max_length: usize, tol: f64) -> Result<ClassReport> {
    Classifier::new(tol)
        .with_max_length(max_length)
        .weakly_cyclic_monotone(map, samples)
}

pub fn check_condition4(map: &SetValuedMap, sequences: &[Vec<Vector>], tol: f64) -> Result<ClassReport> {
    Classifier::new(tol).support_condition(map, sequences)
}
