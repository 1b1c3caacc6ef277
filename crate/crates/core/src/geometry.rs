//! Finite-set Euclidean primitives.
//!
//! Every compact value `F(x)` is carried as a finite point list, so each
//! supremum over a set is an exact maximum over its points. Support values,
//! support maximizers and distances below are therefore exact up to
//! floating-point rounding, with the exception of [`dist_to_hull`], which
//! runs an iterative nearest-point scheme with a certified error bound.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Index, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Iteration cap of the nearest-point scheme in [`dist_to_hull`].
pub const HULL_MAX_ITERATIONS: usize = 10_000;

/// A point or direction in `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Builds a vector, rejecting empty or non-finite input.
    pub fn try_new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("vector"));
        }
        Ok(Self(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Inner product without a dimension check.
    #[inline]
    pub(crate) fn dot(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    #[inline]
    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|c| c * s).collect())
    }

    /// `self + s * dir`, computed coordinate-wise.
    pub fn axpy(&self, s: f64, dir: &Vector) -> Vector {
        Vector(self.0.iter().zip(&dir.0).map(|(a, d)| a + s * d).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    /// Lexicographic order on coordinates (total order on floats).
    pub fn lex_cmp(&self, other: &Vector) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(v: [f64; N]) -> Self {
        Vector(v.to_vec())
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A nonempty finite point set standing in for a compact value of a map.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CompactSet {
    points: Vec<Vector>,
}

impl CompactSet {
    pub fn new(points: Vec<Vector>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptySet)?;
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        for p in &points {
            check_dim(dim, p.dim())?;
            if !p.is_finite() {
                return Err(Error::NonFinite("compact set"));
            }
        }
        Ok(Self { points })
    }

    pub fn singleton(point: Vector) -> Result<Self> {
        Self::new(vec![point])
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| Vector::from(r.clone())).collect())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vector> {
        self.points.iter()
    }

    /// Exact (bitwise up to `-0.0 == 0.0`) membership.
    pub fn contains(&self, v: &Vector) -> bool {
        self.points.iter().any(|p| p == v)
    }

    /// `‖A‖ = max |a|`.
    pub fn norm(&self) -> f64 {
        self.points.iter().map(Vector::norm).fold(0.0, f64::max)
    }

    /// Sorted lexicographically with duplicates removed.
    pub fn canonicalize(&self) -> CompactSet {
        let mut points = self.points.clone();
        points.sort_by(|a, b| a.lex_cmp(b));
        points.dedup_by(|a, b| a == b);
        CompactSet { points }
    }
}

impl<'a> IntoIterator for &'a CompactSet {
    type Item = &'a Vector;
    type IntoIter = std::slice::Iter<'a, Vector>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

impl<'de> Deserialize<'de> for CompactSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let points = Vec::<Vector>::deserialize(d)?;
        CompactSet::new(points).map_err(serde::de::Error::custom)
    }
}

/// Euclidean inner product `⟨u, v⟩`.
pub fn inner(u: &Vector, v: &Vector) -> Result<f64> {
    check_dim(u.dim(), v.dim())?;
    Ok(u.dot(v))
}

/// Support function `δ*(d, A) = max_{a ∈ A} ⟨d, a⟩`.
pub fn support_value(set: &CompactSet, dir: &Vector) -> Result<f64> {
    check_dim(set.dim(), dir.dim())?;
    Ok(support_value_unchecked(set, dir))
}

pub(crate) fn support_value_unchecked(set: &CompactSet, dir: &Vector) -> f64 {
    set.iter().map(|a| dir.dot(a)).fold(f64::NEG_INFINITY, f64::max)
}

/// A point of `set` attaining [`support_value`]; ties go to the
/// lexicographically smallest point.
pub fn support_argmax(set: &CompactSet, dir: &Vector) -> Result<Vector> {
    check_dim(set.dim(), dir.dim())?;
    Ok(support_argmax_unchecked(set, dir).clone())
}

pub(crate) fn support_argmax_unchecked<'a>(set: &'a CompactSet, dir: &Vector) -> &'a Vector {
    let mut best = &set.points[0];
    let mut best_val = dir.dot(best);
    for a in &set.points[1..] {
        let val = dir.dot(a);
        if val > best_val || (val == best_val && a.lex_cmp(best) == Ordering::Less) {
            best = a;
            best_val = val;
        }
    }
    best
}

/// Point of `set` nearest to `target`; ties go to the lexicographically smallest.
pub(crate) fn nearest_point<'a>(set: &'a CompactSet, target: &Vector) -> &'a Vector {
    let mut best = &set.points[0];
    let mut best_d = best.distance(target);
    for a in &set.points[1..] {
        let d = a.distance(target);
        if d < best_d || (d == best_d && a.lex_cmp(best) == Ordering::Less) {
            best = a;
            best_d = d;
        }
    }
    best
}

/// `min_{a ∈ A} |p − a|`.
pub fn dist_to_set(p: &Vector, set: &CompactSet) -> Result<f64> {
    check_dim(set.dim(), p.dim())?;
    Ok(set.iter().map(|a| p.distance(a)).fold(f64::INFINITY, f64::min))
}

/// Distance from `p` to the convex hull of `set`.
///
/// Runs Wolfe's minimum-norm-point iteration on the translated set `A − p`.
/// With iterate `y` and `m = min_j ⟨y, a_j − p⟩`, the separating hyperplane
/// gives the lower bound `max(0, m / |y|)` on the true distance, and `|y|` is
/// an upper bound; iteration stops once their gap is at most `tol`. The
/// returned value is the upper bound `|y|`, which never exceeds
/// [`dist_to_set`] since the iteration starts at the nearest point of `set`
/// and `|y|` is nonincreasing.
pub fn dist_to_hull(p: &Vector, set: &CompactSet, tol: f64) -> Result<f64> {
    check_dim(set.dim(), p.dim())?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Precondition(format!(
            "hull tolerance must be positive, got {tol}"
        )));
    }
    let shifted: Vec<Vector> = set.iter().map(|a| a - p).collect();
    MinNormPoint::new(&shifted).run(tol)
}

struct MinNormPoint<'a> {
    points: &'a [Vector],
    corral: Vec<usize>,
    weights: Vec<f64>,
}

impl<'a> MinNormPoint<'a> {
    fn new(points: &'a [Vector]) -> Self {
        let start = (0..points.len())
            .min_by(|&i, &j| points[i].norm_squared().total_cmp(&points[j].norm_squared()))
            .unwrap_or(0);
        Self {
            points,
            corral: vec![start],
            weights: vec![1.0],
        }
    }

    fn iterate(&self) -> Vector {
        let mut y = Vector::zeros(self.points[0].dim());
        for (&i, &w) in self.corral.iter().zip(&self.weights) {
            y = y.axpy(w, &self.points[i]);
        }
        y
    }

    fn run(mut self, tol: f64) -> Result<f64> {
        let mut gap = f64::INFINITY;
        for _ in 0..HULL_MAX_ITERATIONS {
            let y = self.iterate();
            let ny = y.norm();
            if ny == 0.0 {
                return Ok(0.0);
            }
            let (j, m) = self
                .points
                .iter()
                .enumerate()
                .map(|(j, a)| (j, y.dot(a)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty set");
            let lower = (m / ny).max(0.0);
            gap = ny - lower;
            if gap <= tol {
                return Ok(ny);
            }
            // No descent direction left up to rounding: `y` is optimal.
            if self.corral.contains(&j) || m >= ny * ny * (1.0 - 1e-14) {
                return Ok(ny);
            }
            self.corral.push(j);
            self.weights.push(0.0);
            self.minor_cycle();
        }
        Err(Error::HullNonConvergence {
            iterations: HULL_MAX_ITERATIONS,
            gap,
        })
    }

    /// Moves the weights towards the affine minimizer of the corral, dropping
    /// points whose weight hits zero, until the minimizer is strictly inside.
    fn minor_cycle(&mut self) {
        loop {
            let mu = self.affine_minimizer();
            if mu.iter().all(|&m| m > 1e-14) {
                self.weights = mu;
                return;
            }
            let mut theta = 1.0_f64;
            for (&l, &m) in self.weights.iter().zip(&mu) {
                if m <= 1e-14 && l - m > 0.0 {
                    theta = theta.min(l / (l - m));
                }
            }
            for (l, m) in self.weights.iter_mut().zip(&mu) {
                *l += theta * (m - *l);
            }
            let mut k = 0;
            while k < self.corral.len() {
                if self.weights[k] <= 1e-14 {
                    self.corral.remove(k);
                    self.weights.remove(k);
                } else {
                    k += 1;
                }
            }
            if self.corral.is_empty() {
                // Cannot happen in exact arithmetic; restart from the best vertex.
                let start = MinNormPoint::new(self.points).corral[0];
                self.corral.push(start);
                self.weights.push(1.0);
                return;
            }
            let total: f64 = self.weights.iter().sum();
            self.weights.iter_mut().for_each(|w| *w /= total);
        }
    }

    /// Minimizes `|Σ μ_i a_i|` subject to `Σ μ_i = 1` over the corral.
    fn affine_minimizer(&self) -> Vec<f64> {
        let k = self.corral.len();
        let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
        for (r, &i) in self.corral.iter().enumerate() {
            for (c, &j) in self.corral.iter().enumerate() {
                kkt[(r, c)] = self.points[i].dot(&self.points[j]);
            }
            kkt[(r, k)] = 1.0;
            kkt[(k, r)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(k + 1);
        rhs[k] = 1.0;
        let sol = kkt
            .clone()
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .or_else(|| kkt.svd(true, true).solve(&rhs, 1e-12).ok());
        match sol {
            Some(s) => s.iter().take(k).copied().collect(),
            None => self.weights.clone(),
        }
    }
}
