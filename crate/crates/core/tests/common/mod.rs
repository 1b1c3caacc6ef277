//! Test oracles and map corpus shared by the integration targets.
//!
//! The oracles deliberately avoid the library's own arithmetic: the chain
//! check works in exact integers, the hull distance enumerates affine faces.
#![allow(dead_code, clippy::needless_range_loop)]

use diffincl::cm::{CmSequence, GraphPair};
use diffincl::geometry::{CompactSet, Vector};
use diffincl::setmaps::{
    constant_map, linear_map, pl_subdifferential_map, sample_grid, table_map, AffinePiece, Constraint,
    PlConvexFunction, Region, Relation, SetValuedMap,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type IntPair = (Vec<i64>, Vec<i64>);

fn idot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn isub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// First index `m ≥ 1` where `⟨x_m − x_0, v_m⟩ < Σ_{i≤m} ⟨x_i − x_{i−1}, v_{i−1}⟩`,
/// re-summing from scratch at every `m`.
pub fn oracle_first_violation(seq: &[IntPair]) -> Option<usize> {
    let x0 = &seq[0].0;
    (1..seq.len()).find(|&m| {
        let lhs = idot(&isub(&seq[m].0, x0), &seq[m].1);
        let rhs: i64 = (1..=m)
            .map(|i| idot(&isub(&seq[i].0, &seq[i - 1].0), &seq[i - 1].1))
            .sum();
        lhs < rhs
    })
}

pub fn to_sequence(seq: &[IntPair]) -> CmSequence {
    CmSequence::from_pairs(
        seq.iter()
            .map(|(x, v)| GraphPair::new(to_vector(x), to_vector(v)))
            .collect(),
    )
    .unwrap()
}

pub fn to_vector(a: &[i64]) -> Vector {
    a.iter().map(|&c| c as f64).collect::<Vec<_>>().into()
}

pub fn lattice_point(rng: &mut ChaCha8Rng, dim: usize, r: i64) -> Vec<i64> {
    (0..dim).map(|_| rng.gen_range(-r..=r)).collect()
}

pub fn random_lattice_sequence(rng: &mut ChaCha8Rng, dim: usize, len: usize) -> Vec<IntPair> {
    (0..len)
        .map(|_| (lattice_point(rng, dim, 3), lattice_point(rng, dim, 3)))
        .collect()
}

/// A random CM sequence on the lattice, built pair by pair with the
/// integer oracle deciding which candidates are admissible.
pub fn random_cm_sequence(rng: &mut ChaCha8Rng, dim: usize, len: usize) -> Vec<IntPair> {
    let mut seq = vec![(lattice_point(rng, dim, 3), lattice_point(rng, dim, 3))];
    while seq.len() < len {
        let x = lattice_point(rng, dim, 3);
        let mut added = false;
        for _ in 0..64 {
            let v = lattice_point(rng, dim, 3);
            seq.push((x.clone(), v));
            if oracle_first_violation(&seq).is_none() {
                added = true;
                break;
            }
            seq.pop();
        }
        if !added {
            // A multiple of x − x_0 large enough to meet the chain sum. At
            // x = x_0 any velocity works, since the sum is minus the previous slack.
            let d = isub(&x, &seq[0].0);
            let last = seq.last().unwrap();
            let sum: i64 = seq
                .windows(2)
                .map(|w| idot(&isub(&w[1].0, &w[0].0), &w[0].1))
                .sum::<i64>()
                + idot(&isub(&x, &last.0), &last.1);
            let dd = idot(&d, &d);
            let v = if dd == 0 {
                lattice_point(rng, dim, 3)
            } else {
                let k = (sum.max(0) + dd - 1) / dd;
                d.iter().map(|c| c * k).collect()
            };
            seq.push((x, v));
        }
    }
    assert_eq!(oracle_first_violation(&seq), None);
    seq
}

/// Distance from `p` to the convex hull of `points` by enumerating every
/// affinely independent subset and projecting onto its affine hull.
pub fn oracle_hull_distance(p: &[f64], points: &[Vec<f64>]) -> f64 {
    let n = p.len();
    let m = points.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << m) {
        let subset: Vec<&Vec<f64>> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| &points[i]).collect();
        if subset.len() > n + 1 {
            continue;
        }
        if let Some(lambda) = affine_projection(p, &subset) {
            if lambda.iter().all(|&l| l >= -1e-12) {
                let q: Vec<f64> = (0..n)
                    .map(|d| subset.iter().zip(&lambda).map(|(s, l)| s[d] * l).sum())
                    .collect();
                let dist = q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                best = best.min(dist);
            }
        }
    }
    best
}

/// Barycentric coordinates of the projection of `p` onto the affine hull of
/// `subset`, or `None` if the subset is affinely dependent.
fn affine_projection(p: &[f64], subset: &[&Vec<f64>]) -> Option<Vec<f64>> {
    let k = subset.len() - 1;
    if k == 0 {
        return Some(vec![1.0]);
    }
    let base = subset[0];
    let dirs: Vec<Vec<f64>> = subset[1..]
        .iter()
        .map(|s| s.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let rhs: Vec<f64> = dirs
        .iter()
        .map(|d| d.iter().zip(p).zip(base).map(|((a, q), b)| a * (q - b)).sum())
        .collect();
    let mut gram: Vec<Vec<f64>> = dirs
        .iter()
        .map(|a| dirs.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect())
        .collect();
    let mut b = rhs;
    // Gaussian elimination with partial pivoting.
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| gram[i][col].abs().total_cmp(&gram[j][col].abs()))?;
        if gram[piv][col].abs() < 1e-10 {
            return None;
        }
        gram.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..k {
            let f = gram[row][col] / gram[col][col];
            for c in col..k {
                gram[row][c] -= f * gram[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut mu = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| gram[row][c] * mu[c]).sum();
        mu[row] = (b[row] - s) / gram[row][row];
    }
    let mut lambda = vec![1.0 - mu.iter().sum::<f64>()];
    lambda.extend(mu);
    Some(lambda)
}

pub fn set(rows: &[&[f64]]) -> CompactSet {
    CompactSet::new(rows.iter().map(|r| Vector::from(r.to_vec())).collect()).unwrap()
}

pub fn pl(pieces: &[(&[f64], f64)]) -> PlConvexFunction {
    PlConvexFunction::new(pieces.iter().map(|(s, b)| AffinePiece::new(s.to_vec(), *b)).collect()).unwrap()
}

pub fn abs_fn() -> PlConvexFunction {
    pl(&[(&[1.0], 0.0), (&[-1.0], 0.0)])
}

pub fn kink_fn() -> PlConvexFunction {
    pl(&[(&[1.0], 0.0), (&[-2.0], 0.0)])
}

pub fn max_xy0_fn() -> PlConvexFunction {
    pl(&[(&[1.0, 0.0], 0.0), (&[0.0, 1.0], 0.0), (&[0.0, 0.0], 0.0)])
}

pub fn tilted_fn() -> PlConvexFunction {
    pl(&[(&[1.0, 0.0], 0.0), (&[2.0, 1.0], 0.0)])
}

pub fn rotation() -> SetValuedMap {
    linear_map(vec![[0.0, -1.0].into(), [1.0, 0.0].into()]).unwrap()
}

pub fn identity() -> SetValuedMap {
    linear_map(vec![[1.0, 0.0].into(), [0.0, 1.0].into()]).unwrap()
}

pub fn sign_table() -> SetValuedMap {
    table_map(vec![
        Region::new(vec![Constraint::new([1.0], Relation::Lt, 0.0)], set(&[&[-1.0]])),
        Region::new(vec![Constraint::new([1.0], Relation::Eq, 0.0)], set(&[&[-1.0], &[1.0]])),
        Region::new(vec![], set(&[&[1.0]])),
    ])
    .unwrap()
}

/// `F(0) = {0, 1}`, `F(x) = {0}` elsewhere: `[(0, 1)]` has no CM
/// continuation at any `x > 0`.
pub fn non_wcm() -> SetValuedMap {
    table_map(vec![
        Region::new(vec![Constraint::new([1.0], Relation::Eq, 0.0)], set(&[&[0.0], &[1.0]])),
        Region::new(vec![], set(&[&[0.0]])),
    ])
    .unwrap()
}

pub struct Named {
    pub name: &'static str,
    pub map: SetValuedMap,
    pub samples: Vec<Vector>,
}

pub fn grid_1d() -> Vec<Vector> {
    sample_grid(&[-1.0].into(), &[1.0].into(), &[5]).unwrap()
}

pub fn grid_2d() -> Vec<Vector> {
    sample_grid(&[-1.0, -1.0].into(), &[1.0, 1.0].into(), &[3, 3]).unwrap()
}

/// Maps for the classification hierarchy.
pub fn class_corpus() -> Vec<Named> {
    let one = |name, map| Named {
        name,
        map,
        samples: grid_1d(),
    };
    let two = |name, map| Named {
        name,
        map,
        samples: grid_2d(),
    };
    vec![
        one("constant {-1, 1}", constant_map(set(&[&[-1.0], &[1.0]]))),
        two(
            "constant {(1,0), (0,1)}",
            constant_map(set(&[&[1.0, 0.0], &[0.0, 1.0]])),
        ),
        one("subdifferential |x|", pl_subdifferential_map(abs_fn()).unwrap()),
        one(
            "subdifferential max(x, -2x)",
            pl_subdifferential_map(kink_fn()).unwrap(),
        ),
        two(
            "subdifferential max(x, y, 0)",
            pl_subdifferential_map(max_xy0_fn()).unwrap(),
        ),
        two("rotation", rotation()),
        two("identity", identity()),
        one("sign table", sign_table()),
        one("non-WCM", non_wcm()),
    ]
}

/// Piecewise-linear subdifferential problems: `(name, f, x0, v0)`.
pub fn pl_corpus() -> Vec<(&'static str, PlConvexFunction, Vector, Vector)> {
    vec![
        ("|x| from 0", abs_fn(), [0.0].into(), [1.0].into()),
        ("|x| from 0 leftwards", abs_fn(), [0.0].into(), [-1.0].into()),
        ("max(x, -2x) from 0", kink_fn(), [0.0].into(), [-2.0].into()),
        ("max(x, -2x) from 0.5", kink_fn(), [0.5].into(), [1.0].into()),
        (
            "max(x, y, 0) from origin",
            max_xy0_fn(),
            [0.0, 0.0].into(),
            [1.0, 0.0].into(),
        ),
        (
            "max(x, y, 0) from (-0.5, 0.25)",
            max_xy0_fn(),
            [-0.5, 0.25].into(),
            [0.0, 1.0].into(),
        ),
        (
            "max(x, 2x + y) from (0, -0.32)",
            tilted_fn(),
            [0.0, -0.32].into(),
            [1.0, 0.0].into(),
        ),
    ]
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-1.0..1.0)
}
