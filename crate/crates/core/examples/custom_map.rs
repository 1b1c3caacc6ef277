//! A map given by a closure, with a hand-written local bound and an upper
//! semicontinuity probe.

use diffincl::cm::Classifier;
use diffincl::geometry::{CompactSet, Vector};
use diffincl::setmaps::{sample_grid, usc_defect, SetValuedMap};

fn main() -> diffincl::Result<()> {
    // Subdifferential of max(|x|, 1) sampled at its kinks.
    let map = SetValuedMap::from_fn(1, |x: &Vector| {
        let t = x.coords()[0];
        let rows: Vec<Vec<f64>> = if t > 1.0 {
            vec![vec![1.0]]
        } else if t == 1.0 {
            vec![vec![0.0], vec![1.0]]
        } else if t > -1.0 {
            vec![vec![0.0]]
        } else if t == -1.0 {
            vec![vec![-1.0], vec![0.0]]
        } else {
            vec![vec![-1.0]]
        };
        CompactSet::from_rows(&rows)
    })
    .with_local_bound(|_, _| 1.0);

    let approach: Vec<Vector> = (1..=6).map(|k| Vector::from([1.0 + 0.5f64.powi(k)])).collect();
    println!(
        "usc defect at 1: {}",
        usc_defect(&map, &Vector::from([1.0]), &approach)?
    );
    println!("local bound {}", map.local_bound(&Vector::from([0.0]), 2.0)?);

    let samples = sample_grid(&Vector::from([-2.0]), &Vector::from([2.0]), &[9])?;
    let report = Classifier::new(1e-9)
        .with_max_length(3)
        .weakly_cyclic_monotone(&map, &samples)?;
    println!("{}", report.to_json()?);
    Ok(())
}
