//! Runs every monotonicity classifier over a few sampled maps.

use diffincl::cm::{ClassReport, Classifier};
use diffincl::geometry::{CompactSet, Vector};
use diffincl::setmaps::{constant_map, linear_map, pl_subdifferential_map, sample_grid, AffinePiece, PlConvexFunction};

fn summary(name: &str, reports: &[ClassReport]) {
    println!("{name}");
    for r in reports {
        println!("  {:?}: {}", r.class, if r.holds() { "holds" } else { "fails" });
        if let Some(w) = &r.witness {
            println!("    witness {}", serde_json::to_string(w).unwrap());
        }
    }
}

fn main() -> diffincl::Result<()> {
    let line = sample_grid(&Vector::from([-1.0]), &Vector::from([1.0]), &[5])?;
    let plane = sample_grid(&Vector::from([-1.0, -1.0]), &Vector::from([1.0, 1.0]), &[3, 3])?;
    let classifier = Classifier::new(1e-9).with_max_length(3);

    let pm1 = constant_map(CompactSet::from_rows(&[vec![-1.0], vec![1.0]])?);
    let abs = pl_subdifferential_map(PlConvexFunction::new(vec![
        AffinePiece::new([1.0], 0.0),
        AffinePiece::new([-1.0], 0.0),
    ])?)?;
    let rot = linear_map(vec![Vector::from([0.0, -1.0]), Vector::from([1.0, 0.0])])?;

    for (name, map, samples) in [
        ("constant {-1, 1}", &pm1, &line),
        ("d|x|", &abs, &line),
        ("rotation", &rot, &plane),
    ] {
        let reports = vec![
            classifier.monotone(map, samples)?,
            classifier.weakly_monotone(map, samples)?,
            classifier.cyclic_monotone(map, samples)?,
            classifier.weakly_cyclic_monotone(map, samples)?,
        ];
        summary(name, &reports);
    }
    Ok(())
}
