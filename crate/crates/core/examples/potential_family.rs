//! Builds the lower potential from a family of CM sequences and probes
//! the relaxed selection.

use diffincl::cm::CmSequence;
use diffincl::geometry::{CompactSet, Vector};
use diffincl::potential::{g_lower, g_of_sequence, membership_G, select_G, subgradient_test, SequenceFamily};
use diffincl::setmaps::{constant_map, sample_grid};

fn show(v: &Option<Vector>) -> String {
    v.as_ref().map_or("none".into(), Vector::to_string)
}

fn main() -> diffincl::Result<()> {
    let map = constant_map(CompactSet::from_rows(&[vec![-1.0], vec![1.0]])?);
    let mut fam = SequenceFamily::new([0.0], [1.0])?.with_tol(0.0);

    let right = CmSequence::anchored([0.0], [1.0])?.with_pair([1.0].into(), [1.0].into())?;
    let back = right.with_pair([-1.0].into(), [-1.0].into())?;
    println!("g(back, 0.25) = {}", g_of_sequence(&back, &Vector::from([0.25]))?);
    fam.grow(&right)?;
    fam.grow(&back)?;
    println!("{} members", fam.len());

    let grid = sample_grid(&Vector::from([-1.0]), &Vector::from([2.0]), &[7])?;
    for x in &grid {
        let g = g_lower(&fam, x)?;
        let v = select_G(&fam, &map, x, 0.0)?;
        print!("x = {x}  g = {g}  select {}", show(&v));
        if let Some(v) = v {
            let sub = subgradient_test(&fam, &map, x, &v, &grid, 0.0)?;
            print!("  subgradient {sub}");
        }
        println!();
    }
    println!(
        "(-0.5, -1) accepted: {}",
        membership_G(&fam, &map, &[-0.5].into(), &[-1.0].into(), 0.0)?
    );

    let json = fam.to_json()?;
    let back = SequenceFamily::from_json(&json)?;
    assert_eq!(back.len(), fam.len());
    Ok(())
}
