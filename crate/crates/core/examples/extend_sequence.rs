//! Grows a CM sequence one point at a time with each extension strategy.

use diffincl::cm::{extend_exhaustive, extend_inertial, extend_support, extension_slacks, verify_cm, CmSequence};
use diffincl::geometry::Vector;
use diffincl::setmaps::{pl_subdifferential_map, AffinePiece, PlConvexFunction};

fn show(v: &Option<Vector>) -> String {
    v.as_ref().map_or("none".into(), Vector::to_string)
}

fn main() -> diffincl::Result<()> {
    // max(x, y, 0)
    let f = PlConvexFunction::new(vec![
        AffinePiece::new([1.0, 0.0], 0.0),
        AffinePiece::new([0.0, 1.0], 0.0),
        AffinePiece::new([0.0, 0.0], 0.0),
    ])?;
    let map = pl_subdifferential_map(f)?;
    let path = [[0.5, 0.0], [0.5, 0.5], [1.0, 1.5], [0.0, 2.0]];

    let mut seq = CmSequence::anchored([0.0, 0.0], [1.0, 0.0])?;
    for p in path {
        let x = Vector::from(p);
        let slacks = extension_slacks(&seq, &x, &map.eval(&x)?)?;
        let ex = extend_exhaustive(&seq, &x, &map, 0.0)?;
        let sup = extend_support(&seq, &x, &map)?;
        let inert = extend_inertial(&seq, &x, &map, 0.0)?;
        println!("x = {x}");
        for (v, s) in &slacks {
            println!("  candidate {v} slack {s}");
        }
        println!(
            "  exhaustive {}\n  support {sup}\n  inertial {}",
            show(&ex),
            show(&inert)
        );
        seq = seq.with_pair(x, inert.unwrap_or(sup))?;
    }
    let check = verify_cm(&seq, 0.0);
    println!("{} pairs, CM: {}", seq.len(), check.holds());
    println!("partial sums {:?}", seq.partial_sums());
    Ok(())
}
