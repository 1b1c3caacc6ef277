//! Support functions and distances for finite point sets.

use diffincl::geometry::{dist_to_hull, dist_to_set, support_argmax, support_value, CompactSet, Vector};

fn main() -> diffincl::Result<()> {
    let square = CompactSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]])?;

    for dir in [[1.0, 0.0], [1.0, 1.0], [-1.0, 2.0]] {
        let dir = Vector::from(dir);
        println!(
            "sigma({dir}) = {} attained at {}",
            support_value(&square, &dir)?,
            support_argmax(&square, &dir)?
        );
    }

    for p in [[0.5, 0.5], [2.0, 0.5], [-1.0, -1.0]] {
        let p = Vector::from(p);
        println!(
            "{p}: to set {:.6}, to hull {:.6}",
            dist_to_set(&p, &square)?,
            dist_to_hull(&p, &square, 1e-12)?
        );
    }
    Ok(())
}
