//! Refinement study: sup distance between successive Euler polygons.

use diffincl::geometry::Vector;
use diffincl::setmaps::{pl_subdifferential_map, AffinePiece, PlConvexFunction, ProblemSpec};
use diffincl::solver::{refine_study, Strategy};

fn main() -> diffincl::Result<()> {
    let f = PlConvexFunction::new(vec![
        AffinePiece::new([1.0, 0.0], 0.0),
        AffinePiece::new([2.0, 1.0], 0.0),
    ])?;
    let map = pl_subdifferential_map(f)?;
    let spec = ProblemSpec::new(
        map,
        Vector::from([0.0, -0.32]),
        Vector::from([1.0, 0.0]),
        1.0,
        0.04,
        Strategy::Inertial,
        1e-9,
    )?;
    let table = refine_study(&spec, &[25, 50, 100, 200, 400])?;
    table.write_csv(std::io::stdout())?;
    let d = table.sup_distances();
    let monotone = d.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    eprintln!("non-increasing: {monotone}");
    Ok(())
}
