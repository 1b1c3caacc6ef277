//! Solves a nonsmooth problem with each selection strategy and writes the
//! inertial polygon as CSV on stdout.

use diffincl::geometry::Vector;
use diffincl::setmaps::{pl_subdifferential_map, AffinePiece, PlConvexFunction, ProblemSpec};
use diffincl::solver::{euler_solve, lyapunov_check, trajectory_cm_check, trajectory_residual, Strategy};

fn main() -> diffincl::Result<()> {
    let f = PlConvexFunction::new(vec![
        AffinePiece::new([1.0, 0.0], 0.0),
        AffinePiece::new([2.0, 1.0], 0.0),
    ])?;
    let map = pl_subdifferential_map(f.clone())?;
    let x0 = Vector::from([0.0, -0.32]);
    let v0 = Vector::from([1.0, 0.0]);

    for strategy in [Strategy::Exhaustive, Strategy::Support, Strategy::Inertial] {
        let spec = ProblemSpec::new(map.clone(), x0.clone(), v0.clone(), 1.0, 0.04, strategy, 1e-9)?;
        let traj = euler_solve(&spec)?;
        let (node, hull) = trajectory_residual(&traj, &map)?;
        eprintln!(
            "{:<10} final {}  residual {node}/{hull}  CM {}  f ascends {}  fallbacks {}",
            strategy.name(),
            traj.final_node().x,
            trajectory_cm_check(&traj, 1e-9).holds(),
            lyapunov_check(&traj, &f, 1e-9)?,
            traj.fallbacks()
        );
        if strategy == Strategy::Inertial {
            traj.write_csv(std::io::stdout())?;
        }
    }
    Ok(())
}
