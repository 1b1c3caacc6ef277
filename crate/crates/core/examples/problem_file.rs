//! Reads a TOML problem, prints its canonical form and solves it.
//!
//! Usage: `cargo run --example problem_file -- [path]`. Defaults to
//! `problems/abs.toml`.

use diffincl::setmaps::parse_problem;
use diffincl::solver::{euler_solve, suggest_horizon};

fn main() -> diffincl::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/problems/abs.toml").to_string());
    let text = std::fs::read_to_string(&path)?;
    let spec = parse_problem(&text)?;
    println!("{}", spec.to_toml()?);
    println!("suggested horizon {}", suggest_horizon(&spec.map, &spec.x0, 1.0)?);
    match euler_solve(&spec) {
        Ok(traj) => println!("{} steps, final {}", traj.steps(), traj.final_node().x),
        Err(diffincl::Error::SelectionFailed(f)) => {
            println!("stuck at step {} (t = {})\n{}", f.step, f.t, f.to_json()?)
        }
        Err(e) => return Err(e),
    }
    Ok(())
}
