//! Set-valued analysis for differential inclusions `ẋ ∈ F(x)` with compact,
//! nonconvex, finite-set values.
//!
//! - [`geometry`]: vectors, finite point sets, support functions, distances.
//! - [`setmaps`]: set-valued maps and TOML problem documents.
//! - [`cm`]: cyclic-monotone sequences, extension rules, classifiers.
//! - [`potential`]: the finite-family convex potential and its submap.
//! - [`solver`]: Euler polygons with CM-preserving velocity selection.
//! - [`cli`]: the `diffincl` command line.
//!
//! ```
//! use diffincl::geometry::CompactSet;
//! use diffincl::setmaps::{constant_map, ProblemSpec};
//! use diffincl::solver::{euler_solve, trajectory_cm_check, Strategy};
//!
//! let map = constant_map(CompactSet::from_rows(&[vec![-1.0], vec![1.0]]).unwrap());
//! let spec = ProblemSpec::new(map, [0.0].into(), [1.0].into(), 1.0, 0.1, Strategy::Inertial, 1e-9).unwrap();
//! let traj = euler_solve(&spec).unwrap();
//! assert_eq!(traj.final_node().x[0], 1.0);
//! assert!(trajectory_cm_check(&traj, 0.0).holds());
//! ```

pub mod cli;
pub mod cm;
mod error;
pub mod geometry;
pub mod potential;
pub mod setmaps;
pub mod solver;

pub use error::{Error, Result};

/// Default comparison tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
