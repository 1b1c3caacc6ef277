//! The `diffincl` command line.
//!
//! ```text
//! diffincl solve|classify|potential|refine --input <problem.toml> --output <dir>
//!          [--tol r] [--strategy exhaustive|support|inertial] [--grid low:high:n,...]
//!          [--max-length L] [--steps n1,n2,...] [--family trajectory|trivial] [-v]
//! ```
//!
//! | command     | files written to `<dir>`                                    |
//! |-------------|-------------------------------------------------------------|
//! | `solve`     | `trajectory.csv`, `summary.json`                            |
//! | `classify`  | `classify.json`                                             |
//! | `potential` | `g_samples.csv`, `family.json`, `subgradient.csv`           |
//! | `refine`    | `refine.csv`                                                |
//!
//! A failed velocity selection writes `selection_failure.json` instead.
//! `DIFFINCL_CHAIN_BUDGET` overrides the classifier chain budget.
//!
//! Exit codes:
//!
//! | code | meaning                                  |
//! |------|------------------------------------------|
//! | 0    | success (class verdicts are data)         |
//! | 1    | other error                              |
//! | 2    | usage error                              |
//! | 3    | file I/O                                 |
//! | 4    | parse or validation error                |
//! | 5    | velocity selection failed                |
//! | 6    | chain budget exceeded                    |

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::cm::{point_chains, ChainBudget, ClassReport, Classifier};
use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::potential::{g_lower, membership_G, subgradient_test, SequenceFamily};
use crate::setmaps::{parse_problem, GridSpec, ProblemSpec};
use crate::solver::{
    csv_error, euler_solve, refine_study, suggest_horizon, trajectory_cm_check, trajectory_residual, Strategy,
};

pub const BUDGET_ENV: &str = "DIFFINCL_CHAIN_BUDGET";
pub const DEFAULT_REFINE_STEPS: [usize; 5] = [25, 50, 100, 200, 400];

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INVALID: i32 = 4;
pub const EXIT_SELECTION: i32 = 5;
pub const EXIT_BUDGET: i32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CommandName {
    Solve,
    Classify,
    Potential,
    Refine,
}

/// Where the `potential` command takes its sequence family from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum FamilySource {
    /// The node sequence of the solved trajectory and all its prefixes.
    #[default]
    Trajectory,
    /// Only the anchor pair.
    Trivial,
}

#[derive(Clone, Debug, Parser)]
#[command(
    name = "diffincl",
    version,
    about = "Cyclic-monotone Euler polygons for differential inclusions"
)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: CommandName,
    /// Problem file (TOML).
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// Sampling grid as `low:high:count` per axis, comma separated.
    #[arg(long, value_parser = GridSpec::parse, allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,
    #[arg(long)]
    pub max_length: Option<usize>,
    /// Refinement step counts, each dividing the next.
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t)]
    pub family: FamilySource,
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::Parse(_)
        | Error::Validation(_)
        | Error::InvalidGrid(_)
        | Error::MalformedMap(_)
        | Error::NonFinite(_)
        | Error::DimensionMismatch { .. } => EXIT_INVALID,
        Error::SelectionFailed(_) => EXIT_SELECTION,
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        _ => EXIT_OTHER,
    }
}

/// Parses process arguments, runs, and returns the exit code.
pub fn main() -> i32 {
    let config = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&config) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

impl RunConfig {
    /// Reads the problem and applies the command-line overrides.
    pub fn load(&self) -> Result<ProblemSpec> {
        let text = fs::read_to_string(&self.input)?;
        let mut spec = parse_problem(&text)?;
        if let Some(tol) = self.tol {
            spec.tol = tol;
        }
        if let Some(strategy) = self.strategy {
            spec.strategy = strategy;
        }
        if let Some(grid) = &self.grid {
            spec.grid = Some(grid.clone());
        }
        if let Some(l) = self.max_length {
            spec.max_length = Some(l);
        }
        if let Some(steps) = &self.steps {
            spec.steps = Some(steps.clone());
        }
        spec.validate()?;
        Ok(spec)
    }
}

pub fn run(config: &RunConfig) -> Result<()> {
    let spec = config.load()?;
    fs::create_dir_all(&config.output)?;
    match config.command {
        CommandName::Solve => run_solve(&spec, &config.output, config.verbose),
        CommandName::Classify => run_classify(&spec, &config.output, config.verbose),
        CommandName::Potential => run_potential(&spec, config.family, &config.output, config.verbose),
        CommandName::Refine => run_refine(&spec, &config.output, config.verbose),
    }
}

fn grid_of(spec: &ProblemSpec) -> GridSpec {
    spec.grid.clone().unwrap_or_else(|| GridSpec::around(&spec.x0, 1.0, 3))
}

/// Writes the replay state beside the outputs before passing the error on.
fn record_failure(err: Error, dir: &Path) -> Error {
    if let Error::SelectionFailed(f) = &err {
        match f.to_json() {
            Ok(text) => {
                if let Err(io) = fs::write(dir.join("selection_failure.json"), text + "\n") {
                    return io.into();
                }
            }
            Err(e) => return e,
        }
    }
    err
}

#[derive(Serialize)]
struct FinalState<'a> {
    t: f64,
    x: &'a Vector,
    v: &'a Vector,
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    strategy: Strategy,
    horizon: f64,
    h: f64,
    steps: usize,
    #[serde(rename = "final")]
    final_state: FinalState<'a>,
    node_residual: f64,
    hull_residual: f64,
    cm_holds: bool,
    first_violation: Option<usize>,
    fallbacks: usize,
    /// `r / M` for the largest ball around x0 inside the grid box.
    suggested_horizon: Option<f64>,
}

pub fn run_solve(spec: &ProblemSpec, dir: &Path, verbose: u8) -> Result<()> {
    let traj = euler_solve(spec).map_err(|e| record_failure(e, dir))?;
    let (node_residual, hull_residual) = trajectory_residual(&traj, &spec.map)?;
    let check = trajectory_cm_check(&traj, spec.tol);
    let grid = grid_of(spec);
    let radius = (0..spec.x0.dim())
        .map(|i| (spec.x0[i] - grid.low[i]).min(grid.high[i] - spec.x0[i]))
        .fold(f64::INFINITY, f64::min);
    let suggested_horizon = if radius > 0.0 && radius.is_finite() {
        Some(suggest_horizon(&spec.map, &spec.x0, radius)?).filter(|t| t.is_finite())
    } else {
        None
    };
    let last = traj.final_node();
    let summary = SolveSummary {
        strategy: traj.strategy(),
        horizon: spec.horizon,
        h: traj.step(),
        steps: traj.steps(),
        final_state: FinalState {
            t: last.t,
            x: &last.x,
            v: &last.v,
        },
        node_residual,
        hull_residual,
        cm_holds: check.holds(),
        first_violation: check.first_violation,
        fallbacks: traj.fallbacks(),
        suggested_horizon,
    };
    fs::write(dir.join("trajectory.csv"), traj.to_csv()?)?;
    write_json(&dir.join("summary.json"), &summary)?;
    if verbose > 0 {
        eprintln!(
            "solve: {} steps, final x = {}, node residual {node_residual:e}, cm {}",
            traj.steps(),
            last.x,
            check.holds()
        );
    }
    Ok(())
}

fn chain_budget() -> Result<ChainBudget> {
    match std::env::var(BUDGET_ENV) {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map(ChainBudget)
            .map_err(|e| Error::Validation(format!("{BUDGET_ENV}=`{text}`: {e}"))),
        Err(_) => Ok(ChainBudget::DEFAULT),
    }
}

pub fn run_classify(spec: &ProblemSpec, dir: &Path, verbose: u8) -> Result<()> {
    let grid = grid_of(spec);
    let samples = grid.points()?;
    let max_length = spec.max_length.unwrap_or(2);
    let budget = chain_budget()?;
    let descriptor = grid
        .counts
        .iter()
        .enumerate()
        .map(|(i, n)| format!("{}:{}:{n}", grid.low[i], grid.high[i]))
        .collect::<Vec<_>>()
        .join(",");
    let c = Classifier::new(spec.tol)
        .with_max_length(max_length)
        .with_budget(budget)
        .with_descriptor(format!("grid {descriptor}"));
    let chains = point_chains(&samples, max_length, budget)?;
    let reports: Vec<ClassReport> = vec![
        c.monotone(&spec.map, &samples)?,
        c.weakly_monotone(&spec.map, &samples)?,
        c.cyclic_monotone(&spec.map, &samples)?,
        c.weakly_cyclic_monotone(&spec.map, &samples)?,
        c.support_condition(&spec.map, &chains)?,
    ];
    write_json(&dir.join("classify.json"), &reports)?;
    if verbose > 0 {
        for r in &reports {
            eprintln!("{r}");
        }
    }
    Ok(())
}

pub fn run_potential(spec: &ProblemSpec, source: FamilySource, dir: &Path, verbose: u8) -> Result<()> {
    let mut fam = SequenceFamily::new(spec.x0.clone(), spec.v0.clone())?.with_tol(spec.tol);
    if source == FamilySource::Trajectory {
        let traj = euler_solve(spec).map_err(|e| record_failure(e, dir))?;
        fam.grow(&traj.sequence())?;
    }
    let probes = grid_of(spec).points()?;
    let n = spec.x0.dim();

    let mut g = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    header.push("g".into());
    g.write_record(&header).map_err(csv_error)?;
    for y in &probes {
        let mut row: Vec<String> = y.coords().iter().map(f64::to_string).collect();
        row.push(g_lower(&fam, y)?.to_string());
        g.write_record(&row).map_err(csv_error)?;
    }

    let mut sub = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    header.extend((0..n).map(|i| format!("v{i}")));
    header.extend(["accepted".into(), "subgradient".into()]);
    sub.write_record(&header).map_err(csv_error)?;
    let (mut accepted, mut failed) = (0usize, 0usize);
    for x in &probes {
        for v in spec.map.eval(x)?.iter() {
            let ok = membership_G(&fam, &spec.map, x, v, spec.tol)?;
            let verdict = if ok {
                accepted += 1;
                let pass = subgradient_test(&fam, &spec.map, x, v, &probes, spec.tol)?;
                failed += usize::from(!pass);
                pass.to_string()
            } else {
                String::new()
            };
            let mut row: Vec<String> = x.coords().iter().map(f64::to_string).collect();
            row.extend(v.coords().iter().map(f64::to_string));
            row.push(ok.to_string());
            row.push(verdict);
            sub.write_record(&row).map_err(csv_error)?;
        }
    }

    fs::write(dir.join("g_samples.csv"), finish_csv(g)?)?;
    fs::write(dir.join("subgradient.csv"), finish_csv(sub)?)?;
    fs::write(dir.join("family.json"), fam.to_json()? + "\n")?;
    if verbose > 0 {
        eprintln!(
            "potential: {} members, {accepted} accepted pairs, {failed} subgradient failures",
            fam.len()
        );
    }
    Ok(())
}

pub fn run_refine(spec: &ProblemSpec, dir: &Path, verbose: u8) -> Result<()> {
    let counts = spec.steps.clone().unwrap_or_else(|| DEFAULT_REFINE_STEPS.to_vec());
    let table = refine_study(spec, &counts).map_err(|e| record_failure(e, dir))?;
    fs::write(dir.join("refine.csv"), table.to_csv()?)?;
    if verbose > 0 {
        for r in &table.rows {
            eprintln!("N = {}: sup distance {:?}, cm {}", r.steps, r.sup_distance, r.cm_holds);
        }
    }
    Ok(())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}
