//! Acceptance suite: one line per criterion, nonzero exit if any fails.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use common::*;
use diffincl::cm::{
    check_condition4, classify_cyclic_monotone, classify_wcm, extend_exhaustive, extend_support, point_chains,
    verify_cm, ChainBudget, Classifier, CmSequence, Witness,
};
use diffincl::geometry::Vector;
use diffincl::potential::{g_lower, grow_family, membership_G, subgradient_test, SequenceFamily};
use diffincl::setmaps::{
    constant_map, pl_subdifferential_map, sample_grid, PlConvexFunction, ProblemSpec, SetValuedMap,
};
use diffincl::solver::{ascent_margins, euler_solve, refine_study, trajectory_cm_check, trajectory_residual, Strategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

const TOL: f64 = 1e-9;
const BIG_BUDGET: ChainBudget = ChainBudget(100_000_000);

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion {
            id: 1,
            name: "chain check agrees with integer oracle",
            limit: secs(5),
            run: cm_oracle,
        },
        Criterion {
            id: 2,
            name: "prefixes of CM sequences are CM",
            limit: secs(5),
            run: prefix_closed,
        },
        Criterion {
            id: 3,
            name: "constant {-1, 1} is WCM but not cyclic monotone",
            limit: secs(10),
            run: two_point_constant,
        },
        Criterion {
            id: 4,
            name: "class hierarchy over the map corpus",
            limit: secs(60),
            run: hierarchy,
        },
        Criterion {
            id: 5,
            name: "inertial extensions stay CM",
            limit: None,
            run: inertial_soundness,
        },
        Criterion {
            id: 6,
            name: "support selection under the support inequality",
            limit: None,
            run: support_selection,
        },
        Criterion {
            id: 7,
            name: "potential convexity, anchoring and growth",
            limit: None,
            run: potential_properties,
        },
        Criterion {
            id: 8,
            name: "accepted pairs pass the subgradient test",
            limit: None,
            run: subgradient_soundness,
        },
        Criterion {
            id: 9,
            name: "solver exactness on forced cases",
            limit: None,
            run: solver_exactness,
        },
        Criterion {
            id: 10,
            name: "subgradient-flow growth along polygons",
            limit: None,
            run: flow_growth,
        },
        Criterion {
            id: 11,
            name: "refinement sup-distances shrink",
            limit: secs(30),
            run: refinement,
        },
        Criterion {
            id: 12,
            name: "CLI runs are byte-identical",
            limit: None,
            run: determinism,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(detail), Some(limit)) if elapsed > limit => Err(format!("{detail}; exceeded {limit:?}")),
            (r, _) => r,
        };
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} [{:>2}] {}: {detail} ({:.2}s)",
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn cm_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut violating = 0;
    for i in 0..1000 {
        let dim = rng.gen_range(1..=3);
        let len = rng.gen_range(1..=6);
        let raw = if i % 2 == 0 {
            random_lattice_sequence(&mut rng, dim, len)
        } else {
            random_cm_sequence(&mut rng, dim, len)
        };
        let ours = verify_cm(&to_sequence(&raw), 0.0).first_violation;
        let oracle = oracle_first_violation(&raw);
        ensure!(
            ours == oracle,
            "sequence {i}: library {ours:?}, oracle {oracle:?} for {raw:?}"
        );
        violating += usize::from(oracle.is_some());
    }
    Ok(format!("1000 sequences, {violating} violating, all verdicts identical"))
}

fn prefix_closed() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut prefixes = 0;
    for i in 0..500 {
        let dim = rng.gen_range(1..=3);
        let len = rng.gen_range(1..=6);
        let seq = to_sequence(&random_cm_sequence(&mut rng, dim, len));
        ensure!(verify_cm(&seq, 0.0).holds(), "sequence {i} is not CM");
        for k in 1..=seq.len() {
            let p = ok(seq.prefix(k))?;
            ensure!(verify_cm(&p, 0.0).holds(), "sequence {i}: prefix {k} fails");
            prefixes += 1;
        }
    }
    Ok(format!("500 sequences, {prefixes} prefixes checked"))
}

fn two_point_constant() -> Outcome {
    let map = constant_map(set(&[&[-1.0], &[1.0]]));
    let grid: Vec<Vector> = [-1.0, 0.0, 1.0].iter().map(|&x| [x].into()).collect();
    let wcm = ok(classify_wcm(&map, &grid, 3, TOL))?;
    ensure!(wcm.holds(), "WCM verdict: {wcm}");
    let cyc = ok(classify_cyclic_monotone(&map, &grid, 2, TOL))?;
    ensure!(!cyc.holds(), "cyclic verdict: {cyc}");
    let w = cyc.witness.as_ref().ok_or("fails verdict without witness")?;
    ensure!(ok(w.replay(&map, TOL))?, "witness does not replay: {w:?}");
    let Witness::Chain { sequence } = w else {
        return Err(format!("unexpected witness {w:?}"));
    };
    let pairs: Vec<String> = sequence.pairs().iter().map(|p| format!("({}, {})", p.x, p.v)).collect();
    Ok(format!(
        "WCM holds at L=3; cyclic fails at L=2 with {}",
        pairs.join(" -> ")
    ))
}

fn hierarchy() -> Outcome {
    let corpus = class_corpus();
    ensure!(corpus.len() >= 8, "corpus too small");
    let mut rows = Vec::new();
    let mut rotation_witness = None;
    for m in &corpus {
        let c = Classifier::new(TOL).with_max_length(3).with_budget(BIG_BUDGET);
        let mono = ok(c.monotone(&m.map, &m.samples))?;
        let wm = ok(c.weakly_monotone(&m.map, &m.samples))?;
        let cyc = ok(c.cyclic_monotone(&m.map, &m.samples))?;
        let wcm = ok(c.weakly_cyclic_monotone(&m.map, &m.samples))?;
        for r in [&mono, &wm, &cyc, &wcm] {
            if let Some(w) = &r.witness {
                ensure!(
                    ok(w.replay(&m.map, TOL))?,
                    "{}: {} witness does not replay",
                    m.name,
                    r.class
                );
            }
        }
        ensure!(!cyc.holds() || wcm.holds(), "{}: cyclic holds but WCM fails", m.name);
        ensure!(
            !wcm.holds() || wm.holds(),
            "{}: WCM holds but weakly monotone fails",
            m.name
        );
        if m.name == "rotation" {
            ensure!(mono.holds(), "rotation: monotone fails");
            ensure!(!cyc.holds(), "rotation: cyclic holds");
            let Some(Witness::Chain { sequence }) = &cyc.witness else {
                return Err("rotation: no chain witness".into());
            };
            ensure!(sequence.len() == 3, "rotation witness has {} pairs", sequence.len());
            let xs: Vec<String> = sequence.pairs().iter().map(|p| p.x.to_string()).collect();
            rotation_witness = Some(xs.join(" -> "));
        }
        let v = |r: &diffincl::cm::ClassReport| if r.holds() { 'y' } else { 'n' };
        rows.push(format!("{} {}{}{}{}", m.name, v(&cyc), v(&wcm), v(&wm), v(&mono)));
    }
    Ok(format!(
        "{} maps [cyclic/WCM/weak/monotone]: {}; rotation fails at {}",
        corpus.len(),
        rows.join(", "),
        rotation_witness.ok_or("rotation missing")?
    ))
}

fn inertial_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for i in 0..1000 {
        let dim = rng.gen_range(1..=3);
        let len = rng.gen_range(1..=5);
        let mut raw = random_cm_sequence(&mut rng, dim, len);
        let x0 = raw[0].0.clone();
        let vk = raw.last().unwrap().1.clone();
        let x = lattice_point(&mut rng, dim, 3);
        let dir: Vec<i64> = x.iter().zip(&x0).map(|(a, b)| a - b).collect();
        let mut v = vk.clone();
        for _ in 0..32 {
            let cand = lattice_point(&mut rng, dim, 3);
            let eq5: i64 = dir
                .iter()
                .zip(cand.iter().zip(&vk))
                .map(|(d, (c, p))| d * (c - p))
                .sum();
            if eq5 >= 0 {
                v = cand;
                break;
            }
        }
        raw.push((x, v));
        let seq = to_sequence(&raw);
        ensure!(
            verify_cm(&seq, 0.0).holds(),
            "triple {i}: appended sequence fails: {raw:?}"
        );
    }
    Ok("1000 appended sequences pass at tol 0".into())
}

fn support_selection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let max_length = 3;
    let mut eligible = Vec::new();
    let mut excluded = Vec::new();
    for m in class_corpus() {
        let chains = ok(point_chains(&m.samples, max_length, BIG_BUDGET))?;
        if ok(check_condition4(&m.map, &chains, TOL))?.holds() {
            eligible.push(m);
        } else {
            excluded.push(m.name);
        }
    }
    ensure!(!eligible.is_empty(), "no map satisfies the support inequality");
    let mut extensions = 0usize;
    let mut failures = 0usize;
    while extensions < 10_000 {
        for m in &eligible {
            let x0 = m.samples[rng.gen_range(0..m.samples.len())].clone();
            let f0 = ok(m.map.eval(&x0))?;
            let v0 = f0.points()[rng.gen_range(0..f0.len())].clone();
            let mut seq = ok(CmSequence::anchored(x0, v0))?;
            for _ in 0..max_length {
                let x = m.samples[rng.gen_range(0..m.samples.len())].clone();
                let v = ok(extend_support(&seq, &x, &m.map))?;
                seq = ok(seq.with_pair(x, v))?;
                extensions += 1;
                if !verify_cm(&seq, TOL).holds() {
                    failures += 1;
                }
            }
        }
    }
    ensure!(
        failures == 0,
        "{failures} of {extensions} support extensions broke the chain"
    );
    let names: Vec<&str> = eligible.iter().map(|m| m.name).collect();
    Ok(format!(
        "{extensions} extensions, 0 failures on [{}]; inequality fails for [{}]",
        names.join(", "),
        excluded.join(", ")
    ))
}

struct FamilyCase {
    map: SetValuedMap,
    fam: SequenceFamily,
    probes: Vec<Vector>,
}

fn lattice_probes(dim: usize) -> Vec<Vector> {
    if dim == 1 {
        sample_grid(&[-3.0].into(), &[3.0].into(), &[25]).unwrap()
    } else {
        sample_grid(&[-3.0, -3.0].into(), &[3.0, 3.0].into(), &[7, 7]).unwrap()
    }
}

/// A random walk on lattice points anchored at the family anchor: support
/// selection where it keeps the chain, exhaustive search otherwise.
fn lattice_walk(
    rng: &mut ChaCha8Rng,
    map: &SetValuedMap,
    anchor: &diffincl::cm::GraphPair,
) -> Result<CmSequence, String> {
    let dim = map.dim();
    let mut seq = ok(CmSequence::anchored(anchor.x.clone(), anchor.v.clone()))?;
    for _ in 0..rng.gen_range(1..=5) {
        let x = to_vector(&lattice_point(rng, dim, 3));
        let v = ok(extend_support(&seq, &x, map))?;
        let next = ok(seq.with_pair(x.clone(), v))?;
        if verify_cm(&next, 0.0).holds() {
            seq = next;
            continue;
        }
        match ok(extend_exhaustive(&seq, &x, map, 0.0))? {
            Some(v) => seq = ok(seq.with_pair(x, v))?,
            None => break,
        }
    }
    Ok(seq)
}

fn family_corpus() -> Result<Vec<FamilyCase>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut maps = vec![constant_map(set(&[&[-1.0], &[1.0]]))];
    for f in [abs_fn(), kink_fn(), max_xy0_fn(), tilted_fn()] {
        maps.push(ok(pl_subdifferential_map(f))?);
    }
    let mut out = Vec::new();
    for map in maps {
        let dim = map.dim();
        let anchors: Vec<Vector> = if dim == 1 {
            (-2..=2).map(|i| [i as f64].into()).collect()
        } else {
            ok(sample_grid(&[-2.0, -2.0].into(), &[2.0, 2.0].into(), &[3, 3]))?
        };
        for x0 in anchors {
            for v0 in ok(map.eval(&x0))?.iter() {
                let mut fam = ok(SequenceFamily::new(x0.clone(), v0.clone()))?.with_tol(0.0);
                let anchor = fam.anchor().clone();
                for _ in 0..6 {
                    let walk = lattice_walk(&mut rng, &map, &anchor)?;
                    fam = ok(grow_family(&fam, &walk))?;
                }
                // A dyadic-step polygon keeps the arithmetic exact.
                let spec = ok(ProblemSpec::new(
                    map.clone(),
                    x0.clone(),
                    v0.clone(),
                    1.0,
                    1.0 / 64.0,
                    Strategy::Inertial,
                    0.0,
                ))?;
                let traj = ok(euler_solve(&spec))?;
                fam = ok(grow_family(&fam, &traj.sequence()))?;
                out.push(FamilyCase {
                    map: map.clone(),
                    fam,
                    probes: lattice_probes(dim),
                });
            }
        }
    }
    Ok(out)
}

fn potential_properties() -> Outcome {
    let cases = family_corpus()?;
    for (i, c) in cases.iter().enumerate() {
        let g0 = ok(g_lower(&c.fam, &c.fam.anchor().x))?;
        ensure!(g0 == 0.0, "family {i}: g_lower(x0) = {g0:e}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let c = &cases[rng.gen_range(0..cases.len())];
        let n = c.map.dim();
        let a: Vector = (0..n).map(|_| 3.0 * random_unit(&mut rng)).collect::<Vec<_>>().into();
        let b: Vector = (0..n).map(|_| 3.0 * random_unit(&mut rng)).collect::<Vec<_>>().into();
        let mid: Vector = (0..n).map(|i| 0.5 * (a[i] + b[i])).collect::<Vec<_>>().into();
        let slack = 0.5 * (ok(g_lower(&c.fam, &a))? + ok(g_lower(&c.fam, &b))?) - ok(g_lower(&c.fam, &mid))?;
        worst = worst.min(slack);
        ensure!(slack >= -1e-9, "midpoint slack {slack:e} at {a}, {b}");
    }

    let mut grown_ops = 0;
    for k in 0..100 {
        let c = &cases[rng.gen_range(0..cases.len())];
        let n = c.map.dim();
        let mut fam = c.fam.clone();
        let boxed = k % 2 == 1;
        if boxed {
            fam = ok(fam.with_working_box(vec![-3.0; n].into(), vec![3.0; n].into()))?;
        }
        let walk = lattice_walk(&mut rng, &c.map, fam.anchor())?;
        let grown = ok(grow_family(&fam, &walk))?;
        for _ in 0..50 {
            let y: Vector = (0..n).map(|_| 3.0 * random_unit(&mut rng)).collect::<Vec<_>>().into();
            let (before, after) = (ok(g_lower(&fam, &y))?, ok(g_lower(&grown, &y))?);
            ensure!(after >= before, "growth lowered g at {y}: {before} -> {after}");
        }
        let g0 = ok(g_lower(&grown, &grown.anchor().x))?;
        ensure!(g0 == 0.0, "grown family has g_lower(x0) = {g0:e}");
        grown_ops += 1;
    }
    Ok(format!(
        "{} families anchored at 0; worst midpoint slack {worst:e} over 1000 pairs; {grown_ops} growths x 50 probes monotone",
        cases.len()
    ))
}

fn subgradient_soundness() -> Outcome {
    let cases = family_corpus()?;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut min_probes = usize::MAX;
    for c in &cases {
        min_probes = min_probes.min(c.probes.len());
        for x in &c.probes {
            for v in ok(c.map.eval(x))?.iter() {
                if !ok(membership_G(&c.fam, &c.map, x, v, TOL))? {
                    rejected += 1;
                    continue;
                }
                accepted += 1;
                ensure!(
                    ok(subgradient_test(&c.fam, &c.map, x, v, &c.probes, TOL))?,
                    "subgradient test fails at x = {x}, v = {v}"
                );
            }
        }
    }
    ensure!(accepted >= 1000, "only {accepted} accepted pairs");
    ensure!(min_probes >= 20, "only {min_probes} probes");
    Ok(format!(
        "{accepted} accepted pairs ({rejected} rejected) over {} families, at least {min_probes} probes each",
        cases.len()
    ))
}

fn solver_exactness() -> Outcome {
    let c = [0.3, -0.7];
    let map = constant_map(set(&[&c]));
    let mut worst = 0.0f64;
    for strategy in [Strategy::Exhaustive, Strategy::Support, Strategy::Inertial] {
        let spec = ok(ProblemSpec::new(
            map.clone(),
            [0.1, 0.2].into(),
            c.into(),
            1.0,
            0.01,
            strategy,
            TOL,
        ))?;
        let traj = ok(euler_solve(&spec))?;
        for n in traj.nodes() {
            for i in 0..2 {
                worst = worst.max((n.x[i] - ([0.1, 0.2][i] + n.t * c[i])).abs());
            }
        }
        ensure!(
            trajectory_cm_check(&traj, TOL).holds(),
            "constant map: chain check fails ({strategy:?})"
        );
        let (node, _) = ok(trajectory_residual(&traj, &map))?;
        ensure!(node == 0.0, "constant map: node residual {node}");
    }
    ensure!(worst < 1e-12, "constant map: node error {worst:e}");

    let sign = sign_table();
    let spec = ok(ProblemSpec::new(
        sign.clone(),
        [0.0].into(),
        [1.0].into(),
        1.0,
        0.01,
        Strategy::Inertial,
        TOL,
    ))?;
    let traj = ok(euler_solve(&spec))?;
    ensure!(traj.steps() == 100, "sign map: {} steps", traj.steps());
    for n in traj.nodes() {
        ensure!(n.x[0] == n.t, "sign map: x = {} at t = {}", n.x[0], n.t);
    }
    ensure!(trajectory_cm_check(&traj, 0.0).holds(), "sign map: chain check fails");
    let (node, hull) = ok(trajectory_residual(&traj, &sign))?;
    ensure!(node == 0.0 && hull == 0.0, "sign map: residuals {node}, {hull}");
    Ok(format!(
        "constant map node error {worst:e}; sign map x_k = t_k at all 101 nodes"
    ))
}

fn pl_spec(f: &PlConvexFunction, x0: &Vector, v0: &Vector, h: f64, strategy: Strategy) -> Result<ProblemSpec, String> {
    let map = ok(pl_subdifferential_map(f.clone()))?;
    ok(ProblemSpec::new(map, x0.clone(), v0.clone(), 1.0, h, strategy, TOL))
}

fn flow_growth() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut steps = 0;
    for (name, f, x0, v0) in pl_corpus() {
        for strategy in [Strategy::Exhaustive, Strategy::Support, Strategy::Inertial] {
            let traj = ok(euler_solve(&pl_spec(&f, &x0, &v0, 1e-2, strategy)?))?;
            let margins = ok(ascent_margins(&traj, &f))?;
            for (k, m) in margins.iter().enumerate() {
                ensure!(*m >= -1e-9, "{name} ({strategy:?}): margin {m:e} at step {k}");
                worst = worst.min(*m);
            }
            steps += margins.len();
        }
    }
    Ok(format!("{steps} steps, smallest margin {worst:e}"))
}

fn refinement() -> Outcome {
    let counts = [25, 50, 100, 200, 400];
    let mut lines = Vec::new();
    for (name, f, x0, v0) in pl_corpus() {
        let table = ok(refine_study(&pl_spec(&f, &x0, &v0, 1e-2, Strategy::Inertial)?, &counts))?;
        let d = table.sup_distances();
        ensure!(d.len() == 4, "{name}: {} distances", d.len());
        for w in d.windows(2) {
            // Rounding-level distances are compared with a small floor.
            ensure!(w[1] <= w[0] + 1e-12, "{name}: sup-distances {d:?} increase");
        }
        ensure!(
            table.rows.iter().all(|r| r.cm_holds && r.node_residual == 0.0),
            "{name}: run defect"
        );
        if d.iter().any(|&x| x > 1e-12) {
            let shown: Vec<String> = d.iter().map(|x| format!("{x:.3e}")).collect();
            lines.push(format!("{name}: {}", shown.join(" ≥ ")));
        }
    }
    Ok(format!(
        "N = 25..400; {}; other cases at rounding level",
        lines.join("; ")
    ))
}

fn run_cli(args: &[&str], dir: &Path) -> Result<i32, String> {
    let status = ok(Command::new(env!("CARGO_BIN_EXE_diffincl"))
        .args(args)
        .arg("--output")
        .arg(dir)
        .stderr(Stdio::null())
        .status())?;
    Ok(status.code().unwrap_or(-1))
}

fn snapshot(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for sub in ok(fs::read_dir(dir))? {
        let sub = ok(sub)?.path();
        for entry in ok(fs::read_dir(&sub))? {
            let path = ok(entry)?.path();
            let rel = path.strip_prefix(dir).unwrap().display().to_string();
            files.push((rel, ok(fs::read(&path))?));
        }
    }
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let problems = Path::new(env!("CARGO_MANIFEST_DIR")).join("problems");
    let tmp = ok(tempfile::tempdir())?;
    let runs = [
        ("tilted.toml", "solve"),
        ("tilted.toml", "classify"),
        ("tilted.toml", "potential"),
        ("tilted.toml", "refine"),
        ("constant_pm1.toml", "classify"),
        ("rotation.toml", "classify"),
        ("abs.toml", "potential"),
        ("stuck.toml", "solve"),
    ];
    let mut snaps = Vec::new();
    for round in ["a", "b"] {
        let root = tmp.path().join(round);
        let mut codes = Vec::new();
        for (i, (file, cmd)) in runs.iter().enumerate() {
            let input = problems.join(file);
            let out = root.join(format!("{i}-{cmd}"));
            let code = run_cli(&[cmd, "--input", input.to_str().unwrap()], &out)?;
            codes.push(code);
        }
        ensure!(
            codes[..7].iter().all(|&c| c == 0) && codes[7] == 5,
            "unexpected exit codes {codes:?}"
        );
        snaps.push(snapshot(&root)?);
    }
    let (a, b) = (&snaps[0], &snaps[1]);
    ensure!(a.len() == b.len(), "file counts differ: {} vs {}", a.len(), b.len());
    for ((na, ba), (nb, bb)) in a.iter().zip(b) {
        ensure!(na == nb && ba == bb, "{na} differs from {nb}");
    }
    let bytes: usize = a.iter().map(|(_, b)| b.len()).sum();
    Ok(format!(
        "{} runs, {} files, {bytes} bytes identical",
        runs.len(),
        a.len()
    ))
}
