//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use dvrp_core::baseline::baseline_cost;
use dvrp_core::baseline::GreedyInsertionSolver;
use dvrp_core::features::{gap_statistic, parse_features_csv, GapConfig};
use dvrp_core::harness::{gain, join_by_name, parse_summaries_csv, solve_once};
use dvrp_core::local_search::{is_two_opt_stable, two_opt, RouteView};
use dvrp_core::pso::{ContinuousSwarm, DiscreteSwarm};
use dvrp_core::selector::fit_ols;
use dvrp_core::synthetic::{Layout, SyntheticSpec};
use dvrp_core::{
    advance, check_feasibility, extract_features, loocv_experiment, run_day, welch_t_test,
    Algorithm, CommitmentState, DvrpSolver, FeatureOptions, FeatureVector, FrozenSnapshot,
    InstanceBuilder, MemsoConfig, MemsoSolver, MomentMode, Point, Request, RequestId, SliceClock,
    SuiteConfig, SwarmConfig, TrainingRow,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn check(id: &'static str, title: &'static str, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    let outcome = Outcome {
        id,
        title,
        pass,
        detail,
        elapsed: start.elapsed(),
    };
    println!(
        "[{}] {:<4} {:<34} {} ({:.2}s)",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.id,
        outcome.title,
        outcome.detail,
        outcome.elapsed.as_secs_f64()
    );
    outcome
}

fn core_data(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

// ---------------------------------------------------------------- 1

const REFERENCE_ROWS: [&str; 4] = ["c50", "c75", "c100", "tai75a"];

fn benchmark_file(dir: &Path, name: &str) -> Option<PathBuf> {
    ["vrp", "dvrp", "txt"]
        .iter()
        .map(|ext| dir.join(format!("{name}.{ext}")))
        .find(|p| p.exists())
}

fn feature_reproduction(properties_pass: bool) -> (bool, String) {
    let dir = std::env::var_os("DVRP_BENCHMARK_DIR").map(PathBuf::from);
    let files: Option<Vec<(String, PathBuf)>> = dir.as_deref().and_then(|d| {
        REFERENCE_ROWS
            .iter()
            .map(|n| benchmark_file(d, n).map(|p| (n.to_string(), p)))
            .collect()
    });
    let Some(files) = files else {
        return (
            properties_pass,
            format!(
                "benchmark files absent (set DVRP_BENCHMARK_DIR); degraded to property suite: {}",
                if properties_pass {
                    "all properties hold"
                } else {
                    "properties failed"
                }
            ),
        );
    };
    let reference: Vec<(String, FeatureVector)> =
        parse_features_csv(&core_data("benchmark_features.csv")).unwrap();
    let instances: Vec<_> = files
        .iter()
        .map(|(n, p)| (n.clone(), dvrp_core::instance_io::read_instance(p).unwrap()))
        .collect();
    for mode in [
        MomentMode::Population,
        MomentMode::Sample,
        MomentMode::Adjusted,
    ] {
        for include_depot in [false, true] {
            let options = FeatureOptions {
                moment_mode: mode,
                include_depot,
                ..FeatureOptions::default()
            };
            let mut all = true;
            let mut c50_time = Duration::ZERO;
            for (name, inst) in &instances {
                let start = Instant::now();
                let (f, _) = extract_features(inst, &options).unwrap();
                if name == "c50" {
                    c50_time = start.elapsed();
                }
                let want = &reference.iter().find(|(n, _)| n == name).unwrap().1;
                all &= f
                    .to_array()
                    .iter()
                    .zip(want.to_array())
                    .all(|(a, b)| (a - b).abs() <= 0.01 + 1e-12);
            }
            if all && c50_time < Duration::from_secs(5) {
                return (
                    true,
                    format!(
                        "{} rows match with {mode:?} moments, depot {include_depot}",
                        instances.len()
                    ),
                );
            }
        }
    }
    (
        false,
        "no moment/depot setting reproduces all checked rows within ±0.01".into(),
    )
}

// ---------------------------------------------------------------- 2

struct PublishedRow {
    name: String,
    avg_two: f64,
    avg_memso: f64,
    chosen: Algorithm,
    gain_pct: f64,
}

fn published_results() -> Vec<PublishedRow> {
    core_data("benchmark_results.csv")
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            PublishedRow {
                name: c[0].to_string(),
                avg_two: c[2].parse().unwrap(),
                avg_memso: c[4].parse().unwrap(),
                chosen: c[6].parse().unwrap(),
                gain_pct: c[8].parse().unwrap(),
            }
        })
        .collect()
}

fn gain_fidelity() -> (bool, String) {
    let rows = published_results();
    let mut worst: (f64, String) = (0.0, String::new());
    let mut ok = 0;
    for r in &rows {
        let (c, u) = match r.chosen {
            Algorithm::Memso => (r.avg_memso, r.avg_two),
            Algorithm::TwoMpso => (r.avg_two, r.avg_memso),
        };
        let dev = (100.0 * gain(c, u) - r.gain_pct).abs();
        if dev <= 0.02 {
            ok += 1;
        }
        if dev > worst.0 {
            worst = (dev, r.name.clone());
        }
    }
    (
        ok == rows.len() && rows.len() == 21,
        format!(
            "{ok}/{} gains within ±0.02 pp (largest deviation {:.4} pp, {})",
            rows.len(),
            worst.0,
            worst.1
        ),
    )
}

// ---------------------------------------------------------------- 3

fn selection_replay() -> (bool, String) {
    let start = Instant::now();
    let features = parse_features_csv(&core_data("benchmark_features.csv")).unwrap();
    let summaries = parse_summaries_csv(&core_data("benchmark_results.csv")).unwrap();
    let data = join_by_name(&features, &summaries).unwrap();
    let report = match loocv_experiment(&data) {
        Ok(r) => r,
        Err(e) => return (false, format!("loocv failed: {e}")),
    };
    let elapsed = start.elapsed();
    let (sc, sn) = report.significant_accuracy();
    let printed = published_results();
    let agree = report
        .folds
        .iter()
        .filter(|f| {
            printed
                .iter()
                .any(|r| r.name == f.held_out && r.chosen == f.row.chosen)
        })
        .count();
    let pass = sn == 17 && sc.abs_diff(14) <= 2 && agree >= 15 && elapsed < Duration::from_secs(10);
    (
        pass,
        format!("significant subset {sc}/{sn} (target 14±2), chosen column agreement {agree}/21 (need ≥15)"),
    )
}

// ---------------------------------------------------------------- 4

fn solver_sanity() -> (bool, String) {
    let start = Instant::now();
    let specs = [
        (30, Layout::Uniform),
        (45, Layout::Clustered),
        (60, Layout::Mixed),
        (75, Layout::Uniform),
        (50, Layout::Clustered),
    ];
    let instances: Vec<_> = specs
        .iter()
        .enumerate()
        .map(|(i, &(n, layout))| {
            SyntheticSpec::new(format!("static{i}"), n, layout, 100 + i as u64)
                .all_a_priori()
                .build()
                .unwrap()
        })
        .collect();
    let config = SuiteConfig {
        slices: 1,
        ..SuiteConfig::default()
    };
    let jobs: Vec<(usize, Algorithm, u64)> = (0..instances.len())
        .flat_map(|i| {
            [Algorithm::Memso, Algorithm::TwoMpso]
                .into_iter()
                .flat_map(move |a| (0..5).map(move |s| (i, a, s)))
        })
        .collect();
    let results: Vec<(usize, Algorithm, Result<f64, String>)> = jobs
        .par_iter()
        .map(|&(i, algo, seed)| {
            let inst = &instances[i];
            let outcome = solve_once(inst, algo, 100_000, seed, &config).map_err(|e| e.to_string());
            let cost = outcome.and_then(|o| {
                let report =
                    check_feasibility(&o.solution, inst, 0.0, &CommitmentState::initial(inst));
                if report.is_feasible() && o.solution.request_count() == inst.requests().len() {
                    Ok(o.solution.total_length())
                } else {
                    Err(report.to_string())
                }
            });
            (i, algo, cost)
        })
        .collect();
    let mut errors = Vec::new();
    let mut wins = [0usize; 2];
    let mut cells = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let base = baseline_cost(inst);
        let mut line = format!("{} base {base:.1}", inst.name());
        for (k, algo) in [Algorithm::Memso, Algorithm::TwoMpso]
            .into_iter()
            .enumerate()
        {
            let costs: Vec<f64> = results
                .iter()
                .filter(|(j, a, _)| *j == i && *a == algo)
                .filter_map(|(_, _, c)| match c {
                    Ok(c) => Some(*c),
                    Err(e) => {
                        errors.push(format!("{} {algo}: {e}", inst.name()));
                        None
                    }
                })
                .collect();
            let mean = costs.iter().sum::<f64>() / costs.len().max(1) as f64;
            if costs.len() == 5 && mean < base {
                wins[k] += 1;
            }
            line.push_str(&format!(" {algo} {mean:.1}"));
        }
        cells.push(line);
    }
    let elapsed = start.elapsed();
    let pass =
        errors.is_empty() && wins.iter().all(|&w| w >= 4) && elapsed < Duration::from_secs(600);
    (
        pass,
        format!(
            "MEMSO beats baseline {}/5, 2MPSO {}/5, infeasible {} [{}]",
            wins[0],
            wins[1],
            errors.len(),
            cells.join("; ")
        ),
    )
}

// ---------------------------------------------------------------- 5

fn point_instance(points: &[(f64, f64)]) -> dvrp_core::ProblemInstance {
    InstanceBuilder::new("p", Point::new(0.0, 0.0), 1e9, 1e9)
        .requests(points.iter().enumerate().map(|(i, &(x, y))| Request {
            id: RequestId(i as u32 + 1),
            location: Point::new(x, y),
            volume: 1.0,
            service_time: 0.0,
            arrival_time: 0.0,
        }))
        .build()
        .unwrap()
}

fn property_two_opt() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = 0;
    for _ in 0..1000 {
        let n = rng.random_range(0..14);
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)))
            .collect();
        let inst = point_instance(&pts);
        let mut ids: Vec<RequestId> = (1..=n as u32).map(RequestId).collect();
        for i in (1..ids.len()).rev() {
            ids.swap(i, rng.random_range(0..=i));
        }
        let route = RouteView::new(ids.clone(), &inst).unwrap();
        let stops: Vec<(f64, f64)> = ids.iter().map(|id| pts[id.0 as usize - 1]).collect();
        let once = two_opt(&route, &inst);
        let twice = two_opt(&once, &inst);
        let mut a = ids.clone();
        let mut b = once.ids().to_vec();
        a.sort();
        b.sort();
        let ok = (route.length() - common::tour_length((0.0, 0.0), &stops)).abs() < 1e-9
            && once.length() <= route.length() + 1e-9
            && twice.ids() == once.ids()
            && is_two_opt_stable(&once, &inst)
            && a == b;
        bad += usize::from(!ok);
    }
    let square = point_instance(&[(0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]);
    let crossed = RouteView::new(vec![RequestId(1), RequestId(2), RequestId(3)], &square).unwrap();
    let fixed = (two_opt(&crossed, &square).length() - 4.0).abs() < 1e-12;
    (
        bad == 0 && fixed,
        format!(
            "{} of 1000 random routes violate; crossing construction resolved: {fixed}",
            bad
        ),
    )
}

fn property_discrete_pso() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut escaped = 0;
    for case in 0..20u64 {
        let m = rng.random_range(1..7u32);
        let n = rng.random_range(1..12usize);
        let config = SwarmConfig {
            particle_count: rng.random_range(2..10),
            inertia: rng.random_range(0.0..2.0),
            cognitive: rng.random_range(0.0..3.0),
            social: rng.random_range(0.0..3.0),
            seed: case,
            ..SwarmConfig::default()
        };
        let target: Vec<u32> = (0..n).map(|_| rng.random_range(0..m)).collect();
        let mut fit = |x: &[u32]| x.iter().zip(&target).filter(|(a, b)| a != b).count() as f64;
        let mut swarm = DiscreteSwarm::uniform(config, m, n, &[], &mut fit).unwrap();
        for _ in 0..10_000 {
            swarm.step(&mut fit);
            escaped += swarm
                .particles()
                .iter()
                .filter(|p| p.position.iter().any(|&x| x >= m))
                .count();
        }
    }
    let target = [1u32, 0, 1, 1];
    let mut fit = |x: &[u32]| x.iter().zip(&target).filter(|(a, b)| a != b).count() as f64;
    let hits = (0..10u64)
        .filter(|&seed| {
            let config = SwarmConfig::default().with_seed(seed).with_particles(10);
            let mut swarm = DiscreteSwarm::uniform(config, 2, 4, &[], &mut fit).unwrap();
            swarm.run(2_000, &mut fit);
            swarm.best().1 == 0.0
        })
        .count();
    (
        escaped == 0 && hits >= 9,
        format!("out-of-range positions {escaped} over 20×10^4 steps; Hamming optimum {hits}/10"),
    )
}

fn property_continuous_pso() -> (bool, String) {
    let mut sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let config = SwarmConfig::default().with_seed(seed);
        let mut swarm =
            ContinuousSwarm::uniform(config, &[-5.0; 10], &[5.0; 10], &[], &mut sphere).unwrap();
        swarm.run(50_000, &mut sphere);
        let best = swarm.best().1;
        worst = worst.max(best);
        hits += usize::from(best < 1e-3 && swarm.evaluations() <= 50_000);
    }
    (
        hits >= 9,
        format!("10-d sphere below 1e-3 in {hits}/10 seeds (worst {worst:.2e})"),
    )
}

fn property_ols() -> (bool, String) {
    const SUBSET: [&str; 5] = ["mu_x", "sd_y", "skew_s", "mu_s", "nc"];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut coef_err, mut orth_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let rows: Vec<TrainingRow> = (0..20)
            .map(|i| {
                let mut f = [0.0; 10];
                for v in f.iter_mut() {
                    *v = rng.random_range(-2.0..2.0);
                }
                TrainingRow {
                    name: format!("r{i}"),
                    features: FeatureVector::from_array(f),
                    ratio: 1.0 + 0.1 * f[0] - 0.3 * f[9] + 0.05 * gaussian(&mut rng),
                }
            })
            .collect();
        let model = fit_ols(&rows, &SUBSET).unwrap();
        let x: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                std::iter::once(1.0)
                    .chain(SUBSET.iter().map(|n| r.features.get(n).unwrap()))
                    .collect()
            })
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        let beta = common::normal_equations(&x, &y);
        coef_err = coef_err.max((model.intercept - beta[0]).abs());
        for (c, b) in model.coefficients.iter().zip(&beta[1..]) {
            coef_err = coef_err.max((c - b).abs());
        }
        let resid: Vec<f64> = rows
            .iter()
            .map(|r| r.ratio - model.predict(&r.features))
            .collect();
        for j in 0..6 {
            orth_err = orth_err.max(
                x.iter()
                    .zip(&resid)
                    .map(|(row, e)| row[j] * e)
                    .sum::<f64>()
                    .abs(),
            );
        }
    }
    (
        coef_err < 1e-8 && orth_err < 1e-8,
        format!("max coefficient gap {coef_err:.1e}, max residual·column {orth_err:.1e} over 100 designs"),
    )
}

fn property_gap() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut blobs = Vec::new();
    for (cx, cy) in [(0.2, 0.2), (0.8, 0.8)] {
        for _ in 0..30 {
            blobs.push(Point::new(
                cx + rng.random_range(-0.03..0.03),
                cy + rng.random_range(-0.03..0.03),
            ));
        }
    }
    let same = vec![Point::new(0.4, 0.6); 25];
    let two = (0..10)
        .filter(|&s| {
            gap_statistic(&blobs, &GapConfig::default(), s)
                .unwrap()
                .k_gap
                == 2
        })
        .count();
    let one = (0..10)
        .filter(|&s| {
            gap_statistic(&same, &GapConfig::default(), s)
                .unwrap()
                .k_gap
                == 1
        })
        .count();
    (
        two == 10 && one == 10,
        format!("two blobs → 2 in {two}/10, identical points → 1 in {one}/10"),
    )
}

fn property_dynamics() -> (bool, String) {
    let inst = SyntheticSpec::new("st", 20, Layout::Uniform, 3)
        .all_a_priori()
        .build()
        .unwrap();
    let equal = (0..3).all(|seed| {
        let mut a = MemsoSolver::new(MemsoConfig::default(), seed).unwrap();
        let day = run_day(&inst, &mut a, 4_000, 1).unwrap();
        let mut b = MemsoSolver::new(MemsoConfig::default(), seed).unwrap();
        let plan = b.optimize(&FrozenSnapshot::initial(&inst), 4_000).unwrap();
        day.solution.total_length().to_bits() == plan.total_length().to_bits()
    });
    let mut shrunk = 0;
    for seed in 0..100u64 {
        let layout = [Layout::Uniform, Layout::Clustered, Layout::Mixed][seed as usize % 3];
        let inst = SyntheticSpec::new("day", 10 + seed as usize % 25, layout, seed)
            .build()
            .unwrap();
        let mut clock = SliceClock::new(1 + seed as usize % 30, inst.workday_end()).unwrap();
        let mut state = CommitmentState::initial(&inst);
        let mut snapshot = FrozenSnapshot::initial(&inst);
        let mut solver = GreedyInsertionSolver::new();
        while !clock.is_finished() {
            let plan = solver.optimize(&snapshot, 0).unwrap();
            let plan = dvrp_core::repair(&plan, &snapshot).unwrap_or(plan);
            let (next, next_snapshot) = advance(&mut clock, &plan, &state, &inst).unwrap();
            let grows = state.vehicles.iter().enumerate().all(|(v, c)| {
                next.vehicles
                    .get(v)
                    .is_some_and(|n| n.prefix.starts_with(&c.prefix))
            });
            shrunk += usize::from(!grows);
            state = next;
            snapshot = next_snapshot;
        }
    }
    (equal && shrunk == 0, format!("single-slice day bit-equal to static solve: {equal}; prefix shrinks over 100 days: {shrunk}"))
}

fn property_welch() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (na, nb) = (rng.random_range(5..40), rng.random_range(5..40));
        let (sa, sb) = (rng.random_range(0.5..3.0), rng.random_range(0.5..3.0));
        let shift = rng.random_range(-1.5..1.5);
        let a: Vec<f64> = (0..na).map(|_| sa * gaussian(&mut rng)).collect();
        let b: Vec<f64> = (0..nb).map(|_| shift + sb * gaussian(&mut rng)).collect();
        let got = welch_t_test(&a, &b, 0.05).unwrap();
        worst = worst.max((got.p - common::welch_oracle(&a, &b).2).abs());
    }
    (
        worst < 1e-6,
        format!("largest p-value gap to the Simpson oracle {worst:.1e} over 50 pairs"),
    )
}

// ---------------------------------------------------------------- 6

fn cli_determinism() -> (bool, String) {
    let bin = env!("CARGO_BIN_EXE_dvrp");
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |args: &[&str]| -> Result<Vec<u8>, String> {
        let out = Command::new(bin)
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        if out.status.success() {
            Ok(out.stdout)
        } else {
            Err(format!(
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            ))
        }
    };
    let inst_dir = d.join("instances");
    for (i, layout) in ["uniform", "clustered", "mixed"].iter().enumerate() {
        let path = inst_dir.join(format!("g{i}.vrp"));
        if let Err(e) = run(&[
            "generate",
            "--out",
            path.to_str().unwrap(),
            "--requests",
            "20",
            "--layout",
            layout,
            "--seed",
            &i.to_string(),
        ]) {
            return (false, e);
        }
    }
    let g0 = inst_dir.join("g0.vrp");
    let g0 = g0.to_str().unwrap();
    let features = d.join("features.csv");
    let summary = d.join("summary.csv");
    std::fs::write(&features, core_data("benchmark_features.csv")).unwrap();
    std::fs::write(&summary, core_data("benchmark_results.csv")).unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "--csv",
            "solve",
            "--instance",
            g0,
            "--algo",
            "memso",
            "--budget",
            "20000",
            "--seed",
            "3",
        ],
        vec![
            "--csv",
            "solve",
            "--instance",
            g0,
            "--algo",
            "2mpso",
            "--budget",
            "20000",
            "--seed",
            "3",
            "--slices",
            "10",
        ],
        vec!["--csv", "features", g0],
        vec![
            "--csv",
            "bench",
            "--instances",
            inst_dir.to_str().unwrap(),
            "--runs-memso",
            "3",
            "--runs-2mpso",
            "3",
            "--budget",
            "4000",
        ],
        vec![
            "--csv",
            "loocv",
            "--summary",
            summary.to_str().unwrap(),
            "--features",
            features.to_str().unwrap(),
        ],
    ];
    let mut identical = 0;
    for args in &commands {
        match (run(args), run(args)) {
            (Ok(a), Ok(b)) if a == b && !a.is_empty() => identical += 1,
            (Err(e), _) | (_, Err(e)) => return (false, e),
            _ => {}
        }
    }
    (
        identical == commands.len(),
        format!(
            "{identical}/{} commands byte-identical across repeated runs",
            commands.len()
        ),
    )
}

fn main() {
    println!("acceptance suite");
    let mut outcomes = Vec::new();
    let properties: Vec<Outcome> = vec![
        check("5a", "2-OPT properties", property_two_opt),
        check("5b", "discrete PSO properties", property_discrete_pso),
        check(
            "5c",
            "continuous PSO on the sphere",
            property_continuous_pso,
        ),
        check("5d", "OLS vs normal equations", property_ols),
        check("5e", "gap statistic constructions", property_gap),
        check("5f", "dynamics properties", property_dynamics),
        check("5g", "Welch test vs direct formula", property_welch),
    ];
    let properties_pass = properties.iter().all(|o| o.pass);
    outcomes.push(check("1", "feature reproduction", || {
        feature_reproduction(properties_pass)
    }));
    outcomes.push(check("2", "gain formula fidelity", gain_fidelity));
    outcomes.push(check("3", "selection pipeline replay", selection_replay));
    outcomes.push(check(
        "4",
        "solver sanity on static instances",
        solver_sanity,
    ));
    outcomes.push(check("5", "property suites", || {
        let n = properties.iter().filter(|o| o.pass).count();
        (
            properties_pass,
            format!("{n}/{} property groups hold", properties.len()),
        )
    }));
    outcomes.push(check("6", "CLI determinism", cli_determinism));
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!(
        "acceptance: {}/{} criteria pass",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
