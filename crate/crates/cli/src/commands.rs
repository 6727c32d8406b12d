use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dvrp_core::features::{features_csv, parse_features_csv};
use dvrp_core::harness::{
    join_by_name, parse_summaries_csv, solve_once, summaries_csv, summaries_from_run_dir,
    InstanceSummary, ReportFormat,
};
use dvrp_core::instance_io::{read_instance, write_instance};
use dvrp_core::synthetic::SyntheticSpec;
use dvrp_core::{
    batch_solve, choose_solver, emit_report, extract_features, loocv_experiment, stepwise_aic,
    Algorithm, FeatureVector, ProblemInstance, SelectorModel, SuiteConfig, TrainingRow,
};
use rayon::prelude::*;

use crate::{Cli, Command};

const INSTANCE_EXTENSIONS: [&str; 3] = ["vrp", "dvrp", "txt"];

pub fn run(cli: &Cli) -> Result<String> {
    let config = match &cli.config {
        Some(path) => {
            SuiteConfig::load(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => SuiteConfig::default(),
    };
    let format = if cli.csv {
        ReportFormat::Csv
    } else {
        ReportFormat::Text
    };
    match &cli.command {
        Command::Solve {
            instance,
            algo,
            budget,
            seed,
            slices,
            static_day,
        } => {
            let mut config = config;
            if let Some(s) = slices {
                config.slices = *s;
            }
            config.validate()?;
            let mut inst = load(instance)?;
            if *static_day {
                inst = inst.static_version();
            }
            solve(&inst, (*algo).into(), *budget, *seed, &config, format)
        }
        Command::Features { instance } => {
            let inst = load(instance)?;
            let (f, gap) = extract_features(&inst, &config.features)?;
            Ok(match format {
                ReportFormat::Csv => features_csv(&[(inst.name().to_string(), f)]),
                ReportFormat::Text => {
                    let mut out = String::new();
                    for (name, v) in FeatureVector::NAMES.iter().zip(f.to_array()) {
                        let _ = writeln!(out, "{name:<7} {v:>10.6}");
                    }
                    let _ = writeln!(out, "{:<7} {:>10}", "k_gap", gap.k_gap);
                    let _ = writeln!(out, "{:<7} {:>10}", "m_v", gap.m_v);
                    out
                }
            })
        }
        Command::Train {
            runs,
            out,
            instances,
            features,
        } => {
            let summaries = summaries_from_run_dir(runs, config.alpha, config.t_test)?;
            let feats = feature_table(
                features.as_deref(),
                instances.as_deref().unwrap_or(runs),
                &config,
            )?;
            let rows: Vec<TrainingRow> = join_by_name(&feats, &summaries)?
                .into_iter()
                .map(|(features, s)| TrainingRow {
                    ratio: s.ratio(),
                    name: s.name,
                    features,
                })
                .collect();
            let fit = stepwise_aic(&rows)?;
            let text = fit.model.to_text();
            std::fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
            let mut report = String::new();
            for step in &fit.path {
                match &step.dropped {
                    None => {
                        let _ = writeln!(report, "start      aic {:.6}", step.aic);
                    }
                    Some(name) => {
                        let _ = writeln!(report, "drop {name:<6} aic {:.6}", step.aic);
                    }
                }
            }
            report.push_str(&text);
            Ok(report)
        }
        Command::Select { model, instance } => {
            let text = std::fs::read_to_string(model)
                .with_context(|| format!("reading {}", model.display()))?;
            let model = SelectorModel::from_text(&text)?;
            let inst = load(instance)?;
            let (f, _) = extract_features(&inst, &config.features)?;
            let (choice, ratio) = choose_solver(&model, &f);
            Ok(match format {
                ReportFormat::Csv => format!(
                    "name,predicted_ratio,chosen\n{},{ratio:.6},{choice}\n",
                    inst.name()
                ),
                ReportFormat::Text => format!(
                    "{}: predicted ratio {ratio:.6}, choose {choice}\n",
                    inst.name()
                ),
            })
        }
        Command::Loocv {
            runs,
            summary,
            instances,
            features,
        } => {
            let summaries: Vec<InstanceSummary> = match (runs, summary) {
                (_, Some(path)) => parse_summaries_csv(&read_text(path)?)?,
                (Some(dir), None) => summaries_from_run_dir(dir, config.alpha, config.t_test)?,
                (None, None) => bail!(dvrp_core::DvrpError::Config(
                    "either --runs or --summary is required".into()
                )),
            };
            let instance_dir = instances.as_deref().or(runs.as_deref());
            let feats = match (features.as_deref(), instance_dir) {
                (None, None) => bail!(dvrp_core::DvrpError::Config(
                    "--summary needs --features or --instances".into()
                )),
                (f, dir) => feature_table(f, dir.unwrap_or(Path::new(".")), &config)?,
            };
            let report = loocv_experiment(&join_by_name(&feats, &summaries)?)?;
            let mut out = emit_report(&report.rows(), format);
            if format == ReportFormat::Text {
                let (c, n) = report.accuracy();
                let (sc, sn) = report.significant_accuracy();
                let _ = writeln!(out, "\naccuracy {c}/{n}, significant subset {sc}/{sn}");
                let _ = writeln!(out, "mean gain {:.2}%", 100.0 * report.mean_gain());
            }
            Ok(out)
        }
        Command::Bench {
            instances,
            runs_memso,
            runs_two_mpso,
            budget,
            seed,
            store,
        } => {
            if let Some(dir) = store {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
            }
            let files = instance_files(instances)?;
            let summaries = files
                .par_iter()
                .map(|path| {
                    let inst = load(path)?;
                    let costs = |algo: Algorithm, runs: usize| -> Result<Vec<f64>> {
                        let records = batch_solve(
                            &inst,
                            algo,
                            runs,
                            *budget,
                            *seed,
                            &config,
                            store.as_deref(),
                        )?;
                        Ok(records.iter().filter_map(|r| r.cost).collect())
                    };
                    let memso = costs(Algorithm::Memso, *runs_memso)?;
                    let two = costs(Algorithm::TwoMpso, *runs_two_mpso)?;
                    Ok(InstanceSummary::from_runs(
                        inst.name(),
                        &memso,
                        &two,
                        config.alpha,
                        config.t_test,
                    )?)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(match format {
                ReportFormat::Csv => summaries_csv(&summaries),
                ReportFormat::Text => summary_table(&summaries),
            })
        }
        Command::Generate {
            out,
            requests,
            layout,
            seed,
            name,
            static_day,
        } => {
            let name = name.clone().unwrap_or_else(|| {
                out.file_stem().map_or("synthetic".to_string(), |s| {
                    s.to_string_lossy().into_owned()
                })
            });
            let mut spec = SyntheticSpec::new(name, *requests, (*layout).into(), *seed);
            if *static_day {
                spec = spec.all_a_priori();
            }
            let inst = spec.build()?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
            }
            write_instance(&inst, out)?;
            Ok(format!(
                "wrote {} ({} requests)\n",
                out.display(),
                inst.requests().len()
            ))
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path) -> Result<ProblemInstance> {
    read_instance(path).with_context(|| format!("loading {}", path.display()))
}

fn instance_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|x| x.to_str())
                .is_some_and(|x| INSTANCE_EXTENSIONS.contains(&x))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        bail!(dvrp_core::DvrpError::InsufficientData(format!(
            "no instance files (.vrp, .dvrp, .txt) in {}",
            dir.display()
        )));
    }
    Ok(files)
}

fn feature_table(
    csv: Option<&Path>,
    instances: &Path,
    config: &SuiteConfig,
) -> Result<Vec<(String, FeatureVector)>> {
    if let Some(path) = csv {
        return Ok(parse_features_csv(&read_text(path)?)?);
    }
    instance_files(instances)?
        .par_iter()
        .map(|path| {
            let inst = load(path)?;
            let (f, _) = extract_features(&inst, &config.features)?;
            Ok((inst.name().to_string(), f))
        })
        .collect()
}

fn solve(
    inst: &ProblemInstance,
    algo: Algorithm,
    budget: u64,
    seed: u64,
    config: &SuiteConfig,
    format: ReportFormat,
) -> Result<String> {
    let outcome = solve_once(inst, algo, budget, seed, config)?;
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("vehicle,length,load,requests\n");
            for (v, route) in outcome
                .solution
                .routes()
                .iter()
                .enumerate()
                .filter(|(_, r)| !r.is_empty())
            {
                let (length, load) = route_stats(inst, route)?;
                let ids: Vec<String> = route.iter().map(|id| id.to_string()).collect();
                let _ = writeln!(out, "{v},{length:.6},{load:.6},{}", ids.join(" "));
            }
        }
        ReportFormat::Text => {
            let _ = writeln!(out, "instance {}", inst.name());
            let _ = writeln!(out, "solver   {algo}");
            let _ = writeln!(out, "seed     {seed}");
            let _ = writeln!(out, "cost     {:.6}", outcome.solution.total_length());
            let _ = writeln!(out, "repairs  {}", outcome.repairs);
            for (v, route) in outcome
                .solution
                .routes()
                .iter()
                .enumerate()
                .filter(|(_, r)| !r.is_empty())
            {
                let (length, load) = route_stats(inst, route)?;
                let ids: Vec<String> = route.iter().map(|id| id.to_string()).collect();
                let _ = writeln!(
                    out,
                    "vehicle {v:>3} length {length:>10.3} load {load:>8.2}: {}",
                    ids.join(" ")
                );
            }
        }
    }
    Ok(out)
}

fn route_stats(inst: &ProblemInstance, route: &[dvrp_core::RequestId]) -> Result<(f64, f64)> {
    let length = dvrp_core::route_length(route, inst)?;
    let load = route
        .iter()
        .map(|&id| inst.request(id).map(|r| r.volume))
        .sum::<dvrp_core::Result<f64>>()?;
    Ok((length, load))
}

fn summary_table(summaries: &[InstanceSummary]) -> String {
    let mut out = format!(
        "{:<10} {:>10} {:>10} {:>10} {:>10} {:>4} {:>6}\n",
        "name", "2MPSO min", "2MPSO avg", "MEMSO min", "MEMSO avg", "sig", "better"
    );
    for s in summaries {
        let _ = writeln!(
            out,
            "{:<10} {:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>4} {:>6}",
            s.name,
            s.two_mpso_min,
            s.two_mpso_avg,
            s.memso_min,
            s.memso_avg,
            if s.significant { "*" } else { "" },
            s.better().to_string()
        );
    }
    out
}
