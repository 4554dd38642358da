use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use tdlab_core::harness::output::{find_summaries, read_summary, render_report, write_plot_data, write_sweep_artifacts};
use tdlab_core::harness::{
    aggregate, build_problems, measure_runtime, run_realtime, run_sweep_with, CurveSelection, Problem, RealtimeConfig,
    RunConfig, Setting, SweepGrid, SweepResult,
};
use tdlab_core::metrics::MetricKind;
use tdlab_core::{seed, Algorithm, FeatureKind};

use crate::config::{resolve_algorithms, ExperimentConfig};
use crate::failure::Failure;

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize)]
struct Artifact {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: String,
    artifacts: Vec<Artifact>,
}

fn sha256_file(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

/// Writes the effective config next to the artifacts, then a manifest listing
/// every file with its digest.
fn finish(dir: &Path, command: &str, config: &ExperimentConfig, mut artifacts: Vec<PathBuf>) -> Result<(), Failure> {
    let path = dir.join(CONFIG_FILE);
    fs::write(&path, config.emit()?).map_err(|e| Failure::io(&path, e))?;
    artifacts.push(PathBuf::from(CONFIG_FILE));
    artifacts.sort();
    artifacts.dedup();
    let artifacts = artifacts
        .into_iter()
        .map(|rel| {
            Ok(Artifact {
                sha256: sha256_file(&dir.join(&rel))?,
                path: rel.to_string_lossy().replace('\\', "/"),
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let manifest = Manifest { command, config_hash: config.hash()?, artifacts };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Other(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| Failure::io(&path, e))?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn run_all(
    configs: &[RunConfig],
    grid: &SweepGrid,
    problems: &[Problem],
) -> Result<Vec<SweepResult>, Failure> {
    configs
        .iter()
        .map(|rc| {
            let t0 = Instant::now();
            let r = run_sweep_with(rc, grid, problems)?;
            let b = r.best_cell();
            eprintln!(
                "{:<11} best alpha={} eta={} lambda={} objective={:.6} ({:.1}s)",
                rc.algorithm.name(),
                b.alpha,
                b.eta,
                b.lambda,
                b.objective,
                t0.elapsed().as_secs_f64()
            );
            Ok(r)
        })
        .collect()
}

fn sweep_and_write(
    command: &str,
    config: &ExperimentConfig,
    configs: Vec<RunConfig>,
    grid: &SweepGrid,
    aggregated: CurveSelection,
) -> Result<(), Failure> {
    create_dir(&config.out)?;
    let problems = build_problems(&configs[0])?;
    let results = run_all(&configs, grid, &problems)?;
    let written = write_sweep_artifacts(&config.out, &results, &problems, aggregated)?;
    finish(&config.out, command, config, written)
}

pub fn sweep(config: &ExperimentConfig) -> Result<(), Failure> {
    let s = &config.sweep;
    let configs = resolve_algorithms(&s.algorithms, s.setting)?
        .into_iter()
        .map(|a| config.sweep_config(a, s.setting, s.representation))
        .collect();
    sweep_and_write("sweep", config, configs, &s.grid, s.aggregated_curves)
}

pub fn baird(config: &ExperimentConfig) -> Result<(), Failure> {
    let b = &config.baird;
    let configs = resolve_algorithms(&b.algorithms, Setting::Baird)?
        .into_iter()
        .map(|a| config.baird_config(a, b.metric))
        .collect();
    sweep_and_write("baird", config, configs, &b.grid, b.aggregated_curves)
}

pub fn runtime_table(config: &ExperimentConfig) -> Result<(), Failure> {
    create_dir(&config.out)?;
    let path = config.out.join("runtime.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    w.write_record(["setting", "algorithm", "microseconds"]).map_err(tdlab_core::Error::from)?;
    let mut table = String::new();
    let _ = writeln!(table, "{:<12} {:>12} {:>12}", "algorithm", "on-policy", "off-policy");
    let settings = [Setting::OnPolicy, Setting::OffPolicy];
    let mut times = vec![[None; 2]; Algorithm::ALL.len()];
    for (k, setting) in settings.into_iter().enumerate() {
        let rc = config.runtime_config(setting)?;
        for a in setting.algorithms() {
            let us = measure_runtime(a, &rc)?;
            w.write_record([setting.name(), a.name(), &format!("{us:.3}")]).map_err(tdlab_core::Error::from)?;
            times[Algorithm::ALL.iter().position(|x| *x == a).unwrap()][k] = Some(us);
        }
    }
    w.flush().map_err(|e| Failure::io(&path, e))?;
    for (a, t) in Algorithm::ALL.iter().zip(&times) {
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.1}"));
        let _ = writeln!(table, "{:<12} {:>12} {:>12}", a.name(), cell(t[0]), cell(t[1]));
    }
    print!("{table}");
    finish(&config.out, "runtime-table", config, vec![PathBuf::from("runtime.csv")])
}

/// Directory name for a budget, e.g. `c-0.5`.
pub fn budget_dir(c: f64) -> String {
    format!("c-{c}")
}

pub fn runtime_budget(config: &ExperimentConfig) -> Result<(), Failure> {
    let r = &config.runtime;
    let setting = r.setting;
    let hp = config.runtime_hp()?;
    let learners: Vec<_> = setting.algorithms().into_iter().map(|a| (a, hp)).collect();
    let problems = (0..r.n_mdps)
        .map(|i| Problem::random(&config.sweep.mdp, setting, FeatureKind::Tabular, config.seed_root, i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut written = Vec::new();
    for &c in &r.c_values {
        // errors[learner][trial] and samples[learner][trial], one entry per iteration
        let mut errors = vec![Vec::new(); learners.len()];
        let mut samples = vec![Vec::new(); learners.len()];
        for (i, p) in problems.iter().enumerate() {
            let ev = p.evaluator(MetricKind::Mave, hp.lambda)?;
            for j in 0..r.n_runs {
                let rt = RealtimeConfig {
                    c_ms: c,
                    n_iterations: r.n_iterations,
                    max_samples_per_iteration: None,
                    seed: seed::trial_seed(config.seed_root, i, j, 0),
                    clamp_ceiling: config.clamp_ceiling,
                };
                for (k, curve) in run_realtime(p, &learners, &rt, &ev)?.into_iter().enumerate() {
                    if let Some(w) = &curve.warning {
                        if i == 0 && j == 0 && k == 0 {
                            eprintln!("warning: {w}");
                        }
                    }
                    errors[k].push(curve.errors);
                    samples[k].push(curve.samples.into_iter().map(|s| s as f64).collect::<Vec<_>>());
                }
            }
        }
        let rel_dir = PathBuf::from("budget").join(budget_dir(c));
        create_dir(&config.out.join(&rel_dir))?;
        for (k, (a, _)) in learners.iter().enumerate() {
            let err = aggregate(&errors[k])?;
            let smp = aggregate(&samples[k])?;
            let rel = rel_dir.join(format!("{}.csv", a.name()));
            let path = config.out.join(&rel);
            let mut w =
                csv::Writer::from_path(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            w.write_record(["iteration", "mean_error", "stderr", "mean_samples"]).map_err(tdlab_core::Error::from)?;
            for t in 0..err.mean.len() {
                w.write_record([
                    (t + 1).to_string(),
                    err.mean[t].to_string(),
                    err.stderr[t].to_string(),
                    smp.mean[t].to_string(),
                ])
                .map_err(tdlab_core::Error::from)?;
            }
            w.flush().map_err(|e| Failure::io(&path, e))?;
            written.push(rel);
            let per_iter = smp.mean.iter().sum::<f64>() / smp.mean.len() as f64;
            eprintln!(
                "c={c}ms {:<11} final error {:.4}, {per_iter:.1} samples/iteration",
                a.name(),
                err.mean.last().copied().unwrap_or(f64::NAN)
            );
        }
    }
    finish(&config.out, "runtime-budget", config, written)
}

pub fn report(dir: &Path) -> Result<(), Failure> {
    if !dir.is_dir() {
        return Err(Failure::Io(format!("{}: not a directory", dir.display())));
    }
    let paths = find_summaries(dir)?;
    if paths.is_empty() {
        return Err(Failure::Io(format!("{}: no summary.json found", dir.display())));
    }
    let summaries = paths
        .iter()
        .map(|p| {
            let parent = p.parent().unwrap_or(dir);
            let source = parent.strip_prefix(dir).unwrap_or(parent).to_string_lossy().replace('\\', "/");
            let source = if source.is_empty() { ".".to_string() } else { source };
            Ok((source, read_summary(p)?))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let text = render_report(&summaries);
    let path = dir.join("report.txt");
    fs::write(&path, &text).map_err(|e| Failure::io(&path, e))?;
    write_plot_data(&dir.join("plot-data.csv"), &summaries)?;
    print!("{text}");
    Ok(())
}
