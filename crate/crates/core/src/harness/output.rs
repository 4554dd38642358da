//! CSV and JSON artifacts of a sweep, and the text report built from them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{sensitivity, CurveSelection, Param, Problem, SensitivityPoint, Setting, SweepGrid, SweepResult};
use crate::error::{Error, Result};
use crate::learners::Algorithm;
use crate::mdp::FeatureKind;
use crate::metrics::MetricKind;

pub const SUMMARY_VERSION: u32 = 1;
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Serialize)]
struct RawRow<'a> {
    algorithm: &'a str,
    setting: &'a str,
    representation: &'a str,
    alpha: f64,
    eta: f64,
    lambda: f64,
    mdp_id: usize,
    run_id: usize,
    step: usize,
    metric_value: f64,
}

#[derive(Serialize)]
struct AggregatedRow<'a> {
    algorithm: &'a str,
    setting: &'a str,
    representation: &'a str,
    alpha: f64,
    eta: f64,
    lambda: f64,
    step: usize,
    mean: f64,
    stderr: f64,
    n: usize,
}

#[derive(Serialize)]
struct ObjectiveRow<'a> {
    algorithm: &'a str,
    setting: &'a str,
    representation: &'a str,
    alpha: f64,
    eta: f64,
    lambda: f64,
    objective: f64,
    final_mean: f64,
    diverged_runs: usize,
}

#[derive(Serialize)]
struct SensitivityRow<'a> {
    algorithm: &'a str,
    setting: &'a str,
    representation: &'a str,
    parameter: &'a str,
    value: f64,
    objective: f64,
    alpha: f64,
    eta: f64,
    lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestCell {
    pub alpha: f64,
    pub eta: f64,
    pub lambda: f64,
    pub objective: f64,
    pub final_mean: f64,
    pub diverged_runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub algorithm: Algorithm,
    pub setting: Setting,
    pub representation: FeatureKind,
    pub metric: MetricKind,
    pub n_steps: usize,
    pub n_runs: usize,
    pub n_mdps: usize,
    pub grid: SweepGrid,
    pub best: BestCell,
    pub best_mean: Vec<f64>,
    pub best_stderr: Vec<f64>,
    pub sensitivity: BTreeMap<String, Vec<SensitivityPoint>>,
    pub diverged_runs: usize,
    pub clamped_cells: usize,
    pub rejected_seeds: Vec<Vec<u64>>,
    pub environment_fingerprints: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: u32,
    pub seed_root: u64,
    pub sweeps: Vec<SweepSummary>,
}

impl SweepSummary {
    pub fn new(r: &SweepResult) -> Self {
        let b = r.best_cell();
        Self {
            algorithm: r.algorithm,
            setting: r.setting,
            representation: r.representation,
            metric: r.metric,
            n_steps: r.n_steps,
            n_runs: r.n_runs,
            n_mdps: r.n_mdps,
            grid: r.grid.clone(),
            best: BestCell {
                alpha: b.alpha,
                eta: b.eta,
                lambda: b.lambda,
                objective: b.objective,
                final_mean: *b.mean.last().unwrap_or(&f64::NAN),
                diverged_runs: b.diverged_runs,
            },
            best_mean: b.mean.clone(),
            best_stderr: b.stderr.clone(),
            sensitivity: Param::ALL.iter().map(|&p| (p.name().to_string(), sensitivity(r, p))).collect(),
            diverged_runs: r.metadata.diverged_runs,
            clamped_cells: r.metadata.clamped_cells,
            rejected_seeds: r.metadata.rejected_seeds.clone(),
            environment_fingerprints: r.metadata.environment_fingerprints.clone(),
            notes: r.metadata.notes.clone(),
        }
    }
}

fn io_context(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::io::BufWriter<fs::File>>> {
    let file = fs::File::create(path).map_err(|e| io_context(path, e))?;
    Ok(csv::Writer::from_writer(std::io::BufWriter::new(file)))
}

/// Writes `raw.csv`, `aggregated.csv`, `objectives.csv`, `sensitivity.csv`,
/// `summary.json` and one `environments/mdp-<i>.json` per problem under `dir`.
/// Returns the written paths relative to `dir`.
///
/// Raw rows cover whatever per-run curves the results carry; `aggregated`
/// chooses between every cell's mean curve and only the best cell's.
pub fn write_sweep_artifacts(
    dir: &Path,
    results: &[SweepResult],
    problems: &[Problem],
    aggregated: CurveSelection,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir.join("environments")).map_err(|e| io_context(dir, e))?;
    let mut written = Vec::new();

    let mut raw = csv_writer(&dir.join("raw.csv"))?;
    let mut agg = csv_writer(&dir.join("aggregated.csv"))?;
    let mut obj = csv_writer(&dir.join("objectives.csv"))?;
    let mut sens = csv_writer(&dir.join("sensitivity.csv"))?;
    for r in results {
        let (algorithm, setting, representation) = (r.algorithm.name(), r.setting.name(), r.representation.name());
        for curve in &r.raw {
            let cell = &r.cells[curve.cell];
            for (t, &v) in curve.values.iter().enumerate() {
                raw.serialize(RawRow {
                    algorithm,
                    setting,
                    representation,
                    alpha: cell.alpha,
                    eta: cell.eta,
                    lambda: cell.lambda,
                    mdp_id: curve.mdp_id,
                    run_id: curve.run_id,
                    step: t + 1,
                    metric_value: v,
                })?;
            }
        }
        let cells: Vec<usize> = match aggregated {
            CurveSelection::All => (0..r.cells.len()).collect(),
            CurveSelection::Best => vec![r.best],
            CurveSelection::None => Vec::new(),
        };
        for k in cells {
            let cell = &r.cells[k];
            for (t, (&mean, &stderr)) in cell.mean.iter().zip(&cell.stderr).enumerate() {
                agg.serialize(AggregatedRow {
                    algorithm,
                    setting,
                    representation,
                    alpha: cell.alpha,
                    eta: cell.eta,
                    lambda: cell.lambda,
                    step: t + 1,
                    mean,
                    stderr,
                    n: cell.n,
                })?;
            }
        }
        for cell in &r.cells {
            obj.serialize(ObjectiveRow {
                algorithm,
                setting,
                representation,
                alpha: cell.alpha,
                eta: cell.eta,
                lambda: cell.lambda,
                objective: cell.objective,
                final_mean: *cell.mean.last().unwrap_or(&f64::NAN),
                diverged_runs: cell.diverged_runs,
            })?;
        }
        for p in Param::ALL {
            for point in sensitivity(r, p) {
                let cell = &r.cells[point.cell];
                sens.serialize(SensitivityRow {
                    algorithm,
                    setting,
                    representation,
                    parameter: p.name(),
                    value: point.value,
                    objective: point.objective,
                    alpha: cell.alpha,
                    eta: cell.eta,
                    lambda: cell.lambda,
                })?;
            }
        }
    }
    for (w, name) in [(raw, "raw.csv"), (agg, "aggregated.csv"), (obj, "objectives.csv"), (sens, "sensitivity.csv")] {
        let mut w = w;
        w.flush().map_err(|e| io_context(&dir.join(name), e))?;
        written.push(PathBuf::from(name));
    }

    let summary = Summary {
        version: SUMMARY_VERSION,
        seed_root: results.first().map_or(0, |r| r.seed_root),
        sweeps: results.iter().map(SweepSummary::new).collect(),
    };
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, serde_json::to_string_pretty(&summary)?).map_err(|e| io_context(&path, e))?;
    written.push(PathBuf::from(SUMMARY_FILE));

    for (i, p) in problems.iter().enumerate() {
        let rel = PathBuf::from("environments").join(format!("mdp-{i}.json"));
        let path = dir.join(&rel);
        fs::write(&path, p.environment().to_json()?).map_err(|e| io_context(&path, e))?;
        written.push(rel);
    }
    Ok(written)
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path).map_err(|e| io_context(path, e))?;
    let summary: Summary = serde_json::from_str(&text)?;
    if summary.version != SUMMARY_VERSION {
        return Err(Error::InvalidArgument(format!(
            "{}: unsupported summary version {}",
            path.display(),
            summary.version
        )));
    }
    Ok(summary)
}

/// All `summary.json` files below `dir`, sorted by path.
pub fn find_summaries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut pending = vec![dir.to_path_buf()];
    while let Some(d) = pending.pop() {
        for entry in fs::read_dir(&d).map_err(|e| io_context(&d, e))? {
            let path = entry.map_err(|e| io_context(&d, e))?.path();
            if path.is_dir() {
                pending.push(path);
            } else if path.file_name().is_some_and(|n| n == SUMMARY_FILE) {
                found.push(path);
            }
        }
    }
    found.sort();
    Ok(found)
}

#[derive(Serialize)]
struct PlotRow<'a> {
    source: &'a str,
    setting: &'a str,
    representation: &'a str,
    algorithm: &'a str,
    series: &'a str,
    x: f64,
    y: f64,
    stderr: f64,
}

/// Long-format plot data: best learning curves (`series = curve`) and the
/// three sensitivity curves (`series = alpha|eta|lambda`).
pub fn write_plot_data(path: &Path, summaries: &[(String, Summary)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for (source, summary) in summaries {
        for s in &summary.sweeps {
            let (setting, representation, algorithm) = (s.setting.name(), s.representation.name(), s.algorithm.name());
            for (t, (&y, &se)) in s.best_mean.iter().zip(&s.best_stderr).enumerate() {
                w.serialize(PlotRow {
                    source,
                    setting,
                    representation,
                    algorithm,
                    series: "curve",
                    x: (t + 1) as f64,
                    y,
                    stderr: se,
                })?;
            }
            for (param, points) in &s.sensitivity {
                for p in points {
                    w.serialize(PlotRow {
                        source,
                        setting,
                        representation,
                        algorithm,
                        series: param,
                        x: p.value,
                        y: p.objective,
                        stderr: 0.0,
                    })?;
                }
            }
        }
    }
    w.flush().map_err(|e| io_context(path, e))
}

/// Human-readable report: one section per summary, one line per algorithm.
pub fn render_report(summaries: &[(String, Summary)]) -> String {
    let mut out = String::new();
    for (source, summary) in summaries {
        let mut sweeps: Vec<&SweepSummary> = summary.sweeps.iter().collect();
        sweeps.sort_by_key(|s| (s.setting, s.representation.name(), s.algorithm.name()));
        let first = sweeps.first();
        let _ = writeln!(
            out,
            "## {source}: {} / {} ({}; seed root {})",
            first.map_or("-", |s| s.setting.name()),
            first.map_or("-", |s| s.representation.name()),
            first.map_or("-", |s| s.metric.name()),
            summary.seed_root
        );
        let _ = writeln!(
            out,
            "{:<12} {:>12} {:>10} {:>6} {:>12} {:>12} {:>9}",
            "algorithm", "alpha", "eta", "lambda", "objective", "final", "diverged"
        );
        for s in sweeps {
            let b = &s.best;
            let _ = writeln!(
                out,
                "{:<12} {:>12.6e} {:>10.4e} {:>6.2} {:>12.6} {:>12.6} {:>9}",
                s.algorithm.name(),
                b.alpha,
                b.eta,
                b.lambda,
                b.objective,
                b.final_mean,
                if s.diverged_runs > 0 { format!("{} runs", s.diverged_runs) } else { "no".into() }
            );
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{build_problems, run_sweep_with, RunConfig};

    #[test]
    fn artifacts_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().to_path_buf();
        let mut c = RunConfig::new(Algorithm::Htd, Setting::OnPolicy, FeatureKind::Binary);
        c.n_mdps = 2;
        c.n_runs = 2;
        c.n_steps = 20;
        c.mdp_shape.n_states = 8;
        let grid = SweepGrid::single(0.1, 1.0, 0.5);
        let problems = build_problems(&c).unwrap();
        let r = run_sweep_with(&c, &grid, &problems).unwrap();
        let files = write_sweep_artifacts(&dir, &[r.clone()], &problems, CurveSelection::All).unwrap();
        assert_eq!(files.len(), 7);
        let raw = fs::read_to_string(dir.join("raw.csv")).unwrap();
        // header + 2 MDPs × 2 runs × 20 steps
        assert_eq!(raw.lines().count(), 1 + 4 * 20);
        assert!(raw.starts_with("algorithm,setting,representation,alpha,eta,lambda,mdp_id,run_id,step,metric_value"));
        let summary = read_summary(&dir.join(SUMMARY_FILE)).unwrap();
        assert_eq!(summary.sweeps[0], SweepSummary::new(&r));
        assert_eq!(find_summaries(&dir).unwrap(), vec![dir.join(SUMMARY_FILE)]);
        let report = render_report(&[("x".into(), summary)]);
        assert!(report.contains("htd"));
    }
}
