use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate, last_half_mean};
use super::{run_trial, CurveSelection, Problem, RunConfig, Setting, SweepGrid};
use crate::error::{Error, Result};
use crate::learners::{Algorithm, HyperParams};
use crate::mdp::FeatureKind;
use crate::metrics::MetricKind;
use crate::seed;

/// Aggregated curve and objective of one `(α, η, λ)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub alpha: f64,
    pub eta: f64,
    pub lambda: f64,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Number of curves aggregated (runs × MDPs).
    pub n: usize,
    /// Mean of the aggregated curve over the last half of the run.
    pub objective: f64,
    pub diverged_runs: usize,
}

/// Curve of one run, kept for the raw output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawCurve {
    pub cell: usize,
    pub mdp_id: usize,
    pub run_id: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    /// Runs flagged as diverged, summed over all cells.
    pub diverged_runs: usize,
    /// Cells with at least one diverged run.
    pub clamped_cells: usize,
    /// Per MDP, the seeds rejected before an instance was accepted.
    pub rejected_seeds: Vec<Vec<u64>>,
    pub environment_fingerprints: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub algorithm: Algorithm,
    pub setting: Setting,
    pub representation: FeatureKind,
    pub metric: MetricKind,
    pub n_steps: usize,
    pub n_runs: usize,
    pub n_mdps: usize,
    pub seed_root: u64,
    pub grid: SweepGrid,
    /// One entry per grid cell in [`SweepGrid::cell_indices`] order.
    pub cells: Vec<CellResult>,
    pub best: usize,
    pub raw: Vec<RawCurve>,
    pub metadata: SweepMetadata,
}

/// Builds the benchmark instances of a configuration.
pub fn build_problems(config: &RunConfig) -> Result<Vec<Problem>> {
    config.validate()?;
    if config.setting == Setting::Baird {
        return Ok(vec![Problem::baird()?]);
    }
    config
        .execution
        .map(config.n_mdps, |i| {
            Problem::random(&config.mdp_shape, config.setting, config.representation, config.seed_root, i)
        })
        .into_iter()
        .collect()
}

/// Builds the problems for `config` and sweeps `grid` over them.
pub fn run_sweep(config: &RunConfig, grid: &SweepGrid) -> Result<SweepResult> {
    let problems = build_problems(config)?;
    run_sweep_with(config, grid, &problems)
}

/// Index of the cell whose result stands in for `k`: parameters the algorithm
/// ignores are pinned to their first grid value so that such cells are run once.
fn representative(algorithm: Algorithm, grid: &SweepGrid, k: usize) -> usize {
    let (ia, ie, il) = grid.cell_indices(k);
    let ie = if algorithm.uses_eta() { ie } else { 0 };
    let il = if algorithm.uses_lambda() { il } else { 0 };
    grid.cell_index(ia, ie, il)
}

fn hyper_params(grid: &SweepGrid, k: usize) -> Result<HyperParams> {
    let (ia, ie, il) = grid.cell_indices(k);
    HyperParams::new(grid.alphas[ia], grid.etas[ie], grid.lambdas[il])
}

struct CellRun {
    result: CellResult,
    raw: Vec<RawCurve>,
}

fn run_cell(config: &RunConfig, grid: &SweepGrid, problems: &[Problem], k: usize, keep_raw: bool) -> Result<CellRun> {
    let hp = hyper_params(grid, k)?;
    let evaluators = problems
        .iter()
        .map(|p| p.evaluator(config.metric, hp.lambda))
        .collect::<Result<Vec<_>>>()?;
    let n_runs = config.n_runs;
    let curves = config
        .execution
        .map(problems.len() * n_runs, |item| {
            let (mdp, run) = (item / n_runs, item % n_runs);
            run_trial(
                &problems[mdp],
                config.algorithm,
                hp,
                config.n_steps,
                seed::trial_seed(config.seed_root, mdp, run, k),
                &evaluators[mdp],
                config.clamp_ceiling,
            )
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let agg = aggregate(&curves.iter().map(|c| c.values.as_slice()).collect::<Vec<_>>())?;
    let diverged_runs = curves.iter().filter(|c| c.diverged).count();
    let raw = if keep_raw {
        curves
            .into_iter()
            .enumerate()
            .map(|(item, c)| RawCurve { cell: k, mdp_id: item / n_runs, run_id: item % n_runs, values: c.values })
            .collect()
    } else {
        Vec::new()
    };
    Ok(CellRun {
        result: CellResult {
            alpha: hp.alpha,
            eta: hp.eta,
            lambda: hp.lambda,
            objective: last_half_mean(&agg.mean),
            mean: agg.mean,
            stderr: agg.stderr,
            n: agg.n,
            diverged_runs,
        },
        raw,
    })
}

/// Sweeps every cell of `grid` over pre-built problems. Work items are
/// independent and seeded by `(seed_root, mdp, run, cell)`, so the result does
/// not depend on the execution mode or worker count.
pub fn run_sweep_with(config: &RunConfig, grid: &SweepGrid, problems: &[Problem]) -> Result<SweepResult> {
    config.validate()?;
    grid.validate()?;
    if problems.is_empty() {
        return Err(Error::InvalidArgument("no problems to sweep".into()));
    }
    let n_cells = grid.n_cells();
    let reps: Vec<usize> = (0..n_cells).map(|k| representative(config.algorithm, grid, k)).collect();
    let mut unique = reps.clone();
    unique.sort_unstable();
    unique.dedup();

    let keep_all = config.raw == CurveSelection::All;
    let runs = config
        .execution
        .map(unique.len(), |u| run_cell(config, grid, problems, unique[u], keep_all))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut by_rep = std::collections::HashMap::with_capacity(unique.len());
    for (k, run) in unique.iter().zip(runs) {
        by_rep.insert(*k, run);
    }
    let mut raw = Vec::new();
    if keep_all {
        for (k, &rep) in reps.iter().enumerate() {
            raw.extend(by_rep[&rep].raw.iter().map(|r| RawCurve { cell: k, ..r.clone() }));
        }
    }
    let cells: Vec<CellResult> = (0..n_cells)
        .map(|k| {
            let (ia, ie, il) = grid.cell_indices(k);
            CellResult {
                alpha: grid.alphas[ia],
                eta: grid.etas[ie],
                lambda: grid.lambdas[il],
                ..by_rep[&reps[k]].result.clone()
            }
        })
        .collect();
    let best = select_best(grid, &cells);
    if config.raw == CurveSelection::Best {
        raw = run_cell(config, grid, problems, reps[best], true)?.raw;
        for r in &mut raw {
            r.cell = best;
        }
    }

    let mut notes = Vec::new();
    if grid.alphas == SweepGrid::random_mdp().alphas {
        notes.push(
            "step-size set {0.1·2^j : j = −8..6} has 15 values; the accompanying text counts 14".to_string(),
        );
    }
    if !config.algorithm.uses_eta() || !config.algorithm.uses_lambda() {
        notes.push(format!(
            "{} ignores {}; those cells repeat the result of the first grid value",
            config.algorithm,
            match (config.algorithm.uses_eta(), config.algorithm.uses_lambda()) {
                (false, false) => "eta and lambda",
                (false, true) => "eta",
                _ => "lambda",
            }
        ));
    }
    let metadata = SweepMetadata {
        diverged_runs: cells.iter().map(|c| c.diverged_runs).sum(),
        clamped_cells: cells.iter().filter(|c| c.diverged_runs > 0).count(),
        rejected_seeds: problems.iter().map(|p| p.rejected_seeds.clone()).collect(),
        environment_fingerprints: problems.iter().map(Problem::fingerprint).collect::<Result<_>>()?,
        notes,
    };
    Ok(SweepResult {
        algorithm: config.algorithm,
        setting: config.setting,
        representation: config.representation,
        metric: config.metric,
        n_steps: config.n_steps,
        n_runs: config.n_runs,
        n_mdps: problems.len(),
        seed_root: config.seed_root,
        grid: grid.clone(),
        cells,
        best,
        raw,
        metadata,
    })
}

/// Lowest objective; ties go to the smaller α, then η, then λ.
fn select_best(grid: &SweepGrid, cells: &[CellResult]) -> usize {
    let key = |k: usize| {
        let c = &cells[k];
        (c.objective, c.alpha, c.eta, c.lambda)
    };
    (0..grid.n_cells())
        .min_by(|&a, &b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(ka.2.total_cmp(&kb.2))
                .then(ka.3.total_cmp(&kb.3))
        })
        .unwrap_or(0)
}

impl SweepResult {
    pub fn best_cell(&self) -> &CellResult {
        &self.cells[self.best]
    }

    /// A result carrying only per-cell objectives, for exercising best-cell
    /// selection and sensitivity extraction on hand-made tables.
    pub fn from_objectives(grid: SweepGrid, objectives: &[f64]) -> Result<Self> {
        grid.validate()?;
        if objectives.len() != grid.n_cells() {
            return Err(Error::DimensionMismatch { expected: grid.n_cells(), actual: objectives.len() });
        }
        let cells: Vec<CellResult> = objectives
            .iter()
            .enumerate()
            .map(|(k, &objective)| {
                let (ia, ie, il) = grid.cell_indices(k);
                CellResult {
                    alpha: grid.alphas[ia],
                    eta: grid.etas[ie],
                    lambda: grid.lambdas[il],
                    mean: vec![objective],
                    stderr: vec![0.0],
                    n: 1,
                    objective,
                    diverged_runs: 0,
                }
            })
            .collect();
        let best = select_best(&grid, &cells);
        Ok(Self {
            algorithm: Algorithm::Td,
            setting: Setting::OnPolicy,
            representation: FeatureKind::Tabular,
            metric: MetricKind::Mave,
            n_steps: 1,
            n_runs: 1,
            n_mdps: 1,
            seed_root: 0,
            grid,
            cells,
            best,
            raw: Vec::new(),
            metadata: SweepMetadata::default(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Alpha,
    Eta,
    Lambda,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::Alpha, Param::Eta, Param::Lambda];

    pub fn name(self) -> &'static str {
        match self {
            Param::Alpha => "alpha",
            Param::Eta => "eta",
            Param::Lambda => "lambda",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPoint {
    pub value: f64,
    /// Lowest objective over the other two parameters.
    pub objective: f64,
    /// Cell achieving it.
    pub cell: usize,
}

/// For each value of `param`, the best objective over the remaining two
/// parameters (same tie-breaking as best-cell selection).
pub fn sensitivity(result: &SweepResult, param: Param) -> Vec<SensitivityPoint> {
    let grid = &result.grid;
    let values = match param {
        Param::Alpha => &grid.alphas,
        Param::Eta => &grid.etas,
        Param::Lambda => &grid.lambdas,
    };
    values
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let members: Vec<usize> = (0..grid.n_cells())
                .filter(|&k| {
                    let (ia, ie, il) = grid.cell_indices(k);
                    i == match param {
                        Param::Alpha => ia,
                        Param::Eta => ie,
                        Param::Lambda => il,
                    }
                })
                .collect();
            let cell = members
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    let (ca, cb) = (&result.cells[a], &result.cells[b]);
                    ca.objective
                        .total_cmp(&cb.objective)
                        .then(ca.alpha.total_cmp(&cb.alpha))
                        .then(ca.eta.total_cmp(&cb.eta))
                        .then(ca.lambda.total_cmp(&cb.lambda))
                })
                .expect("every grid value has at least one cell");
            SensitivityPoint { value, objective: result.cells[cell].objective, cell }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;

    fn small_config(algorithm: Algorithm) -> RunConfig {
        let mut c = RunConfig::new(algorithm, Setting::OffPolicy, FeatureKind::Tabular);
        c.n_mdps = 2;
        c.n_runs = 3;
        c.n_steps = 50;
        c.mdp_shape.n_states = 8;
        c
    }

    #[test]
    fn single_cell_is_best() {
        let r = SweepResult::from_objectives(SweepGrid::single(0.1, 1.0, 0.0), &[3.0]).unwrap();
        assert_eq!(r.best, 0);
        for p in Param::ALL {
            let s = sensitivity(&r, p);
            assert_eq!(s.len(), 1);
            assert_eq!(s[0].objective, 3.0);
        }
    }

    #[test]
    fn ties_break_towards_small_parameters() {
        let grid = SweepGrid { alphas: vec![0.2, 0.1], etas: vec![1.0], lambdas: vec![0.5, 0.0] };
        let r = SweepResult::from_objectives(grid, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        let b = r.best_cell();
        assert_eq!((b.alpha, b.lambda), (0.1, 0.0));
    }

    #[test]
    fn sweep_is_deterministic_across_execution_modes() {
        let grid = SweepGrid { alphas: vec![0.05, 0.2], etas: vec![0.5, 1.0], lambdas: vec![0.0, 0.9] };
        let mut c = small_config(Algorithm::Gtd);
        c.execution = Execution::Sequential;
        let a = run_sweep(&c, &grid).unwrap();
        c.execution = Execution::Parallel;
        let b = run_sweep(&c, &grid).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 8);
        assert!(a.cells.iter().all(|cell| cell.n == 6 && cell.mean.len() == 50));
        let best = a.best_cell().objective;
        assert!(a.cells.iter().all(|cell| best <= cell.objective));
        assert_eq!(a.raw.len(), 6);
        assert!(a.raw.iter().all(|r| r.cell == a.best));
    }

    #[test]
    fn ignored_parameters_share_results() {
        let grid = SweepGrid { alphas: vec![0.1], etas: vec![0.5, 1.0], lambdas: vec![0.0, 0.9] };
        let mut c = small_config(Algorithm::Td0);
        c.setting = Setting::OnPolicy;
        let r = run_sweep(&c, &grid).unwrap();
        for cell in &r.cells[1..] {
            assert_eq!(cell.mean, r.cells[0].mean);
        }
        // TD(λ) ignores η only.
        c.algorithm = Algorithm::Td;
        let r = run_sweep(&c, &grid).unwrap();
        assert_eq!(r.cells[0].mean, r.cells[2].mean);
        assert_ne!(r.cells[0].mean, r.cells[1].mean);
    }

    #[test]
    fn raw_curve_selection() {
        let grid = SweepGrid { alphas: vec![0.05, 0.2], etas: vec![1.0], lambdas: vec![0.0] };
        let mut c = small_config(Algorithm::Td0);
        c.raw = CurveSelection::All;
        let all = run_sweep(&c, &grid).unwrap();
        assert_eq!(all.raw.len(), 12);
        let mut lambdas = grid.clone();
        lambdas.lambdas = vec![0.0, 0.5];
        // TD(0) ignores λ, but every cell still gets its own raw rows.
        let replicated = run_sweep(&c, &lambdas).unwrap();
        assert_eq!(replicated.raw.len(), 24);
        assert_eq!(replicated.raw[0].values, replicated.raw[6].values);
        assert_eq!(replicated.raw[6].cell, 1);
        c.raw = CurveSelection::None;
        assert!(run_sweep(&c, &grid).unwrap().raw.is_empty());
        c.raw = CurveSelection::Best;
        let best = run_sweep(&c, &grid).unwrap();
        let expected: Vec<_> = all.raw.iter().filter(|r| r.cell == best.best).cloned().collect();
        assert_eq!(best.raw, expected);
    }
}
