use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MdpShape, Problem, Setting, TrialStream};
use crate::error::{Error, Result};
use crate::learners::{Algorithm, HyperParams, LearnerState};
use crate::mdp::{sample_step, FeatureKind, TransitionSample};
use crate::metrics::Evaluator;
use crate::seed;

/// Real-time budget simulation settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealtimeConfig {
    /// Compute budget per interaction step in milliseconds; `f64::INFINITY` never binds.
    pub c_ms: f64,
    pub n_iterations: usize,
    /// Upper bound on samples processed in one iteration. Required when the
    /// budget is infinite.
    pub max_samples_per_iteration: Option<usize>,
    pub seed: u64,
    pub clamp_ceiling: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealtimeCurve {
    pub algorithm: Algorithm,
    /// Error at the end of each iteration.
    pub errors: Vec<f64>,
    /// Samples processed during each iteration (0 while paying off an overrun).
    pub samples: Vec<usize>,
    pub diverged: bool,
    /// Set when the clock is too coarse for the budget.
    pub warning: Option<String>,
}

/// Smallest non-zero step observed on the monotonic clock.
pub fn timer_granularity() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..200 {
        let t0 = Instant::now();
        let mut t1 = Instant::now();
        while t1 == t0 {
            t1 = Instant::now();
        }
        best = best.min(t1 - t0);
    }
    best
}

/// Runs each learner against the same sample stream under a per-iteration
/// compute budget.
///
/// Each step is charged the wall-clock time of drawing its sample and applying
/// the update; scoring is free. Within an iteration the learner keeps taking
/// fresh samples until the budget is spent; the update that crosses the
/// boundary completes and its overrun is carried into the following
/// iterations, which process nothing until the debt is paid. Samples that
/// arrive while the learner is busy are never seen, so the stream is not
/// advanced for them. With an infinite budget and a cap of `k` samples per
/// iteration, iteration `i` reports the error after `(i + 1)k` updates,
/// exactly as [`run_trial`](super::run_trial) would.
pub fn run_realtime(
    problem: &Problem,
    learners: &[(Algorithm, HyperParams)],
    config: &RealtimeConfig,
    evaluator: &Evaluator,
) -> Result<Vec<RealtimeCurve>> {
    if !(config.c_ms > 0.0) {
        return Err(Error::InvalidArgument(format!("budget {} ms must be positive", config.c_ms)));
    }
    if config.c_ms.is_infinite() && config.max_samples_per_iteration.is_none() {
        return Err(Error::InvalidArgument(
            "an infinite budget needs a per-iteration sample cap".into(),
        ));
    }
    if config.max_samples_per_iteration == Some(0) {
        return Err(Error::InvalidArgument("per-iteration sample cap must be positive".into()));
    }
    let budget_ns = config.c_ms * 1e6;
    let granularity = timer_granularity().as_nanos() as f64;
    let warning = (granularity > budget_ns / 10.0).then(|| {
        format!("clock granularity {granularity} ns exceeds a tenth of the {} ms budget", config.c_ms)
    });

    learners
        .iter()
        .map(|&(algorithm, hp)| {
            let mut stream = TrialStream::new(problem, algorithm, hp, config.seed)?;
            let mut errors = Vec::with_capacity(config.n_iterations);
            let mut samples = Vec::with_capacity(config.n_iterations);
            let mut debt = 0.0;
            let mut diverged = false;
            for _ in 0..config.n_iterations {
                let mut count = 0;
                if debt >= budget_ns {
                    debt -= budget_ns;
                } else {
                    let mut remaining = budget_ns - debt;
                    debt = 0.0;
                    while !diverged && config.max_samples_per_iteration.is_none_or(|k| count < k) {
                        let t0 = Instant::now();
                        let outcome = stream.step();
                        let elapsed = t0.elapsed().as_nanos() as f64;
                        count += 1;
                        match outcome {
                            Ok(()) => {}
                            Err(Error::NonFinite(_)) => diverged = true,
                            Err(e) => return Err(e),
                        }
                        remaining -= elapsed;
                        if remaining < 0.0 {
                            debt = -remaining;
                            break;
                        }
                    }
                }
                let error = if diverged {
                    config.clamp_ceiling
                } else {
                    let v = evaluator.evaluate(stream.weights())?;
                    if v.is_finite() { v.min(config.clamp_ceiling) } else { config.clamp_ceiling }
                };
                errors.push(error);
                samples.push(count);
            }
            Ok(RealtimeCurve { algorithm, errors, samples, diverged, warning: warning.clone() })
        })
        .collect()
}

/// Update-timing protocol: per MDP and run, a fixed trajectory is generated up
/// front and the time to apply `n_steps` updates from a fresh learner is taken
/// as the median of `repetitions` passes, after one untimed warm-up pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeConfig {
    pub setting: Setting,
    pub n_mdps: usize,
    pub n_runs: usize,
    pub n_steps: usize,
    pub repetitions: usize,
    pub seed_root: u64,
    pub mdp_shape: MdpShape,
    pub hp: HyperParams,
}

impl RuntimeConfig {
    pub fn new(setting: Setting) -> Self {
        Self {
            setting,
            n_mdps: 5,
            n_runs: 5,
            n_steps: 500,
            repetitions: 11,
            seed_root: super::DEFAULT_SEED_ROOT,
            mdp_shape: MdpShape::default(),
            hp: HyperParams { alpha: 0.05, eta: 1.0, lambda: 0.9, beta_scale: HyperParams::DEFAULT_BETA_SCALE },
        }
    }
}

fn trajectory(problem: &Problem, n: usize, seed: u64) -> Vec<TransitionSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = rng.random_range(0..problem.mdp.n_states());
    (0..n)
        .map(|_| {
            let t = sample_step(&problem.mdp, &problem.policies, s, &mut rng);
            s = t.s_next;
            t
        })
        .collect()
}

/// Average over MDPs and runs of the median wall-clock time, in microseconds,
/// for `n_steps` updates with tabular features. Runs on the calling thread.
pub fn measure_runtime(algorithm: Algorithm, config: &RuntimeConfig) -> Result<f64> {
    if config.n_mdps == 0 || config.n_runs == 0 || config.repetitions == 0 {
        return Err(Error::InvalidArgument("runtime protocol needs at least one MDP, run and repetition".into()));
    }
    config.hp.validate()?;
    let mut total = 0.0;
    for i in 0..config.n_mdps {
        let problem = Problem::random(&config.mdp_shape, config.setting, FeatureKind::Tabular, config.seed_root, i)?;
        if algorithm.on_policy_only() && !problem.policies.is_on_policy() {
            return Err(Error::InvalidArgument(format!("{algorithm} requires on-policy sampling")));
        }
        let f = &problem.features;
        for j in 0..config.n_runs {
            let traj = trajectory(&problem, config.n_steps, seed::trial_seed(config.seed_root, i, j, 0));
            let pass = || {
                let mut state = LearnerState::with_weights(problem.init_w.clone());
                let t0 = Instant::now();
                for t in &traj {
                    let r = algorithm.update(&mut state, t, f.x(t.s), f.x(t.s_next), &config.hp);
                    black_box(r.is_ok());
                }
                let elapsed = t0.elapsed().as_secs_f64() * 1e6;
                black_box(&state.w);
                elapsed
            };
            // one untimed pass to warm caches and the branch predictor
            pass();
            let mut times: Vec<f64> = (0..config.repetitions).map(|_| pass()).collect();
            times.sort_unstable_by(f64::total_cmp);
            total += times[times.len() / 2];
        }
    }
    Ok(total / (config.n_mdps * config.n_runs) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run_trial;
    use crate::metrics::MetricKind;

    #[test]
    fn infinite_budget_matches_trial() {
        let p = Problem::random(&MdpShape::default(), Setting::OffPolicy, FeatureKind::Tabular, 3, 0).unwrap();
        let ev = p.evaluator(MetricKind::Mave, 0.0).unwrap();
        let hp = HyperParams::new(0.05, 1.0, 0.7).unwrap();
        let cfg = RealtimeConfig {
            c_ms: f64::INFINITY,
            n_iterations: 40,
            max_samples_per_iteration: Some(3),
            seed: 9,
            clamp_ceiling: 1e6,
        };
        let rt = run_realtime(&p, &[(Algorithm::Tohtd, hp), (Algorithm::Td0, hp)], &cfg, &ev).unwrap();
        for curve in &rt {
            let trial = run_trial(&p, curve.algorithm, hp, 120, 9, &ev, 1e6).unwrap();
            for (i, e) in curve.errors.iter().enumerate() {
                assert_eq!(*e, trial.values[3 * i + 2]);
            }
            assert!(curve.samples.iter().all(|&s| s == 3));
        }
    }

    #[test]
    fn invalid_budgets() {
        let p = Problem::baird().unwrap();
        let ev = p.evaluator(MetricKind::Rmse, 0.0).unwrap();
        let hp = HyperParams::new(0.01, 1.0, 0.0).unwrap();
        let mut cfg =
            RealtimeConfig { c_ms: f64::INFINITY, n_iterations: 1, max_samples_per_iteration: None, seed: 0, clamp_ceiling: 1e6 };
        assert!(run_realtime(&p, &[(Algorithm::Gtd, hp)], &cfg, &ev).is_err());
        cfg.c_ms = 0.0;
        assert!(run_realtime(&p, &[(Algorithm::Gtd, hp)], &cfg, &ev).is_err());
    }

    #[test]
    fn tight_budget_limits_samples() {
        let p = Problem::baird().unwrap();
        let ev = p.evaluator(MetricKind::Rmse, 0.0).unwrap();
        let hp = HyperParams::new(0.001, 1.0, 0.0).unwrap();
        let cfg = RealtimeConfig { c_ms: 0.05, n_iterations: 50, max_samples_per_iteration: None, seed: 0, clamp_ceiling: 1e6 };
        let rt = run_realtime(&p, &[(Algorithm::Td0, hp)], &cfg, &ev).unwrap();
        let total: usize = rt[0].samples.iter().sum();
        assert!(total >= 50, "at least one sample per busy iteration");
        assert_eq!(rt[0].errors.len(), 50);
    }

    #[test]
    fn runtime_is_positive() {
        let mut cfg = RuntimeConfig::new(Setting::OnPolicy);
        cfg.n_mdps = 1;
        cfg.n_runs = 1;
        cfg.repetitions = 3;
        let t = measure_runtime(Algorithm::Td0, &cfg).unwrap();
        assert!(t > 0.0);
        cfg.setting = Setting::OffPolicy;
        assert!(measure_runtime(Algorithm::Totd, &cfg).is_err());
    }
}
