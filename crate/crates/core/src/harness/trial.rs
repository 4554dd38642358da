use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Problem;
use crate::error::{Error, Result};
use crate::learners::{Algorithm, HyperParams, LearnerState};
use crate::mdp::sample_step;
use crate::metrics::{ErrorCurve, Evaluator};

/// A learner attached to one continuing trajectory. The start state is drawn
/// uniformly from the trial seed; every later draw comes from the same stream.
pub struct TrialStream<'a> {
    problem: &'a Problem,
    algorithm: Algorithm,
    hp: HyperParams,
    rng: ChaCha8Rng,
    s: usize,
    state: LearnerState,
}

impl<'a> TrialStream<'a> {
    pub fn new(problem: &'a Problem, algorithm: Algorithm, hp: HyperParams, seed: u64) -> Result<Self> {
        hp.validate()?;
        if algorithm.on_policy_only() && !problem.policies.is_on_policy() {
            return Err(Error::InvalidArgument(format!(
                "{algorithm} requires on-policy sampling"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = rng.random_range(0..problem.mdp.n_states());
        Ok(Self {
            problem,
            algorithm,
            hp,
            rng,
            s,
            state: LearnerState::with_weights(problem.init_w.clone()),
        })
    }

    /// Draws one transition and applies the update.
    pub fn step(&mut self) -> Result<()> {
        let sample = sample_step(&self.problem.mdp, &self.problem.policies, self.s, &mut self.rng);
        let f = &self.problem.features;
        let result = self.algorithm.update(&mut self.state, &sample, f.x(sample.s), f.x(sample.s_next), &self.hp);
        self.s = sample.s_next;
        result
    }

    pub fn weights(&self) -> &[f64] {
        &self.state.w
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }
}

/// Runs one learner for `n_steps` updates and scores the weights after each
/// update. A non-finite weight flags the run as diverged and fills the rest of
/// the curve with `ceiling`; finite scores above `ceiling` are clamped to it.
pub fn run_trial(
    problem: &Problem,
    algorithm: Algorithm,
    hp: HyperParams,
    n_steps: usize,
    seed: u64,
    evaluator: &Evaluator,
    ceiling: f64,
) -> Result<ErrorCurve> {
    let mut stream = TrialStream::new(problem, algorithm, hp, seed)?;
    let mut values = Vec::with_capacity(n_steps);
    let mut diverged = false;
    while values.len() < n_steps {
        match stream.step() {
            Ok(()) => {}
            Err(Error::NonFinite(_)) => {
                diverged = true;
                values.resize(n_steps, ceiling);
                break;
            }
            Err(e) => return Err(e),
        }
        let v = evaluator.evaluate(stream.weights())?;
        values.push(if v.is_finite() { v.min(ceiling) } else { ceiling });
    }
    Ok(ErrorCurve { metric: evaluator.kind(), values, diverged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{MdpShape, Setting};
    use crate::mdp::FeatureKind;
    use crate::metrics::MetricKind;

    fn problem() -> Problem {
        Problem::random(&MdpShape::default(), Setting::OffPolicy, FeatureKind::Tabular, 11, 0).unwrap()
    }

    #[test]
    fn deterministic_given_seed() {
        let p = problem();
        let ev = p.evaluator(MetricKind::Mave, 0.0).unwrap();
        let hp = HyperParams::new(0.05, 1.0, 0.5).unwrap();
        let a = run_trial(&p, Algorithm::Htd, hp, 300, 5, &ev, 1e6).unwrap();
        let b = run_trial(&p, Algorithm::Htd, hp, 300, 5, &ev, 1e6).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values.len(), 300);
        let c = run_trial(&p, Algorithm::Htd, hp, 300, 6, &ev, 1e6).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn on_policy_only_methods_rejected_off_policy() {
        let p = problem();
        let ev = p.evaluator(MetricKind::Mave, 0.0).unwrap();
        let hp = HyperParams::new(0.05, 1.0, 0.5).unwrap();
        assert!(run_trial(&p, Algorithm::Totd, hp, 10, 0, &ev, 1e6).is_err());
    }

    #[test]
    fn divergence_is_flagged_and_clamped() {
        let p = Problem::baird().unwrap();
        let ev = p.evaluator(MetricKind::Rmse, 0.0).unwrap();
        let hp = HyperParams::new(1.0, 1.0, 0.0).unwrap();
        let c = run_trial(&p, Algorithm::Td0, hp, 3000, 1, &ev, 1e6).unwrap();
        assert!(c.diverged);
        assert_eq!(*c.values.last().unwrap(), 1e6);
        assert!(c.values.iter().all(|v| v.is_finite() && *v <= 1e6));
    }
}
