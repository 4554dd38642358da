#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdlab_core::harness::{MdpShape, Problem, Setting};
use tdlab_core::mdp::sample_step;
use tdlab_core::{Algorithm, FeatureKind, HyperParams, LearnerState, TransitionSample};

pub fn problem(n_states: usize, setting: Setting, kind: FeatureKind, seed: u64) -> Problem {
    let shape = MdpShape { n_states, ..MdpShape::default() };
    Problem::random(&shape, setting, kind, seed, 0).unwrap()
}

pub fn trajectory(problem: &Problem, len: usize, seed: u64) -> Vec<TransitionSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = rng.random_range(0..problem.mdp.n_states());
    (0..len)
        .map(|_| {
            let t = sample_step(&problem.mdp, &problem.policies, s, &mut rng);
            s = t.s_next;
            t
        })
        .collect()
}

/// `(w, h)` after every update.
pub fn replay(
    algorithm: Algorithm,
    problem: &Problem,
    samples: &[TransitionSample],
    hp: &HyperParams,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let f = &problem.features;
    let mut state = LearnerState::with_weights(problem.init_w.clone());
    samples
        .iter()
        .map(|t| {
            algorithm.update(&mut state, t, f.x(t.s), f.x(t.s_next), hp).unwrap();
            (state.w.clone(), state.h.clone())
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
