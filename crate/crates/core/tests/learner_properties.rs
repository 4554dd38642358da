mod common;

use common::{max_abs_diff, problem, replay, trajectory};
use proptest::prelude::*;
use tdlab_core::harness::Setting;
use tdlab_core::{Algorithm, FeatureKind, HyperParams, LearnerState, TransitionSample};

fn kind_strategy() -> impl Strategy<Value = FeatureKind> {
    prop_oneof![Just(FeatureKind::Tabular), Just(FeatureKind::AliasedTabular), Just(FeatureKind::Binary)]
}

fn assert_same_trajectory(a: &[(Vec<f64>, Vec<f64>)], b: &[(Vec<f64>, Vec<f64>)], tol: f64, what: &str) {
    for (t, ((wa, _), (wb, _))) in a.iter().zip(b).enumerate() {
        let scale = 1.0 + wa.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(max_abs_diff(wa, wb) <= tol * scale, "{what}: step {t} differs");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn hybrid_and_provisional_collapse_to_td_on_policy(
        seed in 0u64..10_000,
        kind in kind_strategy(),
        lambda in prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0],
        alpha in 0.001f64..0.2,
        eta in 0.01f64..4.0,
    ) {
        let p = problem(12, Setting::OnPolicy, kind, seed);
        let samples = trajectory(&p, 300, seed ^ 0xABCD);
        prop_assert!(samples.iter().all(|s| s.rho == 1.0));
        let hp = HyperParams::new(alpha, eta, lambda).unwrap();
        let td = replay(Algorithm::Td, &p, &samples, &hp);
        assert_same_trajectory(&td, &replay(Algorithm::Htd, &p, &samples, &hp), 1e-12, "htd");
        assert_same_trajectory(&td, &replay(Algorithm::Ptd, &p, &samples, &hp), 1e-12, "ptd");
    }

    #[test]
    fn true_online_methods_collapse_at_lambda_zero(
        seed in 0u64..10_000,
        kind in kind_strategy(),
        alpha in 0.001f64..0.2,
        eta in 0.01f64..4.0,
    ) {
        let p = problem(12, Setting::OffPolicy, kind, seed);
        let samples = trajectory(&p, 300, seed.wrapping_mul(31));
        let hp = HyperParams::new(alpha, eta, 0.0).unwrap();
        let pairs = [(Algorithm::Tohtd, Algorithm::Htd), (Algorithm::Togtd, Algorithm::Gtd)];
        for (online, plain) in pairs {
            let a = replay(online, &p, &samples, &hp);
            let b = replay(plain, &p, &samples, &hp);
            for (t, ((wa, ha), (wb, hb))) in a.iter().zip(&b).enumerate() {
                prop_assert!(max_abs_diff(wa, wb) <= 1e-12, "{} w step {}", online, t);
                prop_assert!(max_abs_diff(ha, hb) <= 1e-12, "{} h step {}", online, t);
            }
        }
    }

    #[test]
    fn corrections_vanish_on_the_first_on_policy_update(
        seed in 0u64..10_000,
        kind in kind_strategy(),
        lambda in 0.0f64..=1.0,
        alpha in 0.001f64..0.5,
        eta in 0.01f64..4.0,
    ) {
        let p = problem(10, Setting::OnPolicy, kind, seed);
        let samples = trajectory(&p, 1, seed + 1);
        let hp = HyperParams::new(alpha, eta, lambda).unwrap();
        let td = replay(Algorithm::Td, &p, &samples, &hp);
        for alg in [Algorithm::Gtd, Algorithm::Togtd, Algorithm::Htd, Algorithm::Tohtd] {
            let got = replay(alg, &p, &samples, &hp);
            prop_assert!(max_abs_diff(&got[0].0, &td[0].0) <= 1e-15, "{}", alg);
        }
    }

    #[test]
    fn updates_are_pure_functions_of_their_inputs(
        seed in 0u64..10_000,
        alg_index in 0usize..13,
        lambda in 0.0f64..=1.0,
    ) {
        let alg = Algorithm::ALL[alg_index];
        let setting = if alg.on_policy_only() { Setting::OnPolicy } else { Setting::OffPolicy };
        let p = problem(10, setting, FeatureKind::Binary, seed);
        let samples = trajectory(&p, 50, seed);
        let hp = HyperParams::new(0.05, 0.5, lambda).unwrap();
        prop_assert_eq!(replay(alg, &p, &samples, &hp), replay(alg, &p, &samples, &hp));
    }
}

#[test]
fn on_policy_equivalence_holds_over_long_runs_with_thirty_states() {
    let p = problem(30, Setting::OnPolicy, FeatureKind::Tabular, 42);
    let samples = trajectory(&p, 5000, 43);
    for lambda in [0.0, 0.5, 0.9, 1.0] {
        let hp = HyperParams::new(0.1, 1.0, lambda).unwrap();
        let td = replay(Algorithm::Td, &p, &samples, &hp);
        assert_same_trajectory(&td, &replay(Algorithm::Htd, &p, &samples, &hp), 1e-12, "htd");
        assert_same_trajectory(&td, &replay(Algorithm::Ptd, &p, &samples, &hp), 1e-12, "ptd");
    }
}

#[test]
fn off_policy_sampling_separates_hybrid_from_gradient_td() {
    let p = problem(12, Setting::OffPolicy, FeatureKind::Tabular, 5);
    let samples = trajectory(&p, 500, 6);
    let hp = HyperParams::new(0.1, 1.0, 0.9).unwrap();
    let htd = replay(Algorithm::Htd, &p, &samples, &hp);
    let gtd = replay(Algorithm::Gtd, &p, &samples, &hp);
    assert!(max_abs_diff(&htd.last().unwrap().0, &gtd.last().unwrap().0) > 1e-6);
}

#[test]
fn zero_reward_streams_keep_zero_weights() {
    let x = [0.3, 0.4, 0.5];
    let x_next = [0.5, 0.0, 0.5];
    let t = TransitionSample { s: 0, a: 0, s_next: 1, reward: 0.0, gamma_next: 0.9, rho: 1.2, interest: 1.0 };
    let hp = HyperParams::new(0.5, 2.0, 0.7).unwrap();
    for alg in Algorithm::ALL {
        let mut state = LearnerState::new(3);
        for _ in 0..50 {
            alg.update(&mut state, &t, &x, &x_next, &hp).unwrap();
        }
        assert_eq!(state.w, vec![0.0; 3], "{alg}");
        assert_eq!(state.h, vec![0.0; 3], "{alg}");
    }
}
