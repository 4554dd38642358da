use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use tdlab_core::mdp::{generate_random_mdp, make_features, make_policies, sample_step};
use tdlab_core::{Algorithm, FeatureKind, HyperParams, LearnerState};

fn update_cost(c: &mut Criterion) {
    let mdp = generate_random_mdp(30, 3, 4, 2, 1).unwrap();
    let policies = make_policies(&mdp, 0.9, 0.9, 1).unwrap();
    let features = make_features(&mdp, FeatureKind::Tabular, 1).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut s = 0;
    let samples: Vec<_> = (0..500)
        .map(|_| {
            let t = sample_step(&mdp, &policies, s, &mut rng);
            s = t.s_next;
            t
        })
        .collect();
    let hp = HyperParams::new(0.001, 1.0, 0.9).unwrap();

    let mut group = c.benchmark_group("500 updates");
    for alg in Algorithm::ALL {
        group.bench_function(BenchmarkId::from_parameter(alg.name()), |b| {
            b.iter_batched_ref(
                || LearnerState::new(features.d()),
                |state| {
                    for t in &samples {
                        let _ = alg.update(state, t, features.x(t.s), features.x(t.s_next), &hp);
                    }
                    black_box(&state.w);
                },
                criterion::BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, update_cost);
criterion_main!(benches);
