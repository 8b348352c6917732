use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sensorimotor::dataset::InputRow;
use sensorimotor::models::{ArchKind, ArchitectureSpec, Network, SequenceBatch, NETWORK_GRADCHECK_FLOOR};
use sensorimotor::nn::GradCheckConfig;

fn rows(n: usize, rng: &mut ChaCha8Rng) -> Vec<InputRow> {
    (0..n)
        .map(|_| {
            let mut r = [0.0; 7];
            for v in &mut r[..5] {
                *v = rng.random();
            }
            r[5] = rng.random();
            r[6] = rng.random_range(-1.0..1.0);
            r
        })
        .collect()
}

fn random_spec(rng: &mut ChaCha8Rng) -> ArchitectureSpec {
    let kind = ArchKind::ALL[rng.random_range(0..4)];
    let mut spec = ArchitectureSpec::canonical(kind);
    let layers = |rng: &mut ChaCha8Rng, max: usize| (0..rng.random_range(1..=max)).map(|_| rng.random_range(2..12)).collect::<Vec<_>>();
    spec.sensory_hidden = layers(rng, 2);
    if kind.uses_motor() {
        spec.motor_hidden = layers(rng, 2);
    }
    if kind.is_recurrent() {
        spec.lstm = layers(rng, 3);
        spec.horizon = rng.random_range(2..8);
    }
    spec.predictor_hidden = rng.random_range(2..20);
    spec
}

#[test]
fn random_architectures_have_exact_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let spec = random_spec(&mut rng);
        spec.validate().unwrap();
        let steps = spec.window().map_or(rng.random_range(1..4), |w| w - 1);
        let batch = rng.random_range(1..4);
        let data = rows(steps * batch + 1, &mut rng);
        let starts: Vec<usize> = (0..batch).map(|b| b * steps).collect();
        let batch = SequenceBatch::with_targets(&data, &starts, steps).unwrap();
        let net = Network::new(spec.clone(), case).unwrap();
        let report = net
            .check_gradients(
                &batch,
                GradCheckConfig {
                    seed: case,
                    floor: NETWORK_GRADCHECK_FLOOR,
                    samples_per_tensor: 50,
                    ..GradCheckConfig::default()
                },
            )
            .unwrap();
        assert!(report.checked > report.skipped, "case {case}");
        assert!(report.max_rel_error < 1e-5, "case {case} {spec:?}: {report:?}");
    }
}
