mod common;

use common::{audit_policy, free_point, march, MARCH_STEP};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sensorimotor::sim::{Environment, Point, Pose, SENSOR_RANGE};

fn envs() -> [Environment; 3] {
    [Environment::square(), Environment::rooms1(), Environment::rooms2()]
}

#[test]
fn ray_cast_matches_marching_oracle() {
    for (e, env) in envs().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + e as u64);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let o = free_point(env, &mut rng, 1e-3);
            let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let exact = env.ray_cast(o, angle, SENSOR_RANGE).unwrap();
            let marched = march(env, o, angle, SENSOR_RANGE, MARCH_STEP);
            worst = worst.max((exact - marched).abs());
        }
        assert!(worst < 1e-3, "{}: {worst}", env.name());
    }
}

#[test]
fn policy_never_penetrates_walls() {
    for (e, env) in envs().iter().enumerate() {
        for seed in 0..3u64 {
            let steps = if seed == 0 { 1_000_000 } else { 100_000 };
            let run = audit_policy(env, steps, 7 * seed + e as u64, 10);
            assert_eq!(run.penetrations, 0, "{} seed {seed}", env.name());
            assert_eq!(run.outside, 0, "{} seed {seed}", env.name());
            assert_eq!(run.clamps, 0, "{} seed {seed}", env.name());
            assert_eq!(run.unsafe_forward, 0, "{} seed {seed}", env.name());
        }
    }
}

#[test]
fn square_is_fully_explored() {
    let env = Environment::square();
    for seed in [1, 2, 3] {
        let run = audit_policy(&env, 100_000, seed, 10);
        assert_eq!(run.cells_visited(), 100, "seed {seed}");
    }
}

#[test]
fn readings_are_mirror_symmetric_on_the_mid_line() {
    let env = Environment::square();
    for x in [2.0, 10.0, 25.0, 41.5, 48.0] {
        let r = env.sense(&Pose::new(x, 25.0, 0.0)).unwrap().distances;
        for i in 0..5 {
            assert!((r[i] - r[4 - i]).abs() < 1e-9, "x={x}: {r:?}");
        }
    }
}

#[test]
fn straight_walls_at_known_distances() {
    let env = Environment::square();
    let o = Point::new(46.0, 30.0);
    assert!((env.ray_cast(o, 0.0, 10.0).unwrap() - 4.0).abs() < 1e-12);
    let slanted = env.ray_cast(o, 0.6, 10.0).unwrap();
    assert!((slanted - 4.0 / 0.6f64.cos()).abs() < 1e-12);
    assert_eq!(env.ray_cast(o, std::f64::consts::PI, 10.0).unwrap(), 10.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ray_cast_is_monotone_in_range(
        env_i in 0usize..3, seed in any::<u64>(), angle in -3.2f64..3.2, r1 in 0.01f64..60.0, r2 in 0.01f64..60.0,
    ) {
        let env = &envs()[env_i];
        let o = free_point(env, &mut ChaCha8Rng::seed_from_u64(seed), 1e-3);
        let (lo, hi) = (r1.min(r2), r1.max(r2));
        let a = env.ray_cast(o, angle, lo).unwrap();
        let b = env.ray_cast(o, angle, hi).unwrap();
        prop_assert!(a <= lo && b <= hi);
        prop_assert!(a <= b);
    }
}
