use std::f64::consts::PI;

use rand::Rng;

use super::agent::{MotorCommand, SensorReading};

/// Any sensor strictly below this distance triggers the turn-around.
pub const TURN_THRESHOLD: f64 = 1.0;
pub const MAX_FORWARD: f64 = 1.0;
pub const MAX_STEER: f64 = PI / 6.0;
pub const TURN_JITTER: f64 = PI / 10.0;

/// Random exploration policy: wander forward with small heading changes, turn
/// around in place when any wall is closer than [`TURN_THRESHOLD`].
///
/// Draw order is fixed for reproducibility: the turn branch draws `r` only,
/// the forward branch draws `d` then `r`.
pub fn behavior_step<R: Rng + ?Sized>(reading: &SensorReading, rng: &mut R) -> MotorCommand {
    if reading.min() < TURN_THRESHOLD {
        let r = rng.random_range(PI - TURN_JITTER..=PI + TURN_JITTER);
        MotorCommand::new(0.0, r)
    } else {
        let d = rng.random::<f64>() * MAX_FORWARD;
        let r = rng.random_range(-MAX_STEER..=MAX_STEER);
        MotorCommand::new(d, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let m = behavior_step(&SensorReading::new([10.0; 5]), &mut rng);
            assert!((0.0..1.0).contains(&m.d));
            assert!(m.r.abs() <= PI / 6.0);
        }
    }

    #[test]
    fn turn_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let m = behavior_step(&SensorReading::new([0.5, 10.0, 10.0, 10.0, 10.0]), &mut rng);
            assert_eq!(m.d, 0.0);
            assert!(m.r.abs() >= PI - PI / 10.0 - 1e-12 && m.r.abs() <= PI);
        }
    }

    #[test]
    fn threshold_is_strict() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = behavior_step(&SensorReading::new([1.0, 10.0, 10.0, 10.0, 10.0]), &mut rng);
        assert!(m.r.abs() <= PI / 6.0);
    }
}
