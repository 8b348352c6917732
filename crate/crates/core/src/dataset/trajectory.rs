use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{behavior_step, Environment, MotorCommand, Point, Pose, SensorReading};

/// Start poses closer than this to a wall are re-drawn.
const START_CLEARANCE: f64 = 1.0;

/// One timestep: what the agent senses, the command it then executes, and
/// where it actually was.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorimotorRecord {
    pub sensors: SensorReading,
    pub motor: MotorCommand,
    pub pose: Pose,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub env_name: String,
    pub seed: u64,
    pub records: Vec<SensorimotorRecord>,
}

/// The model-facing part of a trajectory: no poses.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorimotorStream {
    pub env_name: String,
    pub seed: u64,
    pub sensors: Vec<SensorReading>,
    pub motors: Vec<MotorCommand>,
}

impl SensorimotorStream {
    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn stream(&self) -> SensorimotorStream {
        SensorimotorStream {
            env_name: self.env_name.clone(),
            seed: self.seed,
            sensors: self.records.iter().map(|r| r.sensors).collect(),
            motors: self.records.iter().map(|r| r.motor).collect(),
        }
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.records.iter().map(|r| r.pose).collect()
    }
}

/// Runs the exploration policy for `steps` steps from a random start pose.
/// The output depends only on `(env, steps, seed)`.
pub fn generate(env: &Environment, steps: usize, seed: u64) -> Result<Trajectory> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "a trajectory needs at least 2 steps, got {steps}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pose = sample_start_pose(env, &mut rng);
    let mut records = Vec::with_capacity(steps);
    for _ in 0..steps {
        let sensors = env.sense(&pose)?;
        let motor = behavior_step(&sensors, &mut rng);
        records.push(SensorimotorRecord {
            sensors,
            motor,
            pose,
        });
        pose = env.apply_motor(&pose, &motor);
    }
    Ok(Trajectory {
        env_name: env.name().to_string(),
        seed,
        records,
    })
}

fn sample_start_pose<R: Rng>(env: &Environment, rng: &mut R) -> Pose {
    loop {
        let p = Point::new(
            rng.random::<f64>() * env.size(),
            rng.random::<f64>() * env.size(),
        );
        let theta = rng.random_range(-PI..PI);
        let clear = env.walls().iter().all(|w| w.distance_to(p) >= START_CLEARANCE);
        if clear && env.is_free(p) {
            return Pose::new(p.x, p.y, theta);
        }
    }
}

/// Re-simulates `motors` from `start`, returning the sensor reading at every step.
pub fn replay(env: &Environment, start: Pose, motors: &[MotorCommand]) -> Result<Vec<SensorReading>> {
    let mut pose = start;
    let mut out = Vec::with_capacity(motors.len());
    for motor in motors {
        out.push(env.sense(&pose)?);
        pose = env.apply_motor(&pose, motor);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let env = Environment::square();
        let a = generate(&env, 10, 42).unwrap();
        let b = generate(&env, 10, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate(&env, 10, 43).unwrap());
    }

    #[test]
    fn consecutive_records_follow_kinematics() {
        let env = Environment::rooms2();
        let traj = generate(&env, 2000, 9).unwrap();
        for pair in traj.records.windows(2) {
            assert_eq!(pair[1].pose, env.apply_motor(&pair[0].pose, &pair[0].motor));
            assert_eq!(pair[0].sensors, env.sense(&pair[0].pose).unwrap());
        }
    }

    #[test]
    fn replay_reproduces_sensors() {
        let env = Environment::rooms1();
        let traj = generate(&env, 3000, 5).unwrap();
        let motors: Vec<_> = traj.records.iter().map(|r| r.motor).collect();
        let sensed = replay(&env, traj.records[0].pose, &motors).unwrap();
        for (rec, s) in traj.records.iter().zip(&sensed) {
            for (a, b) in rec.sensors.distances.iter().zip(s.distances) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn too_short() {
        assert!(generate(&Environment::square(), 1, 0).is_err());
    }
}
