use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::env::Environment;
use super::geometry::Point;
use crate::error::Result;

pub const SENSOR_COUNT: usize = 5;
/// Ray directions relative to the heading, left to right in index order.
pub const SENSOR_ANGLES: [f64; SENSOR_COUNT] = [-0.6, -0.3, 0.0, 0.3, 0.6];
pub const SENSOR_RANGE: f64 = 10.0;
/// Backoff applied when a translation would reach a wall.
pub const CLAMP_MARGIN: f64 = 1e-6;

/// Wraps an angle into (-π, π].
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle % TAU;
    if a > PI {
        a -= TAU;
    } else if a <= -PI {
        a += TAU;
    }
    a
}

/// Ground-truth agent state. Never shown to the models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Forward translation `d` followed by rotation `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotorCommand {
    pub d: f64,
    pub r: f64,
}

impl MotorCommand {
    pub fn new(d: f64, r: f64) -> Self {
        Self { d, r: wrap_angle(r) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub distances: [f64; SENSOR_COUNT],
}

impl SensorReading {
    pub fn new(distances: [f64; SENSOR_COUNT]) -> Self {
        Self { distances }
    }

    pub fn min(&self) -> f64 {
        self.distances.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// True when no ray hits anything within range.
    pub fn is_empty(&self) -> bool {
        self.distances.iter().all(|&d| d >= SENSOR_RANGE)
    }
}

impl Environment {
    pub fn sense(&self, pose: &Pose) -> Result<SensorReading> {
        let mut distances = [0.0; SENSOR_COUNT];
        for (out, offset) in distances.iter_mut().zip(SENSOR_ANGLES) {
            *out = self.ray_cast(pose.position(), pose.theta + offset, SENSOR_RANGE)?;
        }
        Ok(SensorReading { distances })
    }

    /// Translates along the heading, then rotates.
    pub fn apply_motor(&self, pose: &Pose, motor: &MotorCommand) -> Pose {
        self.apply_motor_tracked(pose, motor).0
    }

    /// Like [`apply_motor`](Self::apply_motor), also reporting whether the
    /// translation had to be clamped short of a wall.
    pub fn apply_motor_tracked(&self, pose: &Pose, motor: &MotorCommand) -> (Pose, bool) {
        let mut d = motor.d.max(0.0);
        let mut clamped = false;
        if d > 0.0 {
            if let Some(hit) = self.nearest_hit(pose.position(), pose.theta) {
                if hit <= d {
                    d = (hit - CLAMP_MARGIN).max(0.0);
                    clamped = true;
                }
            }
        }
        let (sin, cos) = pose.theta.sin_cos();
        let next = Pose {
            x: pose.x + d * cos,
            y: pose.y + d * sin,
            theta: wrap_angle(pose.theta + motor.r),
        };
        (next, clamped)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn wrap_convention() {
        assert_eq!(wrap_angle(PI), PI);
        assert!(close(wrap_angle(-PI), PI));
        assert!(close(wrap_angle(3.0 * PI / 2.0), -PI / 2.0));
        assert!(close(wrap_angle(PI + 0.1), -PI + 0.1));
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn sense_examples() {
        let env = Environment::square();
        let open = env.sense(&Pose::new(25.0, 25.0, 0.7)).unwrap();
        assert_eq!(open.distances, [10.0; 5]);
        assert!(open.is_empty());

        let near = env.sense(&Pose::new(47.0, 25.0, 0.0)).unwrap();
        let expected = [
            3.0 / 0.6f64.cos(),
            3.0 / 0.3f64.cos(),
            3.0,
            3.0 / 0.3f64.cos(),
            3.0 / 0.6f64.cos(),
        ];
        for (got, want) in near.distances.iter().zip(expected) {
            assert!(close(*got, want), "{got} vs {want}");
        }
        assert!((near.distances[1] - 3.1404).abs() < 5e-4);

        let away = env.sense(&Pose::new(47.0, 25.0, PI)).unwrap();
        assert_eq!(away.distances, [10.0; 5]);
    }

    #[test]
    fn apply_motor_examples() {
        let env = Environment::square();
        let p = Pose::new(10.0, 10.0, 0.3);
        assert_eq!(env.apply_motor(&p, &MotorCommand::new(0.0, 0.0)), p);

        let q = env.apply_motor(&Pose::new(10.0, 10.0, 0.0), &MotorCommand::new(1.0, PI / 6.0));
        assert!(close(q.x, 11.0) && close(q.y, 10.0) && close(q.theta, PI / 6.0));

        let q = env.apply_motor(&Pose::new(10.0, 10.0, PI / 2.0), &MotorCommand::new(0.5, 0.0));
        assert!(close(q.x, 10.0) && close(q.y, 10.5) && close(q.theta, PI / 2.0));
    }

    #[test]
    fn translation_is_clamped_at_walls() {
        let env = Environment::square();
        let (q, clamped) =
            env.apply_motor_tracked(&Pose::new(49.5, 25.0, 0.0), &MotorCommand::new(1.0, 0.0));
        assert!(clamped);
        assert!(q.x < 50.0 && env.is_free(q.position()));
        assert!((q.x - (50.0 - CLAMP_MARGIN)).abs() < 1e-9);
    }
}
