//! Deterministic 2D lidar world: walls, ray casting, kinematics and the
//! exploration policy.

mod agent;
mod env;
mod geometry;
mod policy;

pub use agent::{
    wrap_angle, MotorCommand, Pose, SensorReading, CLAMP_MARGIN, SENSOR_ANGLES, SENSOR_COUNT,
    SENSOR_RANGE,
};
pub use env::{Environment, EnvironmentConfig, Layout, CANONICAL_SIZE};
pub use geometry::{Point, Segment, PARALLEL_TOLERANCE};
pub use policy::{behavior_step, MAX_FORWARD, MAX_STEER, TURN_JITTER, TURN_THRESHOLD};
