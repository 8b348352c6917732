use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sim::{MotorCommand, SensorReading, SENSOR_COUNT, SENSOR_RANGE};

use super::SensorimotorStream;

pub const MOTOR_DIMS: usize = 2;
pub const INPUT_DIMS: usize = SENSOR_COUNT + MOTOR_DIMS;

/// One normalized timestep: 5 sensors in [0, 1], then `d` and `r / π`.
pub type InputRow = [f64; INPUT_DIMS];

pub fn normalize_sensors(reading: &SensorReading) -> [f64; SENSOR_COUNT] {
    reading.distances.map(|d| d / SENSOR_RANGE)
}

pub fn normalize_motor(motor: &MotorCommand) -> [f64; MOTOR_DIMS] {
    [motor.d, motor.r / PI]
}

pub fn normalize_record(reading: &SensorReading, motor: &MotorCommand) -> InputRow {
    let mut row = [0.0; INPUT_DIMS];
    row[..SENSOR_COUNT].copy_from_slice(&normalize_sensors(reading));
    row[SENSOR_COUNT..].copy_from_slice(&normalize_motor(motor));
    row
}

pub fn denormalize_record(row: &InputRow) -> (SensorReading, MotorCommand) {
    let mut distances = [0.0; SENSOR_COUNT];
    for (d, v) in distances.iter_mut().zip(row) {
        *d = v * SENSOR_RANGE;
    }
    let motor = MotorCommand {
        d: row[SENSOR_COUNT],
        r: row[SENSOR_COUNT + 1] * PI,
    };
    (SensorReading { distances }, motor)
}

/// Scales a stream into model inputs, rejecting out-of-range sensors.
pub fn normalize(stream: &SensorimotorStream) -> Result<Vec<InputRow>> {
    stream
        .sensors
        .iter()
        .zip(&stream.motors)
        .enumerate()
        .map(|(step, (s, m))| {
            if let Some(&value) = s
                .distances
                .iter()
                .find(|v| !(0.0..=SENSOR_RANGE).contains(*v))
            {
                return Err(Error::SensorOutOfRange {
                    step,
                    value,
                    range: SENSOR_RANGE,
                });
            }
            Ok(normalize_record(s, m))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(reading: [f64; 5], motor: MotorCommand) -> SensorimotorStream {
        SensorimotorStream {
            env_name: "t".into(),
            seed: 0,
            sensors: vec![SensorReading::new(reading)],
            motors: vec![motor],
        }
    }

    #[test]
    fn examples() {
        let rows = normalize(&stream([10.0; 5], MotorCommand::new(0.5, PI))).unwrap();
        assert_eq!(rows[0], [1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 1.0]);

        let rows = normalize(&stream([3.0, 3.1404, 10.0, 10.0, 10.0], MotorCommand::new(0.0, 0.0)))
            .unwrap();
        assert!((rows[0][0] - 0.3).abs() < 1e-15);
        assert!((rows[0][1] - 0.31404).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        let err = normalize(&stream([10.5, 1.0, 1.0, 1.0, 1.0], MotorCommand::new(0.0, 0.0)));
        assert!(matches!(err, Err(Error::SensorOutOfRange { step: 0, .. })));
    }
}
