//! Versioned binary trajectory files with a separate pose sidecar, plus CSV
//! export for plotting.
//!
//! Main stream (`<path>`): magic `SMTRAJ\0\0`, version u32, env name, seed u64,
//! length u64, then per step 7 f64 (5 sensors, d, r). Pose sidecar
//! (`<path>.pose`): magic `SMPOSE\0\0`, same header fields, then per step
//! 3 f64 (x, y, theta). Everything is little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::binio::{Decoder, Encoder};
use crate::error::{Error, Result};
use crate::sim::{MotorCommand, Pose, SensorReading, SENSOR_COUNT};

use super::{SensorimotorRecord, SensorimotorStream, Trajectory};

pub const FORMAT_VERSION: u32 = 1;
const STREAM_MAGIC: &[u8; 8] = b"SMTRAJ\0\0";
const POSE_MAGIC: &[u8; 8] = b"SMPOSE\0\0";
const KIND: &str = "trajectory";

pub fn pose_sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".pose");
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<Decoder<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(Decoder::new(BufReader::new(file), KIND))
}

pub fn save(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let write = |path: &Path, magic: &[u8; 8], pose: bool| -> Result<()> {
        let mut enc = Encoder::new(create(path)?);
        let mut run = || -> std::io::Result<()> {
            enc.bytes(magic)?;
            enc.u32(FORMAT_VERSION)?;
            enc.str(&traj.env_name)?;
            enc.u64(traj.seed)?;
            enc.u64(traj.records.len() as u64)?;
            for r in &traj.records {
                if pose {
                    enc.f64(r.pose.x)?;
                    enc.f64(r.pose.y)?;
                    enc.f64(r.pose.theta)?;
                } else {
                    for v in r.sensors.distances {
                        enc.f64(v)?;
                    }
                    enc.f64(r.motor.d)?;
                    enc.f64(r.motor.r)?;
                }
            }
            Ok(())
        };
        run().map_err(|e| Error::io(path, e))?;
        enc.finish().flush().map_err(|e| Error::io(path, e))
    };
    write(path, STREAM_MAGIC, false)?;
    write(&pose_sidecar_path(path), POSE_MAGIC, true)
}

struct Header {
    env_name: String,
    seed: u64,
    len: usize,
}

fn read_header(dec: &mut Decoder<BufReader<File>>, magic: &[u8; 8]) -> Result<Header> {
    dec.expect_version(magic, FORMAT_VERSION)?;
    Ok(Header {
        env_name: dec.str()?,
        seed: dec.u64()?,
        len: dec.u64()? as usize,
    })
}

/// Reads sensors and motors only; the pose sidecar is never opened.
pub fn load_stream(path: impl AsRef<Path>) -> Result<SensorimotorStream> {
    let mut dec = open(path.as_ref())?;
    let header = read_header(&mut dec, STREAM_MAGIC)?;
    let values = dec.f64s(header.len * (SENSOR_COUNT + 2))?;
    dec.end()?;
    let mut sensors = Vec::with_capacity(header.len);
    let mut motors = Vec::with_capacity(header.len);
    for row in values.chunks_exact(SENSOR_COUNT + 2) {
        sensors.push(SensorReading::new(row[..SENSOR_COUNT].try_into().unwrap()));
        motors.push(MotorCommand {
            d: row[SENSOR_COUNT],
            r: row[SENSOR_COUNT + 1],
        });
    }
    Ok(SensorimotorStream {
        env_name: header.env_name,
        seed: header.seed,
        sensors,
        motors,
    })
}

/// Reads the stream together with its pose sidecar.
pub fn load(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    let stream = load_stream(path)?;
    let mut dec = open(&pose_sidecar_path(path))?;
    let header = read_header(&mut dec, POSE_MAGIC)?;
    if header.len != stream.len() || header.seed != stream.seed || header.env_name != stream.env_name
    {
        return Err(Error::Format {
            kind: KIND,
            reason: "pose sidecar does not match its stream".into(),
        });
    }
    let values = dec.f64s(header.len * 3)?;
    dec.end()?;
    let records = stream
        .sensors
        .iter()
        .zip(&stream.motors)
        .zip(values.chunks_exact(3))
        .map(|((&sensors, &motor), p)| SensorimotorRecord {
            sensors,
            motor,
            pose: Pose {
                x: p[0],
                y: p[1],
                theta: p[2],
            },
        })
        .collect();
    Ok(Trajectory {
        env_name: stream.env_name,
        seed: stream.seed,
        records,
    })
}

/// Writes `<path>` with columns `t,s0..s4,d,r` and `<path stem>.pose.csv`
/// with `t,x,y,theta`.
pub fn export_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["t", "s0", "s1", "s2", "s3", "s4", "d", "r"])?;
    for (t, r) in traj.records.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(r.sensors.distances.iter().map(f64::to_string));
        row.push(r.motor.d.to_string());
        row.push(r.motor.r.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let pose_path = path.with_extension("pose.csv");
    let mut w = csv::Writer::from_writer(create(&pose_path)?);
    w.write_record(["t", "x", "y", "theta"])?;
    for (t, r) in traj.records.iter().enumerate() {
        w.write_record([
            t.to_string(),
            r.pose.x.to_string(),
            r.pose.y.to_string(),
            r.pose.theta.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&pose_path, e))?;
    Ok(pose_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate;
    use crate::sim::Environment;

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.smt");
        let traj = generate(&Environment::rooms1(), 1000, 11).unwrap();
        save(&traj, &path).unwrap();
        let back = load(&path).unwrap();
        assert_eq!(traj, back);
        assert_eq!(load_stream(&path).unwrap(), traj.stream());
    }

    #[test]
    fn corrupted_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.smt");
        save(&generate(&Environment::square(), 20, 1).unwrap(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn version_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.smt");
        save(&generate(&Environment::square(), 20, 1).unwrap(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[8] = 9;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_stream(&path),
            Err(Error::Version { found: 9, .. })
        ));
    }

    #[test]
    fn truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.smt");
        save(&generate(&Environment::square(), 20, 1).unwrap(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_stream(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn csv_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let traj = generate(&Environment::square(), 250, 2).unwrap();
        let pose_path = export_csv(&traj, &path).unwrap();
        let mut rdr = csv::Reader::from_path(&path).unwrap();
        assert_eq!(rdr.headers().unwrap().len(), 8);
        assert_eq!(rdr.records().count(), 250);
        assert_eq!(pose_path.file_name().unwrap(), "t.pose.csv");
        assert_eq!(csv::Reader::from_path(&pose_path).unwrap().records().count(), 250);
    }
}
