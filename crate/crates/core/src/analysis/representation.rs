use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::Trajectory;
use crate::error::{Error, Result};
use crate::models::ArchKind;
use crate::nn::{Tensor, TensorFile};
use crate::sim::Pose;

/// Identifies the encoder that produced a set of codes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderTag {
    pub model_id: String,
    pub kind: ArchKind,
    pub code_dims: usize,
}

/// Sensory codes aligned with the ground-truth poses they were computed at.
#[derive(Clone, Debug, PartialEq)]
pub struct RepresentationSet {
    pub env_name: String,
    pub encoder: EncoderTag,
    /// `N × code_dims`.
    pub codes: Array2<f64>,
    pub poses: Vec<Pose>,
    /// Smallest raw sensor distance per step.
    pub min_laser: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    env_name: String,
    encoder: EncoderTag,
}

const KIND: &str = "representations";

/// Per-step minimum of the raw sensor distances.
pub fn min_laser_coloring(traj: &Trajectory) -> Vec<f64> {
    traj.records.iter().map(|r| r.sensors.min()).collect()
}

impl RepresentationSet {
    pub fn new(
        env_name: impl Into<String>,
        encoder: EncoderTag,
        codes: Array2<f64>,
        poses: Vec<Pose>,
        min_laser: Vec<f64>,
    ) -> Result<Self> {
        let set = Self {
            env_name: env_name.into(),
            encoder,
            codes,
            poses,
            min_laser,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.codes.nrows();
        if self.poses.len() != n || self.min_laser.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{n} codes, {} poses, {} coloring values",
                self.poses.len(),
                self.min_laser.len()
            )));
        }
        if self.codes.ncols() != self.encoder.code_dims {
            return Err(Error::ShapeMismatch(format!(
                "{}-d codes from a {}-d encoder",
                self.codes.ncols(),
                self.encoder.code_dims
            )));
        }
        if self.codes.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("representation contains non-finite codes".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.codes.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let n = self.len();
        let poses = self.poses.iter().flat_map(|p| [p.x, p.y, p.theta]).collect();
        TensorFile {
            kind: KIND.into(),
            meta: serde_json::to_string(&Meta {
                env_name: self.env_name.clone(),
                encoder: self.encoder.clone(),
            })?,
            tensors: vec![
                (
                    "codes".into(),
                    Tensor::new(vec![n, self.codes.ncols()], self.codes.iter().copied().collect())?,
                ),
                ("poses".into(), Tensor::new(vec![n, 3], poses)?),
                ("min_laser".into(), Tensor::new(vec![n], self.min_laser.clone())?),
            ],
        }
        .save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = TensorFile::load(path)?;
        if file.kind != KIND {
            return Err(Error::Format {
                kind: "representations",
                reason: format!("expected a representation file, found `{}`", file.kind),
            });
        }
        let meta: Meta = serde_json::from_str(&file.meta)?;
        let codes = file.require("codes")?;
        let [n, dims] = codes.shape() else {
            return Err(Error::Format {
                kind: "representations",
                reason: "codes must be a matrix".into(),
            });
        };
        let codes = Array2::from_shape_vec((*n, *dims), codes.values().to_vec())
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        let poses = file
            .require("poses")?
            .values()
            .chunks_exact(3)
            .map(|p| Pose {
                x: p[0],
                y: p[1],
                theta: p[2],
            })
            .collect();
        let min_laser = file.require("min_laser")?.values().to_vec();
        Self::new(meta.env_name, meta.encoder, codes, poses, min_laser)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{export_csv, generate};
    use crate::sim::Environment;

    #[test]
    fn coloring_matches_csv_minimum() {
        let traj = generate(&Environment::rooms2(), 300, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        export_csv(&traj, &path).unwrap();
        let mut reader = csv::Reader::from_path(&path).unwrap();
        let from_csv: Vec<f64> = reader
            .records()
            .map(|r| {
                let r = r.unwrap();
                (1..=5).map(|i| r[i].parse::<f64>().unwrap()).fold(f64::INFINITY, f64::min)
            })
            .collect();
        assert_eq!(min_laser_coloring(&traj), from_csv);
    }

    #[test]
    fn coloring_examples() {
        use crate::sim::SensorReading;
        assert_eq!(SensorReading::new([10.0; 5]).min(), 10.0);
        assert_eq!(SensorReading::new([0.5, 10.0, 10.0, 10.0, 10.0]).min(), 0.5);
    }

    #[test]
    fn save_load_round_trip() {
        let tag = EncoderTag {
            model_id: "m".into(),
            kind: ArchKind::Sm,
            code_dims: 2,
        };
        let set = RepresentationSet::new(
            "square",
            tag.clone(),
            ndarray::array![[0.1, -2.0], [3.5, 1e-9]],
            vec![Pose::new(1.0, 2.0, 0.5), Pose::new(3.0, 4.0, -1.0)],
            vec![10.0, 0.3],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reps.bin");
        set.save(&path).unwrap();
        assert_eq!(RepresentationSet::load(&path).unwrap(), set);
        assert!(RepresentationSet::new("x", tag, Array2::zeros((2, 2)), vec![], vec![]).is_err());
    }
}
