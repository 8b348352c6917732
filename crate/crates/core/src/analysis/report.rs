use std::fs::File;
use std::path::Path;

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::kmeans::ClusterModel;
use super::representation::{EncoderTag, RepresentationSet};
use crate::dataset::Trajectory;
use crate::error::{Error, Result};
use crate::models::{encode, TrainedModel};

pub const DEFAULT_SAMPLES_PER_CLUSTER: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoseSample {
    pub cluster_id: usize,
    #[serde(skip)]
    pub point_id: usize,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Labels of every point plus up to `samples_per_cluster` poses per cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterReport {
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Grouped by cluster, ascending point order within a cluster.
    pub samples: Vec<PoseSample>,
}

pub fn cluster_report(
    model: &ClusterModel,
    reps: &RepresentationSet,
    samples_per_cluster: usize,
    seed: u64,
) -> Result<ClusterReport> {
    let labels = model.assign(reps.codes.view())?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); model.k()];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for (c, idx) in members.iter().enumerate() {
        let mut chosen: Vec<usize> = if idx.len() <= samples_per_cluster {
            idx.clone()
        } else {
            sample(&mut rng, idx.len(), samples_per_cluster)
                .into_iter()
                .map(|k| idx[k])
                .collect()
        };
        chosen.sort_unstable();
        samples.extend(chosen.into_iter().map(|i| {
            let p = reps.poses[i];
            PoseSample {
                cluster_id: c,
                point_id: i,
                x: p.x,
                y: p.y,
                theta: p.theta,
            }
        }));
    }
    Ok(ClusterReport {
        sizes: members.iter().map(Vec::len).collect(),
        labels,
        samples,
    })
}

impl ClusterReport {
    pub fn samples_of(&self, cluster: usize) -> impl Iterator<Item = &PoseSample> {
        self.samples.iter().filter(move |s| s.cluster_id == cluster)
    }

    /// Rows `cluster_id, x, y, theta`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_writer(File::create(path).map_err(|e| Error::io(path, e))?);
        for s in &self.samples {
            w.serialize(s)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize)]
struct ProjectionRow {
    point_id: usize,
    pc1: f64,
    pc2: f64,
    min_laser: f64,
}

/// Rows `point_id, pc1, pc2, min_laser`.
pub fn write_projection_csv(path: impl AsRef<Path>, projection: ArrayView2<f64>, min_laser: &[f64]) -> Result<()> {
    let path = path.as_ref();
    if projection.nrows() != min_laser.len() || projection.ncols() < 2 {
        return Err(Error::ShapeMismatch(format!(
            "projection {:?} with {} coloring values",
            projection.dim(),
            min_laser.len()
        )));
    }
    let mut w = csv::Writer::from_writer(File::create(path).map_err(|e| Error::io(path, e))?);
    for (i, (row, &m)) in projection.rows().into_iter().zip(min_laser).enumerate() {
        w.serialize(ProjectionRow {
            point_id: i,
            pc1: row[0],
            pc2: row[1],
            min_laser: m,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferReport {
    pub representations: RepresentationSet,
    pub report: ClusterReport,
}

/// Encodes another environment's trajectory with the source encoder and
/// labels it with the source clusters.
pub fn transfer(
    encoder: &TrainedModel,
    clusters: &ClusterModel,
    clusters_source: &EncoderTag,
    traj: &Trajectory,
    samples_per_cluster: usize,
    seed: u64,
) -> Result<TransferReport> {
    let tag = encoder.encoder_tag();
    if *clusters_source != tag || clusters.dims() != tag.code_dims {
        return Err(Error::ArchitectureMismatch(format!(
            "clusters were fit on codes of {} ({}, {}-d) but the encoder is {} ({}, {}-d)",
            clusters_source.model_id,
            clusters_source.kind,
            clusters.dims(),
            tag.model_id,
            tag.kind,
            tag.code_dims
        )));
    }
    let representations = encode(encoder, traj)?;
    let report = cluster_report(clusters, &representations, samples_per_cluster, seed)?;
    Ok(TransferReport {
        representations,
        report,
    })
}
