//! Geometric checks used to interpret clusters.

use serde::{Deserialize, Serialize};

use crate::sim::{wrap_angle, Environment, Point, Pose, SENSOR_RANGE};

pub const FEATURE_RADIUS: f64 = 3.0;
pub const FACING_TOLERANCE: f64 = 0.6;

pub fn within(pose: &Pose, point: &Point, radius: f64) -> bool {
    (pose.x - point.x).hypot(pose.y - point.y) <= radius
}

/// Bearing of `point` relative to the heading is at most `tolerance`.
pub fn facing(pose: &Pose, point: &Point, tolerance: f64) -> bool {
    let bearing = (point.y - pose.y).atan2(point.x - pose.x);
    wrap_angle(bearing - pose.theta).abs() <= tolerance
}

/// Close to some corner and, with a tolerance, oriented towards it.
pub fn near_corner(corners: &[Point], pose: &Pose, facing_tolerance: Option<f64>) -> bool {
    corners.iter().any(|c| {
        within(pose, c, FEATURE_RADIUS) && facing_tolerance.is_none_or(|tol| facing(pose, c, tol))
    })
}

pub fn near_wall_end(ends: &[Point], pose: &Pose) -> bool {
    ends.iter().any(|e| within(pose, e, FEATURE_RADIUS))
}

pub fn corner_flags(env: &Environment, poses: &[Pose], facing_tolerance: Option<f64>) -> Vec<bool> {
    let corners = env.corners();
    poses.iter().map(|p| near_corner(&corners, p, facing_tolerance)).collect()
}

pub fn wall_end_flags(env: &Environment, poses: &[Pose]) -> Vec<bool> {
    let ends = env.wall_ends();
    poses.iter().map(|p| near_wall_end(&ends, p)).collect()
}

pub fn fraction(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        return 0.0;
    }
    flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterFraction {
    pub cluster: usize,
    pub members: usize,
    pub fraction: f64,
}

/// Share of flagged members for every cluster.
pub fn cluster_fractions(labels: &[usize], k: usize, flags: &[bool]) -> Vec<ClusterFraction> {
    let mut members = vec![0usize; k];
    let mut hits = vec![0usize; k];
    for (&l, &f) in labels.iter().zip(flags) {
        members[l] += 1;
        hits[l] += usize::from(f);
    }
    (0..k)
        .map(|c| ClusterFraction {
            cluster: c,
            members: members[c],
            fraction: if members[c] == 0 {
                0.0
            } else {
                hits[c] as f64 / members[c] as f64
            },
        })
        .collect()
}

/// Cluster with the largest flagged share among those with at least
/// `min_members` members; lowest index on ties.
pub fn best_cluster(labels: &[usize], k: usize, flags: &[bool], min_members: usize) -> Option<ClusterFraction> {
    cluster_fractions(labels, k, flags)
        .into_iter()
        .filter(|c| c.members >= min_members.max(1))
        .fold(None, |best: Option<ClusterFraction>, c| match best {
            Some(b) if b.fraction >= c.fraction => Some(b),
            _ => Some(c),
        })
}

/// How the steps where every sensor reads its maximum spread over clusters.
#[derive(Clone, Debug, PartialEq)]
pub struct NothingPerceived {
    pub records: usize,
    /// Members per cluster, indexed by cluster.
    pub per_cluster: Vec<usize>,
}

impl NothingPerceived {
    pub fn new(labels: &[usize], k: usize, min_laser: &[f64]) -> Self {
        let mut per_cluster = vec![0; k];
        let mut records = 0;
        for (&l, &m) in labels.iter().zip(min_laser) {
            if m >= SENSOR_RANGE {
                per_cluster[l] += 1;
                records += 1;
            }
        }
        Self { records, per_cluster }
    }

    /// Share of the records held by the largest cluster.
    pub fn dominant_fraction(&self) -> f64 {
        if self.records == 0 {
            return 0.0;
        }
        *self.per_cluster.iter().max().expect("k > 0") as f64 / self.records as f64
    }

    /// Clusters holding at least `min_share` of the records.
    pub fn clusters_spanned(&self, min_share: f64) -> usize {
        self.per_cluster
            .iter()
            .filter(|&&n| n > 0 && n as f64 >= min_share * self.records as f64)
            .count()
    }
}
