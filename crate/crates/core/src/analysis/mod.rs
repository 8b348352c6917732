//! Inspection of learned sensory codes: projection, clustering, cluster
//! reports and transfer across environments.

mod kmeans;
mod pca;
pub mod phenomena;
mod report;
mod representation;

pub use kmeans::{kmeans_fit, ClusterModel, KMeansConfig};
pub use pca::{covariance, pca_fit, symmetric_eigen, PcaModel};
pub use report::{
    cluster_report, transfer, write_projection_csv, ClusterReport, PoseSample, TransferReport,
    DEFAULT_SAMPLES_PER_CLUSTER,
};
pub use representation::{min_laser_coloring, EncoderTag, RepresentationSet};
