//! Sensorimotor representation learning on a simulated lidar agent.
//!
//! The crate is split by pipeline stage: [`sim`] produces trajectories,
//! [`dataset`] persists and normalizes them, [`nn`] holds the layer library,
//! [`models`] trains the four predictive encoders, [`analysis`] inspects the
//! learned sensory codes, and [`experiment`] wires everything into a
//! reproducible run.

pub mod error;
pub mod sim;

pub use error::{Error, Result};
pub mod dataset;
pub mod nn;
pub mod models;
pub mod analysis;
pub mod experiment;

mod binio;
