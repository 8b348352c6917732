//! The four predictive encoders, their training loop and evaluation.

mod arch;
mod eval;
mod network;
mod train;

pub use arch::{ArchKind, ArchitectureSpec};
pub use eval::{encode, encode_codes, evaluate, ConstantPredictor, NextStepPredictor, OraclePredictor};
pub use network::{EncodedStep, ForwardPass, Network, SequenceBatch, NETWORK_GRADCHECK_FLOOR};
pub use train::{
    train, EarlyStopping, EpochRecord, Observation, Provenance, TrainConfig, TrainedModel, TrainingSet,
    CHECKPOINT_FILE, HISTORY_FILE, MODEL_INFO_FILE,
};
