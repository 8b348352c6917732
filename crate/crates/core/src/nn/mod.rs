//! Small neural-network library with hand-written gradients: dense layers,
//! stacked LSTM with truncated BPTT, MSE, Adam and a finite-difference
//! checker.

mod adam;
mod checkpoint;
mod dense;
mod gradcheck;
mod loss;
mod lstm;
mod params;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{TensorFile, TENSOR_FILE_VERSION};
pub use dense::{Activation, Dense};
pub use gradcheck::{gradient_check, GradCheckConfig, GradCheckReport, LossProbe};
pub use loss::mse_loss;
pub use lstm::{LstmCache, LstmLayer, LstmStack, LstmState};
pub use params::{glorot_limit, Init, ParamEntry, ParamRef, Parameters};
pub use tensor::Tensor;
