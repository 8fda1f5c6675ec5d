//! The recurrent network: one LSTM layer feeding three dense layers that
//! produce a scalar moisture prediction per hour.

mod construct;
mod dense;
mod lstm;
mod matrix;
mod network;
mod tensor_file;

pub use construct::{construct_timelag_lstm, set_constructed_retention};
pub use dense::{Activation, DenseParams};
pub use lstm::{CHRONO_MAX_HOURS, lstm_step, Gate, GateActivation, GateRecord, LstmParams, LstmState};
pub use matrix::Matrix;
pub use network::{Architecture, RnnParams, TensorInfo, TensorRole, DENSE_LAYERS};
pub use tensor_file::{NamedTensor, TensorFile};
