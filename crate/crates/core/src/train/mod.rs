//! Training: masked loss, truncated backpropagation through time, Adam,
//! early stopping on validation loss, and seeded multi-realization runs.

mod adam;
mod bptt;
mod fit;
mod loss;
mod replicate;

pub use adam::Adam;
pub use bptt::{backward, SegmentGradient};
pub use fit::{
    fit, fit_with_validator, write_history_csv, EpochRecord, FitData, Realization, TrainConfig,
    ValidationSelection,
};
pub use loss::{masked_mse, LossMask};
pub use replicate::{fresh_params, replicate, select_validation, Vary};
