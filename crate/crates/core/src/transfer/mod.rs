//! Moving a model trained on one fuel class to another: bias-shift time
//! warping and the fine-tuning variants it is compared against.

mod grid;
mod method;

pub use grid::{
    apply_shift, grid_search, train_rmse, write_surface_csv, BiasShift, GridSpec, SearchResult, SurfacePoint,
};
pub use method::{run_method, MethodOutcome, TransferMethod};
