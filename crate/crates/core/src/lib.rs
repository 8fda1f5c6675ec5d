//! Time-warping transfer learning for recurrent fuel-moisture models.

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod nn;
pub mod pipeline;
pub mod seed;
pub mod timelag;
pub mod train;
pub mod transfer;

pub use error::{Error, Result};
