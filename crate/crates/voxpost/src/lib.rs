//! File formats, dataset layout and the batch pipeline around `voxpost-core`.

pub mod config;
pub mod dataset;
mod error;
pub mod layout;
pub mod nifti;
pub mod pipeline;
pub mod ranks;
pub mod report;

pub use error::{Error, Result};
pub use voxpost_core as core;
