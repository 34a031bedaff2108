//! Volumetric post-processing kernels for inpainted MRI.
//!
//! Everything here works on in-memory [`Volume`]s and [`Mask`]s and needs only
//! an allocator: voxel-wise ensembling, 3D median and Gaussian filtering,
//! ROI histogram matching, MSE/PSNR/SSIM, rank-then-average scoring, and a
//! seeded blur degradation for building enhancement training pairs.
//!
//! File formats, the pipeline runner and the CLI live in the `voxpost` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod aggregate;
pub mod degrade;
mod error;
pub mod filters;
pub mod intensity;
pub mod metrics;
pub mod ranking;
pub mod rng;
mod stats;
mod volume;

pub use aggregate::{ensemble, ensemble_masked, AggregationMode, Fusion};
pub use degrade::{degrade_case, DegradeSpec};
pub use error::{Error, Result};
pub use filters::{apply_masked, gaussian_smooth, median_filter, FilterSpec};
pub use intensity::{histogram_match, joint_normalize, HistMatch, Roi};
pub use metrics::{evaluate_case, mse, psnr, ssim, MetricReport, SsimParams};
pub use ranking::{rank_methods, Metric, RankTable};
pub use volume::{check_congruent, composite, Dims, Mask, SourceDtype, Volume};
