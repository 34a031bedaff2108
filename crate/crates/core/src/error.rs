use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two volumes (or a volume and a mask) that must be congruent are not.
    DimensionMismatch { expected: [usize; 3], found: [usize; 3] },
    /// A dimension is zero or the data length does not match the dims.
    InvalidShape { dims: [usize; 3], len: usize },
    InvalidSpacing([f64; 3]),
    SpacingMismatch { expected: [f64; 3], found: [f64; 3] },
    NonFiniteVoxel { index: usize },
    TooFewInputs { found: usize, required: usize },
    BadWeights(&'static str),
    BadKernel { k: usize },
    InvalidSigma(f64),
    /// ROI has fewer than two voxels.
    DegenerateRoi { voxels: usize },
    ConstantReference,
    EmptyRoi,
    VolumeTooSmall { dims: [usize; 3], window: usize },
    BadSsimParams(&'static str),
    IncompleteGrid { case_id: String, method_id: String },
    DuplicateReport { case_id: String, method_id: String },
    TooFewMethods { found: usize },
    InvalidMetric { case_id: String, method_id: String },
    BadDegradeSpec(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => write!(
                f,
                "dimension mismatch: expected {}x{}x{}, found {}x{}x{}",
                expected[0], expected[1], expected[2], found[0], found[1], found[2]
            ),
            Error::InvalidShape { dims, len } => write!(
                f,
                "invalid shape {}x{}x{} for {} voxels",
                dims[0], dims[1], dims[2], len
            ),
            Error::InvalidSpacing(s) => {
                write!(f, "voxel spacing must be positive, got {:?}", s)
            }
            Error::SpacingMismatch { expected, found } => {
                write!(f, "spacing mismatch: expected {:?}, found {:?}", expected, found)
            }
            Error::NonFiniteVoxel { index } => write!(f, "non-finite voxel at index {}", index),
            Error::TooFewInputs { found, required } => {
                write!(f, "need at least {} inputs, got {}", required, found)
            }
            Error::BadWeights(why) => write!(f, "bad weights: {}", why),
            Error::BadKernel { k } => write!(f, "bad median kernel size {}", k),
            Error::InvalidSigma(s) => write!(f, "sigma must be finite and >= 0, got {}", s),
            Error::DegenerateRoi { voxels } => {
                write!(f, "ROI needs at least 2 voxels, has {}", voxels)
            }
            Error::ConstantReference => write!(f, "reference volume is constant"),
            Error::EmptyRoi => write!(f, "ROI is empty"),
            Error::VolumeTooSmall { dims, window } => write!(
                f,
                "volume {}x{}x{} too small for SSIM window {}",
                dims[0], dims[1], dims[2], window
            ),
            Error::BadSsimParams(why) => write!(f, "bad SSIM parameters: {}", why),
            Error::IncompleteGrid { case_id, method_id } => {
                write!(f, "no report for case {} method {}", case_id, method_id)
            }
            Error::DuplicateReport { case_id, method_id } => {
                write!(f, "duplicate report for case {} method {}", case_id, method_id)
            }
            Error::TooFewMethods { found } => {
                write!(f, "ranking needs at least 2 methods, got {}", found)
            }
            Error::InvalidMetric { case_id, method_id } => {
                write!(f, "NaN metric for case {} method {}", case_id, method_id)
            }
            Error::BadDegradeSpec(why) => write!(f, "bad degrade spec: {}", why),
        }
    }
}

impl core::error::Error for Error {}
