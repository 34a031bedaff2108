//! Voxel-wise fusion of aligned prediction volumes.
//!
//! Each output voxel depends only on the input voxels at the same index. The
//! per-voxel reduction runs over the input values sorted by value (ties by
//! weight), so the result is bit-stable under any permutation of the inputs
//! and independent of how the voxel loop is partitioned.

use alloc::vec::Vec;
use core::borrow::Borrow;

use crate::error::{Error, Result};
use crate::stats::median_in_place;
use crate::volume::{check_congruent, check_dims, Mask, Volume};

/// Floor applied before taking logarithms in the geometric mean.
pub const GEOMEAN_EPSILON: f64 = 1e-12;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fusion {
    Mean,
    Median,
    GeometricMean,
    Max,
    Min,
}

/// A fusion rule plus optional per-input weights (mean only).
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationMode {
    pub fusion: Fusion,
    pub weights: Option<Vec<f64>>,
}

impl AggregationMode {
    pub fn new(fusion: Fusion) -> Self {
        AggregationMode {
            fusion,
            weights: None,
        }
    }

    pub fn weighted_mean(weights: Vec<f64>) -> Self {
        AggregationMode {
            fusion: Fusion::Mean,
            weights: Some(weights),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let Some(w) = &self.weights else {
            return Ok(());
        };
        if self.fusion != Fusion::Mean {
            return Err(Error::BadWeights("weights are only accepted for mean fusion"));
        }
        if w.len() != n {
            return Err(Error::BadWeights("one weight per input is required"));
        }
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::BadWeights("weights must be finite and non-negative"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::BadWeights("weights must sum to 1"));
        }
        Ok(())
    }
}

impl From<Fusion> for AggregationMode {
    fn from(fusion: Fusion) -> Self {
        AggregationMode::new(fusion)
    }
}

fn check_inputs<V: Borrow<Volume>>(inputs: &[V], mode: &AggregationMode) -> Result<()> {
    if inputs.len() < 2 {
        return Err(Error::TooFewInputs {
            found: inputs.len(),
            required: 2,
        });
    }
    let first = inputs[0].borrow();
    for v in &inputs[1..] {
        let v = v.borrow();
        check_dims(first.dims(), v.dims())?;
        let same_spacing = first
            .spacing()
            .iter()
            .zip(v.spacing())
            .all(|(a, b)| (a - b).abs() <= 1e-6 * a.abs().max(b.abs()));
        if !same_spacing {
            return Err(Error::SpacingMismatch {
                expected: first.spacing(),
                found: v.spacing(),
            });
        }
    }
    mode.validate(inputs.len())
}

/// Per-voxel reducer with reusable scratch space.
struct Reducer<'a> {
    fusion: Fusion,
    weights: Option<&'a [f64]>,
    values: Vec<f64>,
    pairs: Vec<(f64, f64)>,
}

impl<'a> Reducer<'a> {
    fn new(mode: &'a AggregationMode, n: usize) -> Self {
        Reducer {
            fusion: mode.fusion,
            weights: mode.weights.as_deref(),
            values: Vec::with_capacity(n),
            pairs: Vec::with_capacity(n),
        }
    }

    fn reduce<V: Borrow<Volume>>(&mut self, inputs: &[V], idx: usize) -> f64 {
        self.values.clear();
        self.values.extend(inputs.iter().map(|v| v.borrow().data()[idx]));
        match self.fusion {
            Fusion::Max => self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Fusion::Min => self.values.iter().copied().fold(f64::INFINITY, f64::min),
            Fusion::Median => median_in_place(&mut self.values),
            Fusion::Mean => match self.weights {
                None => {
                    self.values.sort_unstable_by(f64::total_cmp);
                    let n = self.values.len() as f64;
                    let mean = self.values.iter().sum::<f64>() / n;
                    clamp_to_sorted(mean, &self.values)
                }
                Some(w) => {
                    self.pairs.clear();
                    self.pairs
                        .extend(self.values.iter().copied().zip(w.iter().copied()));
                    self.pairs
                        .sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
                    let mean: f64 = self.pairs.iter().map(|(x, w)| x * w).sum();
                    let lo = self.pairs[0].0;
                    let hi = self.pairs[self.pairs.len() - 1].0;
                    mean.clamp(lo, hi)
                }
            },
            Fusion::GeometricMean => {
                for v in self.values.iter_mut() {
                    *v = v.max(GEOMEAN_EPSILON);
                }
                self.values.sort_unstable_by(f64::total_cmp);
                let n = self.values.len() as f64;
                let log_sum: f64 = self.values.iter().map(|&v| libm::log(v)).sum();
                clamp_to_sorted(libm::exp(log_sum / n), &self.values)
            }
        }
    }
}

/// Rounding can push a reduced value one ulp outside the input range; pin it.
#[inline]
fn clamp_to_sorted(x: f64, sorted: &[f64]) -> f64 {
    x.clamp(sorted[0], sorted[sorted.len() - 1])
}

/// Fuses `inputs` voxel by voxel. Geometry is copied from `inputs[0]`.
pub fn ensemble<V: Borrow<Volume>>(inputs: &[V], mode: &AggregationMode) -> Result<Volume> {
    check_inputs(inputs, mode)?;
    let first = inputs[0].borrow();
    let mut reducer = Reducer::new(mode, inputs.len());
    let data = (0..first.data().len())
        .map(|i| reducer.reduce(inputs, i))
        .collect();
    Ok(first.like(data))
}

/// Like [`ensemble`] inside the mask; voxels outside are copied bit-exactly
/// from `base`.
pub fn ensemble_masked<V: Borrow<Volume>>(
    inputs: &[V],
    mode: &AggregationMode,
    m: &Mask,
    base: &Volume,
) -> Result<Volume> {
    check_inputs(inputs, mode)?;
    check_dims(inputs[0].borrow().dims(), base.dims())?;
    check_congruent(base, m)?;
    let mut reducer = Reducer::new(mode, inputs.len());
    let data = m
        .data()
        .iter()
        .zip(base.data())
        .enumerate()
        .map(|(i, (&inside, &b))| if inside { reducer.reduce(inputs, i) } else { b })
        .collect();
    Ok(base.like(data))
}
