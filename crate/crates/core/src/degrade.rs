//! Seeded Gaussian-blur degradation of healthy tissue, for building
//! (degraded, ground truth) training pairs.

use crate::error::{Error, Result};
use crate::filters::gaussian_smooth;
use crate::rng::SplitMix64;
use crate::volume::{check_congruent, composite, Mask, Volume};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeSpec {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub seed: u64,
    pub per_case_draws: usize,
}

impl Default for DegradeSpec {
    fn default() -> Self {
        DegradeSpec {
            sigma_min: 0.5,
            sigma_max: 1.5,
            seed: 0,
            per_case_draws: 1,
        }
    }
}

impl DegradeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_min.is_finite() && self.sigma_max.is_finite()) {
            return Err(Error::BadDegradeSpec("sigma bounds must be finite"));
        }
        if !(self.sigma_min > 0.0 && self.sigma_min <= self.sigma_max) {
            return Err(Error::BadDegradeSpec("need 0 < sigma_min <= sigma_max"));
        }
        if self.per_case_draws == 0 {
            return Err(Error::BadDegradeSpec("per_case_draws must be positive"));
        }
        Ok(())
    }

    /// Blur width for one draw; a pure function of `(seed, case, draw)`.
    pub fn sigma_for(&self, case_index: u64, draw_index: u64) -> f64 {
        SplitMix64::keyed(self.seed, case_index, draw_index).uniform(self.sigma_min, self.sigma_max)
    }
}

/// Blurs the whole volume with `sigma`, keeping the result only where
/// `healthy` is set. Everything else is copied from `gt` bit-exactly.
pub fn degrade_with_sigma(gt: &Volume, healthy: &Mask, sigma: f64) -> Result<Volume> {
    check_congruent(gt, healthy)?;
    let blurred = gaussian_smooth(gt, sigma)?;
    composite(&blurred, gt, healthy)
}

/// First draw for `case_index`. Returns the degraded volume and the sigma used.
pub fn degrade_case(
    gt: &Volume,
    healthy: &Mask,
    spec: &DegradeSpec,
    case_index: u64,
) -> Result<(Volume, f64)> {
    degrade_draw(gt, healthy, spec, case_index, 0)
}

pub fn degrade_draw(
    gt: &Volume,
    healthy: &Mask,
    spec: &DegradeSpec,
    case_index: u64,
    draw_index: u64,
) -> Result<(Volume, f64)> {
    spec.validate()?;
    let sigma = spec.sigma_for(case_index, draw_index);
    Ok((degrade_with_sigma(gt, healthy, sigma)?, sigma))
}
