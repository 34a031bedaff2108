//! MSE, PSNR and 3D SSIM over a mask.
//!
//! Inputs are expected to be jointly normalized (see
//! [`joint_normalize`](crate::intensity::joint_normalize)); [`evaluate_case`]
//! does that for you.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::filters::convolve_axis;
use crate::intensity::joint_normalize;
use crate::volume::{check_congruent, check_dims, Mask, Volume};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window_size: usize,
    pub window_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window_size: 11,
            window_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_size < 3 || self.window_size.is_multiple_of(2) {
            return Err(Error::BadSsimParams("window size must be odd and >= 3"));
        }
        if !(self.window_sigma.is_finite() && self.window_sigma > 0.0) {
            return Err(Error::BadSsimParams("window sigma must be positive"));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0 && self.k1.is_finite() && self.k2.is_finite()) {
            return Err(Error::BadSsimParams("k1 and k2 must be positive"));
        }
        if !(self.dynamic_range.is_finite() && self.dynamic_range > 0.0) {
            return Err(Error::BadSsimParams("dynamic range must be positive"));
        }
        Ok(())
    }

    /// Normalized 1D taps; the 3D window is their outer product.
    pub fn window_taps(&self) -> Vec<f64> {
        let h = (self.window_size / 2) as isize;
        let denom = 2.0 * self.window_sigma * self.window_sigma;
        let mut w: Vec<f64> = (-h..=h)
            .map(|i| libm::exp(-((i * i) as f64) / denom))
            .collect();
        let total: f64 = w.iter().sum();
        for x in w.iter_mut() {
            *x /= total;
        }
        w
    }
}

/// One (case, method) row of evaluation output.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub case_id: String,
    pub method_id: String,
    pub mse: f64,
    /// `f64::INFINITY` when `mse == 0`.
    pub psnr: f64,
    pub ssim: f64,
    pub roi_voxels: usize,
}

fn check_pair(pred: &Volume, gt: &Volume, m: &Mask) -> Result<usize> {
    check_dims(gt.dims(), pred.dims())?;
    check_congruent(gt, m)?;
    match m.count() {
        0 => Err(Error::EmptyRoi),
        n => Ok(n),
    }
}

/// Mean squared difference over mask voxels.
pub fn mse(pred: &Volume, gt: &Volume, m: &Mask) -> Result<f64> {
    let n = check_pair(pred, gt, m)?;
    let sum: f64 = pred
        .data()
        .iter()
        .zip(gt.data())
        .zip(m.data())
        .filter(|(_, &inside)| inside)
        .map(|((p, g), _)| (p - g) * (p - g))
        .sum();
    Ok(sum / n as f64)
}

pub fn psnr_from_mse(mse: f64, dynamic_range: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * libm::log10(dynamic_range * dynamic_range / mse)
    }
}

/// PSNR in dB for unit dynamic range.
pub fn psnr(pred: &Volume, gt: &Volume, m: &Mask) -> Result<f64> {
    Ok(psnr_from_mse(mse(pred, gt, m)?, 1.0))
}

/// Per-voxel SSIM from local weighted moments. Variances are clamped at zero
/// and the covariance to the Cauchy-Schwarz bound, which keeps the index in
/// `[-1, 1]` under rounding.
#[inline]
pub fn ssim_from_moments(
    mu_p: f64,
    mu_g: f64,
    e_pp: f64,
    e_gg: f64,
    e_pg: f64,
    c1: f64,
    c2: f64,
) -> f64 {
    let var_p = (e_pp - mu_p * mu_p).max(0.0);
    let var_g = (e_gg - mu_g * mu_g).max(0.0);
    let bound = libm::sqrt(var_p * var_g);
    let cov = (e_pg - mu_p * mu_g).clamp(-bound, bound);
    let num = (2.0 * mu_p * mu_g + c1) * (2.0 * cov + c2);
    let den = (mu_p * mu_p + mu_g * mu_g + c1) * (var_p + var_g + c2);
    num / den
}

/// Mean of the 3D SSIM map over mask voxels. The Gaussian window may reach
/// outside the mask; it is mirrored at the volume boundary.
pub fn ssim(pred: &Volume, gt: &Volume, m: &Mask, p: &SsimParams) -> Result<f64> {
    p.validate()?;
    let n = check_pair(pred, gt, m)?;
    let dims = gt.dims();
    let half = p.window_size / 2;
    if dims.min_extent() < half + 1 {
        return Err(Error::VolumeTooSmall {
            dims: dims.0,
            window: p.window_size,
        });
    }
    let taps = p.window_taps();
    let blur = |mut field: Vec<f64>| {
        for axis in 0..3 {
            convolve_axis(&mut field, dims, axis, &taps);
        }
        field
    };
    let (a, b) = (pred.data(), gt.data());
    let mu_p = blur(a.to_vec());
    let mu_g = blur(b.to_vec());
    let e_pp = blur(a.iter().map(|x| x * x).collect());
    let e_gg = blur(b.iter().map(|x| x * x).collect());
    let e_pg = blur(a.iter().zip(b).map(|(x, y)| x * y).collect());

    let c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
    let c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
    let sum: f64 = m
        .data()
        .iter()
        .enumerate()
        .filter(|(_, &inside)| inside)
        .map(|(i, _)| ssim_from_moments(mu_p[i], mu_g[i], e_pp[i], e_gg[i], e_pg[i], c1, c2))
        .sum();
    Ok(sum / n as f64)
}

/// Jointly normalizes `pred` and `gt`, then scores all three metrics.
pub fn evaluate_case(
    case_id: &str,
    method_id: &str,
    pred: &Volume,
    gt: &Volume,
    m: &Mask,
    params: &SsimParams,
) -> Result<MetricReport> {
    let roi_voxels = check_pair(pred, gt, m)?;
    let (g, p) = joint_normalize(gt, pred, m)?;
    let mse = mse(&p, &g, m)?;
    let ssim = ssim(&p, &g, m, params)?;
    Ok(MetricReport {
        case_id: case_id.into(),
        method_id: method_id.into(),
        mse,
        psnr: psnr_from_mse(mse, params.dynamic_range),
        ssim,
        roi_voxels,
    })
}
