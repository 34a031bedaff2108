//! 3D median filter and separable Gaussian smoothing, both with mirror
//! (reflect-without-repeat) boundaries.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stats::{median_in_place, reflect};
use crate::volume::{composite, Dims, Mask, Volume};

/// Which classical filters to run and with what parameters. Median runs
/// before Gaussian when both are enabled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    /// Odd cube edge of the median neighbourhood; `None` skips the median.
    pub median_kernel: Option<usize>,
    /// Standard deviation in voxels; `0` is the identity.
    pub gaussian_sigma: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            median_kernel: None,
            gaussian_sigma: 0.5,
        }
    }
}

impl FilterSpec {
    pub fn apply(&self, v: &Volume) -> Result<Volume> {
        let smoothed_input;
        let src = match self.median_kernel {
            Some(k) => {
                smoothed_input = median_filter(v, k)?;
                &smoothed_input
            }
            None => v,
        };
        gaussian_smooth(src, self.gaussian_sigma)
    }
}

fn check_kernel(dims: Dims, k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) || k > 2 * dims.min_extent() - 1 {
        return Err(Error::BadKernel { k });
    }
    Ok(())
}

/// Replaces every voxel by the median of its `k x k x k` neighbourhood.
pub fn median_filter(v: &Volume, k: usize) -> Result<Volume> {
    let dims = v.dims();
    check_kernel(dims, k)?;
    if k == 1 {
        return Ok(v.clone());
    }
    let r = (k / 2) as isize;
    let (nx, ny, nz) = (dims.nx(), dims.ny(), dims.nz());
    let src = v.data();
    let mut out = Vec::with_capacity(src.len());
    let mut window = Vec::with_capacity(k * k * k);

    // Reflected coordinates per axis, precomputed once.
    let taps = |n: usize| -> Vec<Vec<usize>> {
        (0..n as isize)
            .map(|c| (-r..=r).map(|d| reflect(c + d, n)).collect())
            .collect()
    };
    let (tx, ty, tz) = (taps(nx), taps(ny), taps(nz));

    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                window.clear();
                for &zz in &tz[z] {
                    for &yy in &ty[y] {
                        let row = dims.index(0, yy, zz);
                        window.extend(tx[x].iter().map(|&xx| src[row + xx]));
                    }
                }
                out.push(median_in_place(&mut window));
            }
        }
    }
    Ok(v.like(out))
}

/// Truncation radius for a Gaussian of standard deviation `sigma`.
pub fn gaussian_radius(sigma: f64) -> usize {
    (libm::ceil(3.0 * sigma) as usize).max(1)
}

/// Normalized 1D Gaussian taps for offsets `-r..=r`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidSigma(sigma));
    }
    let r = gaussian_radius(sigma) as isize;
    let denom = 2.0 * sigma * sigma;
    let mut w: Vec<f64> = (-r..=r)
        .map(|i| libm::exp(-((i * i) as f64) / denom))
        .collect();
    let total: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= total;
    }
    Ok(w)
}

/// Convolves along one axis in place, using `line` as scratch.
pub(crate) fn convolve_axis(data: &mut [f64], dims: Dims, axis: usize, kernel: &[f64]) {
    let n = dims.0[axis];
    let r = (kernel.len() / 2) as isize;
    let stride = match axis {
        0 => 1,
        1 => dims.nx(),
        _ => dims.nx() * dims.ny(),
    };
    // Line starts: every voxel whose coordinate along `axis` is zero.
    let (outer_a, outer_b) = match axis {
        0 => (dims.ny(), dims.nz()),
        1 => (dims.nx(), dims.nz()),
        _ => (dims.nx(), dims.ny()),
    };
    let taps: Vec<Vec<usize>> = (0..n as isize)
        .map(|c| (-r..=r).map(|d| reflect(c + d, n)).collect())
        .collect();
    let mut line = vec![0.0; n];
    for b in 0..outer_b {
        for a in 0..outer_a {
            let start = match axis {
                0 => dims.index(0, a, b),
                1 => dims.index(a, 0, b),
                _ => dims.index(a, b, 0),
            };
            for (i, slot) in line.iter_mut().enumerate() {
                *slot = data[start + i * stride];
            }
            for (i, t) in taps.iter().enumerate() {
                let acc: f64 = t.iter().zip(kernel).map(|(&j, &w)| line[j] * w).sum();
                data[start + i * stride] = acc;
            }
        }
    }
}

/// Separable Gaussian smoothing along x, then y, then z.
pub fn gaussian_smooth(v: &Volume, sigma: f64) -> Result<Volume> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(v.clone());
    }
    let kernel = gaussian_kernel(sigma)?;
    let mut data = v.data().to_vec();
    for axis in 0..3 {
        convolve_axis(&mut data, v.dims(), axis, &kernel);
    }
    Ok(v.like(data))
}

/// Runs `filter` on the whole of `v`, then keeps its output only inside the
/// mask; outside voxels come from `base` unchanged.
pub fn apply_masked<F>(v: &Volume, base: &Volume, m: &Mask, filter: F) -> Result<Volume>
where
    F: FnOnce(&Volume) -> Result<Volume>,
{
    crate::volume::check_dims(base.dims(), v.dims())?;
    crate::volume::check_congruent(base, m)?;
    let filtered = filter(v)?;
    composite(&filtered, base, m)
}
