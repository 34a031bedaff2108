//! ROI histogram matching and metric-domain normalization.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::volume::{check_congruent, check_dims, Mask, Volume};

/// Region over which intensity distributions are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Roi {
    #[default]
    MaskOnly,
    WholeVolume,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistMatch {
    pub volume: Volume,
    /// Source ROI was constant; every ROI voxel got the reference median.
    pub degenerate: bool,
}

/// 1-based ranks with ties sharing the average of their positions.
/// `order` must list indices into `values` in ascending value order.
pub(crate) fn average_ranks(values: &[f64], order: &[usize]) -> Vec<f64> {
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Linear interpolation into an ascending table at fractional index `pos`.
fn interpolate(sorted: &[f64], pos: f64) -> f64 {
    let last = sorted.len() - 1;
    let lo = (libm::floor(pos) as usize).min(last);
    let hi = (lo + 1).min(last);
    let frac = pos - lo as f64;
    if frac == 0.0 || lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Exact quantile mapping of `src` onto `reference` within the ROI.
///
/// A source voxel of average rank `r` among `ns` ROI values takes the
/// reference value at fractional index `(r - 1) * (nr - 1) / (ns - 1)` of the
/// sorted reference ROI, so the lowest source value maps to the reference
/// minimum and the highest to its maximum. Voxels outside the ROI are copied
/// unchanged.
pub fn histogram_match(
    src: &Volume,
    reference: &Volume,
    m: Option<&Mask>,
    roi: Roi,
) -> Result<HistMatch> {
    check_dims(src.dims(), reference.dims())?;
    let indices: Vec<usize> = match roi {
        Roi::WholeVolume => (0..src.data().len()).collect(),
        Roi::MaskOnly => {
            let m = m.ok_or(Error::DegenerateRoi { voxels: 0 })?;
            check_congruent(src, m)?;
            m.data()
                .iter()
                .enumerate()
                .filter_map(|(i, &b)| b.then_some(i))
                .collect()
        }
    };
    if indices.len() < 2 {
        return Err(Error::DegenerateRoi {
            voxels: indices.len(),
        });
    }

    let src_vals: Vec<f64> = indices.iter().map(|&i| src.data()[i]).collect();
    let mut ref_sorted: Vec<f64> = indices.iter().map(|&i| reference.data()[i]).collect();
    ref_sorted.sort_unstable_by(f64::total_cmp);

    let mut order: Vec<usize> = (0..src_vals.len()).collect();
    order.sort_unstable_by(|&a, &b| src_vals[a].total_cmp(&src_vals[b]));
    let ranks = average_ranks(&src_vals, &order);
    let degenerate = src_vals[order[0]] == src_vals[order[order.len() - 1]];

    let ns1 = (src_vals.len() - 1) as f64;
    let nr1 = (ref_sorted.len() - 1) as f64;
    let mut out = src.data().to_vec();
    for (k, &i) in indices.iter().enumerate() {
        let pos = (ranks[k] - 1.0) * nr1 / ns1;
        out[i] = interpolate(&ref_sorted, pos);
    }
    Ok(HistMatch {
        volume: src.like(out),
        degenerate,
    })
}

/// Maps both volumes by `x -> (x - lo) / (hi - lo)` using the ground truth's
/// whole-volume range, then clamps the prediction to `[0, 1]`.
pub fn joint_normalize(gt: &Volume, pred: &Volume, m: &Mask) -> Result<(Volume, Volume)> {
    check_dims(gt.dims(), pred.dims())?;
    check_congruent(gt, m)?;
    let (lo, hi) = gt
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if !(hi > lo) {
        return Err(Error::ConstantReference);
    }
    let range = hi - lo;
    let g = gt.data().iter().map(|&x| (x - lo) / range).collect();
    let p = pred
        .data()
        .iter()
        .map(|&x| ((x - lo) / range).clamp(0.0, 1.0))
        .collect();
    Ok((gt.like(g), pred.like(p)))
}
