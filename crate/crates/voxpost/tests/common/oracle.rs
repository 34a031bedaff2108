//! Naive reference implementations, written without the library's kernels.

use voxpost_core::{Mask, MetricReport, Volume};

/// Reflect-without-repeat index for offsets smaller than `n`.
pub fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i
    } else if i >= n {
        2 * n - 2 - i
    } else {
        i
    };
    j as usize
}

pub fn at(v: &Volume, x: usize, y: usize, z: usize) -> f64 {
    let d = v.dims();
    v.data()[x + d.nx() * (y + d.ny() * z)]
}

fn cube(r: isize) -> impl Iterator<Item = (isize, isize, isize)> {
    (-r..=r).flat_map(move |k| (-r..=r).flat_map(move |j| (-r..=r).map(move |i| (i, j, k))))
}

fn voxels(v: &Volume) -> impl Iterator<Item = (usize, usize, usize)> {
    let d = v.dims();
    let (nx, ny, nz) = (d.nx(), d.ny(), d.nz());
    (0..nz).flat_map(move |z| (0..ny).flat_map(move |y| (0..nx).map(move |x| (x, y, z))))
}

fn neighbour(v: &Volume, (x, y, z): (usize, usize, usize), (i, j, k): (isize, isize, isize)) -> f64 {
    let d = v.dims();
    at(
        v,
        mirror(x as isize + i, d.nx()),
        mirror(y as isize + j, d.ny()),
        mirror(z as isize + k, d.nz()),
    )
}

/// Sorts each k³ neighbourhood and takes the middle element.
pub fn median(v: &Volume, k: usize) -> Vec<f64> {
    let r = (k / 2) as isize;
    voxels(v)
        .map(|p| {
            let mut nb: Vec<f64> = cube(r).map(|o| neighbour(v, p, o)).collect();
            nb.sort_by(|a, b| a.partial_cmp(b).unwrap());
            nb[nb.len() / 2]
        })
        .collect()
}

pub fn dense_window(sigma: f64, r: isize) -> Vec<f64> {
    let w: Vec<f64> = cube(r)
        .map(|(i, j, k)| (-((i * i + j * j + k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn window_sum(v: &Volume, w: &[f64], r: isize, p: (usize, usize, usize), f: impl Fn(f64) -> f64) -> f64 {
    cube(r).zip(w).map(|(o, wt)| wt * f(neighbour(v, p, o))).sum()
}

/// Full 3D convolution with a normalized Gaussian cube of radius max(1, ceil(3 sigma)).
pub fn gaussian(v: &Volume, sigma: f64) -> Vec<f64> {
    let r = ((3.0 * sigma).ceil() as isize).max(1);
    let w = dense_window(sigma, r);
    voxels(v).map(|p| window_sum(v, &w, r, p, |x| x)).collect()
}

/// Gaussian-windowed SSIM (11³, sigma 1.5, unit range), centred moments,
/// averaged over the mask.
pub fn ssim(a: &Volume, b: &Volume, m: &Mask) -> f64 {
    let r = 5isize;
    let w = dense_window(1.5, r);
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut sum = 0.0;
    for (idx, p) in voxels(a).enumerate() {
        if !m.data()[idx] {
            continue;
        }
        let mu_a = window_sum(a, &w, r, p, |u| u);
        let mu_b = window_sum(b, &w, r, p, |u| u);
        let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
        for (o, wt) in cube(r).zip(&w) {
            let (u, v) = (neighbour(a, p, o) - mu_a, neighbour(b, p, o) - mu_b);
            var_a += wt * u * u;
            var_b += wt * v * v;
            cov += wt * u * v;
        }
        sum += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
            / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
    sum / m.count() as f64
}

/// Expected in-ROI histogram-match output for voxel `i`: average rank of the
/// source value, scaled onto the sorted reference table and interpolated.
pub fn quantile_map(src: &Volume, reference: &Volume, m: &Mask) -> Vec<(usize, f64)> {
    let roi: Vec<usize> = (0..m.data().len()).filter(|&i| m.data()[i]).collect();
    let ns = roi.len();
    let mut table: Vec<f64> = roi.iter().map(|&i| reference.data()[i]).collect();
    table.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nr = table.len();
    roi.iter()
        .map(|&i| {
            let s = src.data()[i];
            let below = roi.iter().filter(|&&j| src.data()[j] < s).count();
            let equal = roi.iter().filter(|&&j| src.data()[j] == s).count();
            let rank = below as f64 + (equal as f64 + 1.0) / 2.0;
            let pos = (rank - 1.0) * (nr - 1) as f64 / (ns - 1) as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            let v = if lo + 1 < nr {
                table[lo] * (1.0 - frac) + table[lo + 1] * frac
            } else {
                table[lo]
            };
            (i, v)
        })
        .collect()
}

/// Per-method mean over (case, metric) of 1 + #better + #tied/2.
pub fn rank_scores(reports: &[MetricReport]) -> Vec<(String, f64)> {
    let mut methods: Vec<String> = reports.iter().map(|r| r.method_id.clone()).collect();
    methods.sort();
    methods.dedup();
    let mut cases: Vec<String> = reports.iter().map(|r| r.case_id.clone()).collect();
    cases.sort();
    cases.dedup();
    let find = |c: &str, m: &str| reports.iter().find(|r| r.case_id == c && r.method_id == m).unwrap();
    let getters: [fn(&MetricReport) -> f64; 3] = [|r| -r.mse, |r| r.psnr, |r| r.ssim];
    methods
        .iter()
        .map(|me| {
            let mut total = 0.0;
            for c in &cases {
                for get in getters {
                    let mine = get(find(c, me));
                    let (mut better, mut tied) = (0, 0);
                    for other in methods.iter().filter(|o| *o != me) {
                        let theirs = get(find(c, other));
                        if theirs > mine {
                            better += 1;
                        } else if theirs == mine {
                            tied += 1;
                        }
                    }
                    total += 1.0 + better as f64 + tied as f64 / 2.0;
                }
            }
            (me.clone(), total / (cases.len() * 3) as f64)
        })
        .collect()
}
