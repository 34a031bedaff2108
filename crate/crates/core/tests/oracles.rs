//! Library kernels checked against naive, independently written references.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxpost_core::aggregate::GEOMEAN_EPSILON;
use voxpost_core::{
    ensemble, ensemble_masked, gaussian_smooth, histogram_match, joint_normalize, median_filter,
    mse, rank_methods, ssim, AggregationMode, Dims, Fusion, Mask, MetricReport, Roi, SsimParams,
    Volume,
};

fn random_volume(rng: &mut ChaCha8Rng, d: Dims, lo: f64, hi: f64) -> Volume {
    let data = (0..d.len()).map(|_| rng.random_range(lo..hi)).collect();
    Volume::from_data(d, data).unwrap()
}

fn random_mask(rng: &mut ChaCha8Rng, d: Dims, p: f64) -> Mask {
    Mask::new(d, (0..d.len()).map(|_| rng.random_bool(p)).collect()).unwrap()
}

fn mirror(i: isize, n: usize) -> usize {
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

fn at(v: &Volume, x: usize, y: usize, z: usize) -> f64 {
    let d = v.dims();
    v.data()[x + d.nx() * (y + d.ny() * z)]
}

fn dense_window(sigma: f64, r: isize) -> Vec<f64> {
    let mut w = Vec::new();
    for k in -r..=r {
        for j in -r..=r {
            for i in -r..=r {
                w.push((-((i * i + j * j + k * k) as f64) / (2.0 * sigma * sigma)).exp());
            }
        }
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Weighted sum of `f(v_a, v_b)` over the mirrored cube around `(x, y, z)`.
fn window_sum(
    a: &Volume,
    b: &Volume,
    w: &[f64],
    r: isize,
    (x, y, z): (usize, usize, usize),
    f: impl Fn(f64, f64) -> f64,
) -> f64 {
    let d = a.dims();
    let mut acc = 0.0;
    let mut t = 0;
    for k in -r..=r {
        for j in -r..=r {
            for i in -r..=r {
                let xx = mirror(x as isize + i, d.nx());
                let yy = mirror(y as isize + j, d.ny());
                let zz = mirror(z as isize + k, d.nz());
                acc += w[t] * f(at(a, xx, yy, zz), at(b, xx, yy, zz));
                t += 1;
            }
        }
    }
    acc
}

#[test]
fn ensemble_matches_scalar_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = Dims::new(8, 8, 8);
    let inputs: Vec<Volume> = (0..5).map(|_| random_volume(&mut rng, d, -0.2, 2.0)).collect();
    for fusion in [Fusion::Mean, Fusion::Median, Fusion::GeometricMean, Fusion::Max, Fusion::Min] {
        let out = ensemble(&inputs, &fusion.into()).unwrap();
        for i in 0..d.len() {
            let mut vals: Vec<f64> = inputs.iter().map(|v| v.data()[i]).collect();
            let expected = match fusion {
                Fusion::Mean => vals.iter().sum::<f64>() / 5.0,
                Fusion::Median => {
                    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    vals[2]
                }
                Fusion::GeometricMean => {
                    (vals.iter().map(|v| v.max(GEOMEAN_EPSILON).ln()).sum::<f64>() / 5.0).exp()
                }
                Fusion::Max => vals.iter().cloned().fold(f64::MIN, f64::max),
                Fusion::Min => vals.iter().cloned().fold(f64::MAX, f64::min),
            };
            let got = out.data()[i];
            match fusion {
                Fusion::Mean | Fusion::GeometricMean => {
                    assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0), "{fusion:?} voxel {i}")
                }
                _ => assert_eq!(got, expected, "{fusion:?} voxel {i}"),
            }
        }
    }
    let w = vec![0.1, 0.2, 0.3, 0.25, 0.15];
    let out = ensemble(&inputs, &AggregationMode::weighted_mean(w.clone())).unwrap();
    for i in 0..d.len() {
        let expected: f64 = inputs.iter().zip(&w).map(|(v, w)| v.data()[i] * w).sum();
        assert!((out.data()[i] - expected).abs() <= 1e-12);
    }
}

#[test]
fn masked_ensemble_matches_select_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = Dims::new(6, 7, 5);
    let a = random_volume(&mut rng, d, 0.0, 1.0);
    let b = random_volume(&mut rng, d, 0.0, 1.0);
    let base = random_volume(&mut rng, d, 0.0, 1.0);
    let m = random_mask(&mut rng, d, 0.4);
    let mode = Fusion::GeometricMean.into();
    let full = ensemble(&[&a, &b], &mode).unwrap();
    let out = ensemble_masked(&[&a, &b], &mode, &m, &base).unwrap();
    for i in 0..d.len() {
        let expected = if m.data()[i] { full.data()[i] } else { base.data()[i] };
        assert_eq!(out.data()[i].to_bits(), expected.to_bits());
    }
}

#[test]
fn median_filter_matches_neighbourhood_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = Dims::new(16, 16, 16);
    for _ in 0..2 {
        let v = random_volume(&mut rng, d, 0.0, 1.0);
        for k in [3usize, 5] {
            let out = median_filter(&v, k).unwrap();
            let r = (k / 2) as isize;
            for z in 0..16 {
                for y in 0..16 {
                    for x in 0..16 {
                        let mut nb = Vec::new();
                        for dz in -r..=r {
                            for dy in -r..=r {
                                for dx in -r..=r {
                                    nb.push(at(
                                        &v,
                                        mirror(x as isize + dx, 16),
                                        mirror(y as isize + dy, 16),
                                        mirror(z as isize + dz, 16),
                                    ));
                                }
                            }
                        }
                        nb.sort_by(|a, b| a.partial_cmp(b).unwrap());
                        assert_eq!(at(&out, x, y, z), nb[nb.len() / 2]);
                    }
                }
            }
        }
    }
}

#[test]
fn separable_gaussian_matches_dense_convolution() {
    let d = Dims::new(16, 16, 16);
    let mut impulse = vec![0.0; d.len()];
    impulse[d.index(7, 8, 9)] = 1.0;
    impulse[d.index(0, 0, 15)] = 3.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let volumes = [
        Volume::from_data(d, impulse).unwrap(),
        random_volume(&mut rng, d, 0.0, 1.0),
    ];
    for sigma in [0.5, 1.2] {
        let r = ((3.0f64 * sigma).ceil() as isize).max(1);
        let w = dense_window(sigma, r);
        for v in &volumes {
            let out = gaussian_smooth(v, sigma).unwrap();
            let mut worst: f64 = 0.0;
            for z in 0..16 {
                for y in 0..16 {
                    for x in 0..16 {
                        let expected = window_sum(v, v, &w, r, (x, y, z), |a, _| a);
                        worst = worst.max((at(&out, x, y, z) - expected).abs());
                    }
                }
            }
            assert!(worst <= 1e-10, "sigma {sigma}: {worst}");
        }
    }
}

#[test]
fn ssim_matches_sliding_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = Dims::new(16, 16, 16);
    let p = SsimParams::default();
    let r = 5isize;
    let w = dense_window(p.window_sigma, r);
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let a = random_volume(&mut rng, d, 0.0, 1.0);
    let noise = random_volume(&mut rng, d, -0.2, 0.2);
    let b = Volume::from_data(
        d,
        a.data().iter().zip(noise.data()).map(|(x, n)| (x + n).clamp(0.0, 1.0)).collect(),
    )
    .unwrap();
    let m = random_mask(&mut rng, d, 0.5);
    let mut sum = 0.0;
    for z in 0..16 {
        for y in 0..16 {
            for x in 0..16 {
                if !m.get(x, y, z) {
                    continue;
                }
                let pos = (x, y, z);
                let mu_a = window_sum(&a, &b, &w, r, pos, |u, _| u);
                let mu_b = window_sum(&a, &b, &w, r, pos, |_, v| v);
                let var_a = window_sum(&a, &b, &w, r, pos, |u, _| (u - mu_a) * (u - mu_a));
                let var_b = window_sum(&a, &b, &w, r, pos, |_, v| (v - mu_b) * (v - mu_b));
                let cov = window_sum(&a, &b, &w, r, pos, |u, v| (u - mu_a) * (v - mu_b));
                sum += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                    / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            }
        }
    }
    let expected = sum / m.count() as f64;
    let got = ssim(&a, &b, &m, &p).unwrap();
    assert!((got - expected).abs() <= 1e-6, "{got} vs {expected}");
}

#[test]
fn histogram_match_matches_quantile_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = Dims::new(12, 12, 12);
    for round in 0..4 {
        let mut src = random_volume(&mut rng, d, 0.0, 1.0);
        if round % 2 == 1 {
            // coarse quantization to force ties
            src = Volume::from_data(d, src.data().iter().map(|x| (x * 10.0).round()).collect()).unwrap();
        }
        let reference = random_volume(&mut rng, d, 100.0, 900.0);
        let m = random_mask(&mut rng, d, 0.3);
        let out = histogram_match(&src, &reference, Some(&m), Roi::MaskOnly).unwrap().volume;

        let roi: Vec<usize> = (0..d.len()).filter(|&i| m.data()[i]).collect();
        let n = roi.len();
        let mut table: Vec<f64> = roi.iter().map(|&i| reference.data()[i]).collect();
        table.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &i in &roi {
            let s = src.data()[i];
            let below = roi.iter().filter(|&&j| src.data()[j] < s).count();
            let equal = roi.iter().filter(|&&j| src.data()[j] == s).count();
            let rank = below as f64 + (equal as f64 + 1.0) / 2.0;
            let pos = (rank - 1.0) * (n - 1) as f64 / (n - 1) as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            let expected = if lo + 1 < n {
                table[lo] * (1.0 - frac) + table[lo + 1] * frac
            } else {
                table[lo]
            };
            assert!((out.data()[i] - expected).abs() <= 1e-9);
        }
        for i in 0..d.len() {
            if !m.data()[i] {
                assert_eq!(out.data()[i].to_bits(), src.data()[i].to_bits());
            }
        }
    }
}

#[test]
fn joint_normalize_and_mse_match_scalar_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = Dims::new(8, 8, 8);
    let gt = random_volume(&mut rng, d, 50.0, 900.0);
    let pred = random_volume(&mut rng, d, 0.0, 1000.0);
    let m = random_mask(&mut rng, d, 0.5);
    let (g, p) = joint_normalize(&gt, &pred, &m).unwrap();
    let lo = gt.data().iter().cloned().fold(f64::MAX, f64::min);
    let hi = gt.data().iter().cloned().fold(f64::MIN, f64::max);
    let mut acc = 0.0;
    let mut n = 0;
    for i in 0..d.len() {
        let eg = (gt.data()[i] - lo) / (hi - lo);
        let ep = ((pred.data()[i] - lo) / (hi - lo)).max(0.0).min(1.0);
        assert!((g.data()[i] - eg).abs() <= 1e-15);
        assert!((p.data()[i] - ep).abs() <= 1e-15);
        if m.data()[i] {
            acc += (ep - eg).powi(2);
            n += 1;
        }
    }
    assert!((mse(&p, &g, &m).unwrap() - acc / n as f64).abs() <= 1e-12);
}

/// Rank = 1 + (#strictly better) + (#tied others) / 2.
fn brute_force_scores(reports: &[MetricReport]) -> Vec<(String, f64)> {
    let mut methods: Vec<String> = reports.iter().map(|r| r.method_id.clone()).collect();
    methods.sort();
    methods.dedup();
    let mut cases: Vec<String> = reports.iter().map(|r| r.case_id.clone()).collect();
    cases.sort();
    cases.dedup();
    let find = |c: &str, m: &str| reports.iter().find(|r| r.case_id == c && r.method_id == m).unwrap();
    methods
        .iter()
        .map(|me| {
            let mut total = 0.0;
            for c in &cases {
                let mine = find(c, me);
                let getters: [fn(&MetricReport) -> f64; 3] = [|r| -r.mse, |r| r.psnr, |r| r.ssim];
                for get in getters {
                    let (mut better, mut tied) = (0, 0);
                    for other in methods.iter().filter(|o| *o != me) {
                        let theirs = get(find(c, other));
                        if theirs > get(mine) {
                            better += 1;
                        } else if theirs == get(mine) {
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

#[test]
fn ranking_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..25 {
        let mut reports = Vec::new();
        for c in 0..10 {
            for me in 0..5 {
                // coarse values so ties are common
                reports.push(MetricReport {
                    case_id: format!("case{c:02}"),
                    method_id: format!("m{me}"),
                    mse: rng.random_range(0..4) as f64 / 100.0,
                    psnr: if rng.random_bool(0.1) { f64::INFINITY } else { rng.random_range(15..20) as f64 },
                    ssim: rng.random_range(80..84) as f64 / 100.0,
                    roi_voxels: 10,
                });
            }
        }
        let table = rank_methods(&reports).unwrap();
        for (me, score) in brute_force_scores(&reports) {
            assert!((table.score_of(&me).unwrap() - score).abs() <= 1e-12);
        }
    }
}
