#![allow(dead_code)]
pub mod oracle;

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use voxpost::config::{Evaluation, IoSection, PipelineConfig};
use voxpost::nifti::write_volume;
use voxpost_core::{Dims, Mask, Volume};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_volume(rng: &mut impl Rng, n: usize) -> Volume {
    let d = Dims::new(n, n, n);
    Volume::from_data(d, (0..d.len()).map(|_| rng.random::<f64>()).collect()).unwrap()
}

/// Sum of a few wide Gaussian blobs, rescaled to [0.2, 1.0].
pub fn phantom(rng: &mut impl Rng, n: usize) -> Volume {
    let d = Dims::new(n, n, n);
    let blobs: Vec<([f64; 3], f64, f64)> = (0..5)
        .map(|_| {
            let c = [0, 1, 2].map(|_| rng.random_range(0.2..0.8) * n as f64);
            let width = rng.random_range(0.15..0.35) * n as f64;
            let amp = rng.random_range(0.3..1.0);
            (c, width, amp)
        })
        .collect();
    let mut data = Vec::with_capacity(d.len());
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let p = [x as f64, y as f64, z as f64];
                let v: f64 = blobs
                    .iter()
                    .map(|(c, w, a)| {
                        let r2: f64 = (0..3).map(|i| (p[i] - c[i]).powi(2)).sum();
                        a * (-r2 / (2.0 * w * w)).exp()
                    })
                    .sum();
                data.push(v);
            }
        }
    }
    let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let data = data.iter().map(|v| 0.2 + 0.8 * (v - lo) / (hi - lo)).collect();
    Volume::from_data(d, data).unwrap()
}

/// Axis-aligned ellipsoid centred in the volume, radii a fraction of `n`.
pub fn ellipsoid_mask(n: usize, frac: [f64; 3]) -> Mask {
    let d = Dims::new(n, n, n);
    let c = (n as f64 - 1.0) / 2.0;
    let mut data = Vec::with_capacity(d.len());
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let r: f64 = [x, y, z]
                    .iter()
                    .zip(frac)
                    .map(|(&p, f)| ((p as f64 - c) / (f * n as f64)).powi(2))
                    .sum();
                data.push(r <= 1.0);
            }
        }
    }
    Mask::new(d, data).unwrap()
}

/// `v` plus N(0, sigma) noise inside the mask.
pub fn add_noise(v: &Volume, m: &Mask, sigma: f64, rng: &mut impl Rng) -> Volume {
    let normal = Normal::new(0.0, sigma).unwrap();
    let data = v
        .data()
        .iter()
        .zip(m.data())
        .map(|(&x, &inside)| if inside { x + normal.sample(rng) } else { x })
        .collect();
    Volume::from_data(v.dims(), data).unwrap()
}

/// Zeroes the masked region.
pub fn void(v: &Volume, m: &Mask) -> Volume {
    let data = v
        .data()
        .iter()
        .zip(m.data())
        .map(|(&x, &inside)| if inside { 0.0 } else { x })
        .collect();
    Volume::from_data(v.dims(), data).unwrap()
}

pub fn mask_volume(m: &Mask) -> Volume {
    Volume::from_data(m.dims(), m.data().iter().map(|&b| b as u8 as f64).collect()).unwrap()
}

pub fn to_f32(v: &Volume) -> Volume {
    Volume::from_data(v.dims(), v.data().iter().map(|&x| x as f32 as f64).collect()).unwrap()
}

pub fn in_mask_mse(a: &Volume, b: &Volume, m: &Mask) -> f64 {
    voxpost_core::mse(a, b, m).unwrap()
}

/// Paths of a synthetic dataset laid out the way the pipeline expects.
pub struct Fixture {
    pub root: PathBuf,
    pub input_dir: PathBuf,
    pub pred_dirs: Vec<PathBuf>,
    pub gt_dir: PathBuf,
    pub case_ids: Vec<String>,
}

impl Fixture {
    pub fn config(&self, output_dir: &Path, evaluate: bool) -> PipelineConfig {
        PipelineConfig::default_for(
            IoSection {
                input_dir: self.input_dir.clone(),
                output_dir: output_dir.to_path_buf(),
                prediction_dirs: self.pred_dirs.clone(),
            },
            Evaluation {
                enabled: evaluate,
                gt_dir: Some(self.gt_dir.clone()),
            },
        )
        .unwrap()
    }
}

pub struct CaseData {
    pub gt: Volume,
    pub mask: Mask,
    pub predictions: Vec<Volume>,
}

/// Phantom ground truth, ellipsoid mask, and `methods` noisy predictions.
pub fn synth_case(seed: u64, n: usize, methods: usize, noise: f64) -> CaseData {
    let mut r = rng(seed);
    let gt = phantom(&mut r, n);
    let mask = ellipsoid_mask(n, [0.25, 0.2, 0.3]);
    let predictions = (0..methods).map(|_| add_noise(&gt, &mask, noise, &mut r)).collect();
    CaseData {
        gt,
        mask,
        predictions,
    }
}

/// Writes cases to `root` using the standard layout with method ids
/// `rank1`, `rank2`, ...
pub fn write_fixture(root: &Path, cases: &[(String, CaseData)]) -> Fixture {
    let input_dir = root.join("input");
    let gt_dir = root.join("gt");
    let methods = cases.first().map_or(0, |c| c.1.predictions.len());
    let pred_dirs: Vec<PathBuf> = (1..=methods).map(|i| root.join("preds").join(format!("rank{i}"))).collect();
    fs::create_dir_all(&gt_dir).unwrap();
    for d in &pred_dirs {
        fs::create_dir_all(d).unwrap();
    }
    for (id, c) in cases {
        let dir = input_dir.join(id);
        write_volume(&void(&c.gt, &c.mask), dir.join(format!("{id}-t1n-voided.nii.gz")), true).unwrap();
        write_volume(&mask_volume(&c.mask), dir.join(format!("{id}-mask.nii.gz")), true).unwrap();
        write_volume(&c.gt, gt_dir.join(format!("{id}-t1n.nii.gz")), true).unwrap();
        for (p, d) in c.predictions.iter().zip(&pred_dirs) {
            write_volume(p, d.join(format!("{id}.nii.gz")), true).unwrap();
        }
    }
    Fixture {
        root: root.to_path_buf(),
        input_dir,
        pred_dirs,
        gt_dir,
        case_ids: cases.iter().map(|c| c.0.clone()).collect(),
    }
}

/// Every regular file under `dir`, relative path to bytes, sorted.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
