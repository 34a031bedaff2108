//! Building a degraded training set from healthy scans.
//!
//! Input: `<input_dir>/<id>/<id>-t1n.nii.gz` and `<id>-healthy-mask.nii.gz`.
//! Output: `<output_dir>/<id>/` holding the degraded volume(s) plus copies of
//! the ground truth and mask, and `<output_dir>/manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use voxpost_core::degrade::degrade_draw;
use voxpost_core::{check_congruent, DegradeSpec};

use crate::error::{Error, Result};
use crate::layout::{case_dirs, find_nifti};
use crate::nifti::{read_mask, read_volume, write_volume};

pub const MANIFEST_NAME: &str = "manifest.json";

/// One degraded volume. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub case_id: String,
    pub sigma: f64,
    pub degraded_path: PathBuf,
    pub gt_path: PathBuf,
    pub mask_path: PathBuf,
}

fn file_name(p: &Path) -> String {
    p.file_name().unwrap().to_string_lossy().into_owned()
}

fn degrade_one(
    input_dir: &Path,
    output_dir: &Path,
    spec: &DegradeSpec,
    case_index: usize,
    case_id: &str,
) -> Result<Vec<ManifestEntry>> {
    let dir = input_dir.join(case_id);
    let gt_path = find_nifti(&dir, &format!("{case_id}-t1n"))
        .ok_or_else(|| Error::Layout(format!("case {case_id}: missing {case_id}-t1n.nii[.gz]")))?;
    let mask_path = find_nifti(&dir, &format!("{case_id}-healthy-mask")).ok_or_else(|| {
        Error::Layout(format!("case {case_id}: missing {case_id}-healthy-mask.nii[.gz]"))
    })?;
    let gt = read_volume(&gt_path)?;
    let healthy = read_mask(&mask_path)?;
    check_congruent(&gt, &healthy)?;

    let case_out = output_dir.join(case_id);
    fs::create_dir_all(&case_out).map_err(|e| Error::io(&case_out, e))?;
    let rel_gt = Path::new(case_id).join(file_name(&gt_path));
    let rel_mask = Path::new(case_id).join(file_name(&mask_path));
    fs::copy(&gt_path, output_dir.join(&rel_gt)).map_err(|e| Error::io(&gt_path, e))?;
    fs::copy(&mask_path, output_dir.join(&rel_mask)).map_err(|e| Error::io(&mask_path, e))?;

    let mut entries = Vec::with_capacity(spec.per_case_draws);
    for draw in 0..spec.per_case_draws {
        let (degraded, sigma) = degrade_draw(&gt, &healthy, spec, case_index as u64, draw as u64)?;
        let name = if draw == 0 {
            format!("{case_id}-degraded.nii.gz")
        } else {
            format!("{case_id}-degraded-{draw}.nii.gz")
        };
        let rel = Path::new(case_id).join(name);
        write_volume(&degraded, output_dir.join(&rel), true)?;
        log::info!("[{case_id}] draw {draw}: sigma {sigma:.4}");
        entries.push(ManifestEntry {
            case_id: case_id.to_string(),
            sigma,
            degraded_path: rel,
            gt_path: rel_gt.clone(),
            mask_path: rel_mask.clone(),
        });
    }
    Ok(entries)
}

/// Degrades every case under `input_dir` and writes the manifest. Case `i`
/// in sorted case-id order uses key `(spec.seed, i, draw)`.
pub fn degrade_dataset(
    input_dir: &Path,
    output_dir: &Path,
    spec: &DegradeSpec,
) -> Result<Vec<ManifestEntry>> {
    spec.validate()?;
    let ids = case_dirs(input_dir)?;
    if ids.is_empty() {
        return Err(Error::EmptyDataset(input_dir.into()));
    }
    fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    let per_case: Vec<Result<Vec<ManifestEntry>>> = ids
        .par_iter()
        .enumerate()
        .map(|(i, id)| degrade_one(input_dir, output_dir, spec, i, id))
        .collect();
    let mut manifest = Vec::new();
    for r in per_case {
        manifest.extend(r?);
    }
    let path = output_dir.join(MANIFEST_NAME);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}
