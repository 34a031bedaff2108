//! On-disk case layout.
//!
//! ```text
//! <input_dir>/<id>/<id>-t1n-voided.nii.gz
//! <input_dir>/<id>/<id>-mask.nii.gz
//! <pred_dir>/<id>.nii.gz              one directory per method
//! <gt_dir>/<id>-t1n.nii.gz
//! ```
//!
//! Every file may also be an uncompressed `.nii`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One subject with every file it needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseRecord {
    pub case_id: String,
    pub voided: PathBuf,
    pub mask: PathBuf,
    /// Keyed by method id, iterated in `prediction_dirs` order via `methods`.
    pub predictions: BTreeMap<String, PathBuf>,
    pub gt: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct Discovery {
    pub cases: Vec<CaseRecord>,
    /// Cases dropped in lenient mode, with the methods they lacked.
    pub skipped: Vec<(String, Vec<String>)>,
}

/// `<dir>/<stem>.nii.gz` if present, else `<dir>/<stem>.nii`.
pub fn find_nifti(dir: &Path, stem: &str) -> Option<PathBuf> {
    ["nii.gz", "nii"]
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
}

/// Method id of a prediction directory: its final path component.
pub fn method_id(dir: &Path) -> Result<String> {
    dir.file_name()
        .and_then(|n| n.to_str())
        .map(str::to_string)
        .ok_or_else(|| Error::Layout(format!("cannot derive a method id from {}", dir.display())))
}

pub fn method_ids(prediction_dirs: &[PathBuf]) -> Result<Vec<String>> {
    let ids = prediction_dirs
        .iter()
        .map(|d| method_id(d))
        .collect::<Result<Vec<_>>>()?;
    for (i, id) in ids.iter().enumerate() {
        if ids[..i].contains(id) {
            return Err(Error::Layout(format!("two prediction directories share the method id {id:?}")));
        }
    }
    Ok(ids)
}

fn require_dir(dir: &Path) -> Result<()> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Error::Layout(format!("{} is not a directory", dir.display())))
    }
}

/// Case ids are the names of the sub-directories of `dir`, sorted.
pub fn case_dirs(dir: &Path) -> Result<Vec<String>> {
    require_dir(dir)?;
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.path().is_dir() {
            if let Some(name) = entry.file_name().to_str() {
                ids.push(name.to_string());
            }
        }
    }
    ids.sort();
    Ok(ids)
}

/// Finds every case under `input_dir` and pairs it with its predictions.
///
/// A case missing any prediction is skipped with a warning, or is an error
/// when `strict` is set.
pub fn discover_cases(
    input_dir: &Path,
    prediction_dirs: &[PathBuf],
    gt_dir: Option<&Path>,
    strict: bool,
) -> Result<Discovery> {
    if prediction_dirs.is_empty() {
        return Err(Error::Layout("at least one prediction directory is required".into()));
    }
    let methods = method_ids(prediction_dirs)?;
    for d in prediction_dirs {
        require_dir(d)?;
    }
    if let Some(g) = gt_dir {
        require_dir(g)?;
    }

    let mut found = Discovery::default();
    for case_id in case_dirs(input_dir)? {
        let dir = input_dir.join(&case_id);
        let voided = find_nifti(&dir, &format!("{case_id}-t1n-voided"));
        let mask = find_nifti(&dir, &format!("{case_id}-mask"));
        let (voided, mask) = match (voided, mask) {
            (Some(v), Some(m)) => (v, m),
            (None, None) if !strict => {
                log::warn!("[{case_id}] no voided scan or mask, ignoring directory");
                continue;
            }
            _ => {
                return Err(Error::Layout(format!(
                    "case {case_id} needs both {case_id}-t1n-voided.nii[.gz] and {case_id}-mask.nii[.gz]"
                )))
            }
        };
        let mut predictions = BTreeMap::new();
        let mut missing = Vec::new();
        for (method, pdir) in methods.iter().zip(prediction_dirs) {
            match find_nifti(pdir, &case_id) {
                Some(p) => {
                    predictions.insert(method.clone(), p);
                }
                None => missing.push(method.clone()),
            }
        }
        if !missing.is_empty() {
            if strict {
                return Err(Error::IncompleteCase { case_id, missing });
            }
            log::warn!("[{case_id}] missing predictions from {}, skipping", missing.join(", "));
            found.skipped.push((case_id, missing));
            continue;
        }
        let gt = gt_dir.and_then(|g| find_nifti(g, &format!("{case_id}-t1n")));
        found.cases.push(CaseRecord {
            case_id,
            voided,
            mask,
            predictions,
            gt,
        });
    }
    if found.cases.is_empty() {
        return Err(Error::EmptyDataset(input_dir.into()));
    }
    Ok(found)
}
