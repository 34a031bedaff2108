//! Config-driven batch runner.
//!
//! Each case is processed on its own: load the voided scan, mask and
//! predictions, run the steps in order, composite against the voided scan,
//! write `<output_dir>/<case_id>-inpainted.nii.gz`. Optional evaluation scores
//! every raw prediction plus the pipeline output against the ground truth and
//! ranks them.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use voxpost_core::{
    check_congruent, composite, ensemble, evaluate_case, gaussian_smooth, histogram_match,
    median_filter, rank_methods, Mask, MetricReport, SsimParams, Volume,
};

use crate::config::{PipelineConfig, Reference, Step};
use crate::error::{Error, Result};
use crate::layout::{discover_cases, find_nifti, CaseRecord};
use crate::nifti::{read_mask, read_volume, write_volume};
use crate::ranks::export_ranks;
use crate::report::write_reports;

/// Method id under which the pipeline output is scored.
pub const PIPELINE_METHOD_ID: &str = "pipeline";
pub const REPORTS_NAME: &str = "reports.jsonl";
pub const RANKS_NAME: &str = "ranks.csv";
pub const SUMMARY_NAME: &str = "summary.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub case_id: String,
    /// Relative to the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub cases: Vec<CaseOutcome>,
    pub skipped: Vec<String>,
    pub failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Vec<(String, f64)>>,
}

pub fn output_path(output_dir: &Path, case_id: &str) -> PathBuf {
    output_dir.join(format!("{case_id}-inpainted.nii.gz"))
}

/// What the file on disk will hold: every voxel rounded to float32.
fn as_stored(v: &Volume) -> Result<Volume> {
    Ok(v.map_data(v.data().iter().map(|&x| x as f32 as f64).collect())?)
}

struct Loaded {
    voided: Volume,
    mask: Mask,
    /// In `prediction_dirs` order.
    predictions: Vec<(String, Volume)>,
}

fn load_case(rec: &CaseRecord, methods: &[String]) -> Result<Loaded> {
    let voided = read_volume(&rec.voided)?;
    let mask = read_mask(&rec.mask)?;
    check_congruent(&voided, &mask)?;
    if mask.was_binarized() {
        log::warn!("[{}] mask had values other than 0/1, thresholded at 0.5", rec.case_id);
    }
    let mut predictions = Vec::with_capacity(methods.len());
    for m in methods {
        let path = &rec.predictions[m];
        let v = read_volume(path)?;
        check_congruent(&v, &mask).map_err(|e| Error::Layout(format!("{}: {e}", path.display())))?;
        predictions.push((m.clone(), v));
    }
    Ok(Loaded {
        voided,
        mask,
        predictions,
    })
}

fn reference_volume(cfg: &PipelineConfig, reference: &str, case: &Loaded, case_id: &str) -> Result<Volume> {
    match cfg.resolve_reference(reference)? {
        Reference::Method(m) => Ok(case
            .predictions
            .iter()
            .find(|(id, _)| *id == m)
            .map(|(_, v)| v.clone())
            .expect("method ids were validated")),
        Reference::Directory(dir) => {
            let path = find_nifti(&dir, case_id).ok_or_else(|| {
                Error::Layout(format!("no reference {case_id}.nii[.gz] in {}", dir.display()))
            })?;
            read_volume(path)
        }
    }
}

/// Runs the configured steps on one loaded case and returns the final,
/// composited volume.
fn apply_steps(cfg: &PipelineConfig, case: &Loaded, case_id: &str) -> Result<Volume> {
    let mut work = case.predictions[0].1.clone();
    for step in &cfg.steps {
        work = match step {
            Step::Ensemble { mode, weights } => {
                let inputs: Vec<&Volume> = case.predictions.iter().map(|(_, v)| v).collect();
                ensemble(&inputs, &Step::aggregation(*mode, weights))?
            }
            Step::Median { k } => median_filter(&work, *k)?,
            Step::Gaussian { sigma } => gaussian_smooth(&work, *sigma)?,
            Step::Histmatch { reference, roi } => {
                let r = reference_volume(cfg, reference, case, case_id)?;
                let hm = histogram_match(&work, &r, Some(&case.mask), (*roi).into())?;
                if hm.degenerate {
                    log::warn!("[{case_id}] constant source region, filled with reference median");
                }
                hm.volume
            }
            Step::Composite {} => composite(&work, &case.voided, &case.mask)?,
        };
        log::debug!("[{case_id}] {step:?} done");
    }
    composite(&work, &case.voided, &case.mask).map_err(Error::from)
}

struct CaseResult {
    output: PathBuf,
    reports: Vec<MetricReport>,
}

fn run_case(cfg: &PipelineConfig, rec: &CaseRecord, methods: &[String]) -> Result<CaseResult> {
    let case_id = rec.case_id.as_str();
    let case = load_case(rec, methods)?;
    let out = as_stored(&apply_steps(cfg, &case, case_id)?)?;
    let output = output_path(&cfg.io.output_dir, case_id);
    write_volume(&out, &output, true)?;
    log::info!("[{case_id}] wrote {}", output.display());

    let mut reports = Vec::new();
    if cfg.evaluation.enabled {
        let gt_path = rec
            .gt
            .as_ref()
            .ok_or_else(|| Error::Layout(format!("case {case_id}: no ground truth {case_id}-t1n.nii[.gz]")))?;
        let gt = read_volume(gt_path)?;
        let params = SsimParams::default();
        for (m, v) in &case.predictions {
            reports.push(evaluate_case(case_id, m, v, &gt, &case.mask, &params)?);
        }
        reports.push(evaluate_case(case_id, PIPELINE_METHOD_ID, &out, &gt, &case.mask, &params)?);
    }
    Ok(CaseResult { output, reports })
}

/// Runs the whole batch. Outputs are identical for any `jobs` value.
///
/// A case whose processing fails is logged and left out; the run then ends
/// with `CasesFailed`, or with that case's own error under `strict`.
pub fn run_pipeline(cfg: &PipelineConfig, opts: RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let methods = cfg.methods()?;
    let gt_dir = cfg.evaluation.gt_dir.as_deref().filter(|_| cfg.evaluation.enabled);
    let found = discover_cases(&cfg.io.input_dir, &cfg.io.prediction_dirs, gt_dir, opts.strict)?;
    fs::create_dir_all(&cfg.io.output_dir).map_err(|e| Error::io(&cfg.io.output_dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let results: Vec<Result<CaseResult>> = pool.install(|| {
        found
            .cases
            .par_iter()
            .map(|rec| {
                let r = run_case(cfg, rec, &methods);
                if let Err(e) = &r {
                    log::error!("[{}] {e}", rec.case_id);
                }
                r
            })
            .collect()
    });

    let mut summary = RunSummary {
        skipped: found.skipped.iter().map(|(id, _)| id.clone()).collect(),
        ..RunSummary::default()
    };
    let mut reports = Vec::new();
    let mut first_error = None;
    for (rec, r) in found.cases.iter().zip(results) {
        match r {
            Ok(ok) => {
                reports.extend(ok.reports);
                summary.cases.push(CaseOutcome {
                    case_id: rec.case_id.clone(),
                    output: ok.output.file_name().map(PathBuf::from),
                    error: None,
                });
            }
            Err(e) => {
                summary.failed += 1;
                summary.cases.push(CaseOutcome {
                    case_id: rec.case_id.clone(),
                    output: None,
                    error: Some(e.to_string()),
                });
                first_error.get_or_insert(e);
            }
        }
    }

    if cfg.evaluation.enabled && !reports.is_empty() {
        write_reports(cfg.io.output_dir.join(REPORTS_NAME), &reports)?;
        let table = rank_methods(&reports)?;
        export_ranks(&table, cfg.io.output_dir.join(RANKS_NAME))?;
        summary.ranking = Some(table.sorted().into_iter().map(|(m, s)| (m.to_string(), s)).collect());
    }
    let path = cfg.io.output_dir.join(SUMMARY_NAME);
    let json = serde_json::to_string_pretty(&summary).expect("summary serialization cannot fail");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;

    match first_error {
        None => Ok(summary),
        Some(e) if opts.strict => Err(e),
        Some(_) => Err(Error::CasesFailed {
            failed: summary.failed,
            total: summary.cases.len(),
        }),
    }
}
