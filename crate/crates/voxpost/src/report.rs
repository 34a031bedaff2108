//! `MetricReport` JSON: one object per (case, method), PSNR of identical
//! images written as the string `"inf"`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use voxpost_core::MetricReport;

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Psnr {
    Finite(f64),
    Label(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportJson {
    case_id: String,
    method_id: String,
    mse: f64,
    psnr: Psnr,
    ssim: f64,
    roi_voxels: usize,
}

impl From<&MetricReport> for ReportJson {
    fn from(r: &MetricReport) -> Self {
        ReportJson {
            case_id: r.case_id.clone(),
            method_id: r.method_id.clone(),
            mse: r.mse,
            psnr: if r.psnr == f64::INFINITY {
                Psnr::Label("inf".into())
            } else {
                Psnr::Finite(r.psnr)
            },
            ssim: r.ssim,
            roi_voxels: r.roi_voxels,
        }
    }
}

impl TryFrom<ReportJson> for MetricReport {
    type Error = String;

    fn try_from(r: ReportJson) -> std::result::Result<Self, String> {
        let psnr = match r.psnr {
            Psnr::Finite(v) => v,
            Psnr::Label(s) if s == "inf" => f64::INFINITY,
            Psnr::Label(s) => return Err(format!("psnr must be a number or \"inf\", got {s:?}")),
        };
        if !(r.mse >= 0.0) {
            return Err(format!("mse must be >= 0, got {}", r.mse));
        }
        if !(-1.0..=1.0).contains(&r.ssim) {
            return Err(format!("ssim must lie in [-1, 1], got {}", r.ssim));
        }
        if (r.mse == 0.0) != (psnr == f64::INFINITY) {
            return Err("psnr is \"inf\" exactly when mse is 0".into());
        }
        Ok(MetricReport {
            case_id: r.case_id,
            method_id: r.method_id,
            mse: r.mse,
            psnr,
            ssim: r.ssim,
            roi_voxels: r.roi_voxels,
        })
    }
}

pub fn to_json(r: &MetricReport) -> String {
    serde_json::to_string(&ReportJson::from(r)).expect("report serialization cannot fail")
}

pub fn to_jsonl(reports: &[MetricReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&to_json(r));
        out.push('\n');
    }
    out
}

/// Parses a stream of report objects: JSON-lines, a single (possibly
/// pretty-printed) object, or several objects back to back.
pub fn parse_reports(text: &str, path: &Path) -> Result<Vec<MetricReport>> {
    let mut out = Vec::new();
    let stream = serde_json::Deserializer::from_str(text).into_iter::<ReportJson>();
    for item in stream {
        let raw = item.map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        let r = MetricReport::try_from(raw).map_err(|reason| Error::Parse {
            path: path.into(),
            line: out.len() + 1,
            reason,
        })?;
        out.push(r);
    }
    Ok(out)
}

pub fn read_reports(path: impl AsRef<Path>) -> Result<Vec<MetricReport>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_reports(&text, path)
}

pub fn write_reports(path: impl AsRef<Path>, reports: &[MetricReport]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_jsonl(reports)).map_err(|e| Error::io(path, e))
}
