//! Pipeline configuration: one JSON document, unknown keys rejected.
//!
//! The schema lives in `schema/pipeline-config.schema.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use voxpost_core::{AggregationMode, Fusion, Roi};

use crate::error::{Error, Result};
use crate::layout::method_ids;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Mean,
    Median,
    Geomean,
    Max,
    Min,
}

impl From<ModeName> for Fusion {
    fn from(m: ModeName) -> Fusion {
        match m {
            ModeName::Mean => Fusion::Mean,
            ModeName::Median => Fusion::Median,
            ModeName::Geomean => Fusion::GeometricMean,
            ModeName::Max => Fusion::Max,
            ModeName::Min => Fusion::Min,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RoiName {
    #[default]
    Mask,
    Volume,
}

impl From<RoiName> for Roi {
    fn from(r: RoiName) -> Roi {
        match r {
            RoiName::Mask => Roi::MaskOnly,
            RoiName::Volume => Roi::WholeVolume,
        }
    }
}

fn default_median_k() -> usize {
    3
}

fn default_sigma() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Step {
    Ensemble {
        mode: ModeName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Median {
        #[serde(default = "default_median_k")]
        k: usize,
    },
    Gaussian {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    Histmatch {
        /// A method id (prediction directory name) or a directory holding
        /// `<case_id>.nii[.gz]` reference volumes.
        reference: String,
        #[serde(default)]
        roi: RoiName,
    },
    Composite {},
}

impl Step {
    pub fn aggregation(mode: ModeName, weights: &Option<Vec<f64>>) -> AggregationMode {
        AggregationMode {
            fusion: mode.into(),
            weights: weights.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSection {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub prediction_dirs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evaluation {
    pub enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub steps: Vec<Step>,
    pub io: IoSection,
    #[serde(default)]
    pub evaluation: Evaluation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// How a histmatch reference resolves for a given case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reference {
    Method(String),
    Directory(PathBuf),
}

impl PipelineConfig {
    /// Two-model geometric-mean ensemble, Gaussian sigma 0.5, histogram match
    /// to the first prediction directory, composite. No median filter.
    pub fn default_for(io: IoSection, evaluation: Evaluation) -> Result<Self> {
        let reference = io
            .prediction_dirs
            .first()
            .map(|d| crate::layout::method_id(d))
            .transpose()?
            .ok_or_else(|| Error::Config("at least one prediction directory is required".into()))?;
        Ok(PipelineConfig {
            steps: vec![
                Step::Ensemble {
                    mode: ModeName::Geomean,
                    weights: None,
                },
                Step::Gaussian { sigma: 0.5 },
                Step::Histmatch {
                    reference,
                    roi: RoiName::Mask,
                },
                Step::Composite {},
            ],
            io,
            evaluation,
            seed: None,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.io.input_dir);
        fix(&mut self.io.output_dir);
        self.io.prediction_dirs.iter_mut().for_each(fix);
        if let Some(g) = self.evaluation.gt_dir.as_mut() {
            fix(g);
        }
        let methods = self.methods().unwrap_or_default();
        for step in &mut self.steps {
            if let Step::Histmatch { reference, .. } = step {
                if !methods.contains(reference) && Path::new(reference).is_relative() {
                    *reference = base.join(&*reference).to_string_lossy().into_owned();
                }
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn methods(&self) -> Result<Vec<String>> {
        method_ids(&self.io.prediction_dirs)
    }

    pub fn resolve_reference(&self, reference: &str) -> Result<Reference> {
        if self.methods()?.iter().any(|m| m == reference) {
            return Ok(Reference::Method(reference.to_string()));
        }
        let dir = PathBuf::from(reference);
        if dir.is_dir() {
            return Ok(Reference::Directory(dir));
        }
        Err(Error::Config(format!(
            "histmatch reference {reference:?} is neither a method id nor a directory"
        )))
    }

    /// Checks everything that can be checked without reading volumes.
    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::Config("steps must not be empty".into()));
        }
        let methods = self.methods().map_err(|e| Error::Config(e.to_string()))?;
        if methods.is_empty() {
            return Err(Error::Config("io.prediction_dirs must not be empty".into()));
        }
        if methods.iter().any(|m| m == crate::pipeline::PIPELINE_METHOD_ID) {
            return Err(Error::Config(format!(
                "method id {:?} is reserved for the pipeline output",
                crate::pipeline::PIPELINE_METHOD_ID
            )));
        }
        for step in &self.steps {
            match step {
                Step::Ensemble { weights, .. } => {
                    if methods.len() < 2 {
                        return Err(Error::Config("ensemble needs at least two prediction directories".into()));
                    }
                    if let Some(w) = weights {
                        if w.len() != methods.len() {
                            return Err(Error::Config(format!(
                                "ensemble has {} weights for {} prediction directories",
                                w.len(),
                                methods.len()
                            )));
                        }
                    }
                }
                Step::Median { k } => {
                    if k % 2 == 0 {
                        return Err(Error::Config(format!("median k must be odd, got {k}")));
                    }
                }
                Step::Gaussian { sigma } => {
                    if !(sigma.is_finite() && *sigma >= 0.0) {
                        return Err(Error::Config(format!("gaussian sigma must be >= 0, got {sigma}")));
                    }
                }
                Step::Histmatch { reference, .. } => {
                    self.resolve_reference(reference)?;
                }
                Step::Composite {} => {}
            }
        }
        if self.evaluation.enabled && self.evaluation.gt_dir.is_none() {
            return Err(Error::Config("evaluation.enabled requires evaluation.gt_dir".into()));
        }
        Ok(())
    }
}
