use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use voxpost::config::{ModeName, PipelineConfig, RoiName, Step};
use voxpost::nifti::{read_mask, read_volume, wants_gzip, write_volume};
use voxpost::pipeline::{run_pipeline, RunOptions};
use voxpost::{dataset, ranks, report, Error, Result};
use voxpost_core::{
    composite, ensemble, ensemble_masked, evaluate_case, histogram_match, rank_methods,
    DegradeSpec, FilterSpec, Mask, SsimParams, Volume,
};

#[derive(Parser)]
#[command(name = "voxpost", version, about = "Post-processing for inpainted MRI volumes")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Fail on incomplete cases instead of skipping them.
    #[arg(long, global = true)]
    strict: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a pipeline config over a dataset.
    Run {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
    /// Voxel-wise fusion of several predictions.
    Ensemble {
        #[arg(long, required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "mean")]
        mode: ModeName,
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[command(flatten)]
        region: Region,
    },
    /// Median and/or Gaussian filtering.
    Filter {
        #[arg(long, value_name = "PATH")]
        inputs: PathBuf,
        #[arg(long, value_name = "K")]
        median_k: Option<usize>,
        #[arg(long, value_name = "S", default_value_t = 0.0)]
        gaussian_sigma: f64,
        #[command(flatten)]
        region: Region,
    },
    /// Match the intensity distribution of a volume to a reference.
    Histmatch {
        #[arg(long, value_name = "PATH")]
        inputs: PathBuf,
        #[arg(long = "ref", value_name = "PATH")]
        reference: PathBuf,
        #[arg(long, value_enum, default_value = "mask")]
        roi: RoiName,
        #[arg(long, value_name = "PATH")]
        mask: Option<PathBuf>,
    },
    /// Prediction inside the mask, voided scan outside.
    Composite {
        #[arg(long, value_name = "PATH")]
        pred: PathBuf,
        #[arg(long, value_name = "PATH")]
        voided: PathBuf,
        #[arg(long, value_name = "PATH")]
        mask: PathBuf,
    },
    /// Score one prediction against its ground truth.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        pred: PathBuf,
        #[arg(long, value_name = "PATH")]
        gt: PathBuf,
        #[arg(long, value_name = "PATH")]
        mask: PathBuf,
        #[arg(long)]
        case_id: Option<String>,
        #[arg(long)]
        method_id: Option<String>,
    },
    /// Rank methods from metric reports.
    Rank {
        #[arg(long, required = true, num_args = 1.., value_name = "PATH")]
        reports: Vec<PathBuf>,
    },
    /// Build a degraded training set from healthy scans.
    Degrade {
        #[arg(long, value_name = "DIR")]
        inputs: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        sigma_min: f64,
        #[arg(long, default_value_t = 1.5)]
        sigma_max: f64,
        #[arg(long, default_value_t = 1)]
        draws: usize,
    },
}

/// Restrict the operation to a mask, keeping `--voided` outside it.
#[derive(Args)]
struct Region {
    #[arg(long, value_name = "PATH", requires = "voided")]
    mask: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "mask")]
    voided: Option<PathBuf>,
}

impl Region {
    fn load(&self) -> Result<Option<(Mask, Volume)>> {
        match (&self.mask, &self.voided) {
            (Some(m), Some(v)) => Ok(Some((read_mask(m)?, read_volume(v)?))),
            _ => Ok(None),
        }
    }
}

fn out_path(out: &Option<PathBuf>) -> Result<&Path> {
    out.as_deref()
        .ok_or_else(|| Error::Usage("--out is required for this subcommand".into()))
}

fn save(v: &Volume, out: &Option<PathBuf>) -> Result<()> {
    let path = out_path(out)?;
    write_volume(v, path, wants_gzip(path))
}

/// Writes to `--out` when given, stdout otherwise.
fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|source| Error::Io {
            path: p.clone(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn nifti_stem(p: &Path) -> String {
    let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.trim_end_matches(".gz").trim_end_matches(".nii").to_string()
}

fn execute(cli: Cli) -> Result<()> {
    let opts = RunOptions {
        jobs: cli.jobs,
        strict: cli.strict,
    };
    match cli.cmd {
        Cmd::Run { config } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(out) = cli.out {
                cfg.io.output_dir = out;
            }
            if cli.seed.is_some() {
                cfg.seed = cli.seed;
            }
            let summary = run_pipeline(&cfg, opts)?;
            log::info!(
                "{} cases written, {} skipped",
                summary.cases.len(),
                summary.skipped.len()
            );
        }
        Cmd::Ensemble {
            inputs,
            mode,
            weights,
            region,
        } => {
            if inputs.len() < 2 {
                return Err(Error::Usage("--inputs needs at least two volumes".into()));
            }
            if let Some(w) = &weights {
                if w.len() != inputs.len() {
                    return Err(Error::Usage(format!(
                        "--weights has {} values for {} --inputs",
                        w.len(),
                        inputs.len()
                    )));
                }
            }
            let mode = Step::aggregation(mode, &weights);
            let vols = inputs.iter().map(read_volume).collect::<Result<Vec<_>>>()?;
            let fused = match region.load()? {
                Some((m, base)) => ensemble_masked(&vols, &mode, &m, &base)?,
                None => ensemble(&vols, &mode)?,
            };
            save(&fused, &cli.out)?;
        }
        Cmd::Filter {
            inputs,
            median_k,
            gaussian_sigma,
            region,
        } => {
            let spec = FilterSpec {
                median_kernel: median_k,
                gaussian_sigma,
            };
            let v = read_volume(&inputs)?;
            let filtered = match region.load()? {
                Some((m, base)) => voxpost_core::apply_masked(&v, &base, &m, |x| spec.apply(x))?,
                None => spec.apply(&v)?,
            };
            save(&filtered, &cli.out)?;
        }
        Cmd::Histmatch {
            inputs,
            reference,
            roi,
            mask,
        } => {
            if roi == RoiName::Mask && mask.is_none() {
                return Err(Error::Usage("--roi mask requires --mask".into()));
            }
            let src = read_volume(&inputs)?;
            let r = read_volume(&reference)?;
            let m = mask.as_ref().map(read_mask).transpose()?;
            let hm = histogram_match(&src, &r, m.as_ref(), roi.into())?;
            if hm.degenerate {
                log::warn!("constant source region, filled with reference median");
            }
            save(&hm.volume, &cli.out)?;
        }
        Cmd::Composite { pred, voided, mask } => {
            let out = composite(&read_volume(pred)?, &read_volume(voided)?, &read_mask(mask)?)?;
            save(&out, &cli.out)?;
        }
        Cmd::Evaluate {
            pred,
            gt,
            mask,
            case_id,
            method_id,
        } => {
            let case_id = case_id.unwrap_or_else(|| nifti_stem(&pred));
            let method_id = method_id.unwrap_or_else(|| {
                pred.parent()
                    .and_then(|d| d.file_name())
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "prediction".into())
            });
            let r = evaluate_case(
                &case_id,
                &method_id,
                &read_volume(&pred)?,
                &read_volume(&gt)?,
                &read_mask(&mask)?,
                &SsimParams::default(),
            )?;
            emit(&(report::to_json(&r) + "\n"), &cli.out)?;
        }
        Cmd::Rank { reports } => {
            let mut all = Vec::new();
            for p in &reports {
                all.extend(report::read_reports(p)?);
            }
            let table = rank_methods(&all)?;
            emit(&ranks::to_csv(&table)?, &cli.out)?;
        }
        Cmd::Degrade {
            inputs,
            sigma_min,
            sigma_max,
            draws,
        } => {
            let spec = DegradeSpec {
                sigma_min,
                sigma_max,
                seed: cli.seed.unwrap_or(0),
                per_case_draws: draws,
            };
            let out = out_path(&cli.out)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cli.jobs)
                .build()
                .map_err(|e| Error::Internal(e.to_string()))?;
            let manifest = pool.install(|| dataset::degrade_dataset(&inputs, out, &spec))?;
            log::info!("{} degraded volumes written", manifest.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VOXPOST_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("voxpost: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
