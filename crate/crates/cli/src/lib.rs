//! `seg` command implementations.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use segbench_core::contours::{self, ContourStack};
use segbench_core::growcut::GrowCutParams;
use segbench_core::metrics;
use segbench_core::nrrd::{self, NrrdGrid};
use segbench_core::pipeline::{self, Manifest};
use segbench_core::report;
use segbench_core::volume::{Dims, Spacing};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "seg", version, about = "GrowCut segmentation workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment every case of a manifest and write the evaluation report.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Compare two binary masks and print one metrics row.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Recompute summaries and comparisons from a per-case rows table.
    Stats {
        #[arg(long)]
        rows: PathBuf,
        /// Write the full report here instead of printing the summary.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fill per-slice contours into a binary mask.
    Rasterize {
        #[arg(long)]
        contours: PathBuf,
        #[arg(long, value_parser = parse_triple::<usize>)]
        dims: [usize; 3],
        #[arg(long, value_parser = parse_triple::<f64>)]
        spacing: [f64; 3],
        #[arg(long)]
        out: PathBuf,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Volume catalog root; falls back to SEG_DATA_DIR.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

fn parse_triple<T: FromStr + Copy>(s: &str) -> Result<[T; 3], String> {
    let parts: Vec<T> = s
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| format!("bad component '{p}'")))
        .collect::<Result<_, _>>()?;
    <[T; 3]>::try_from(parts).map_err(|p| format!("expected 3 comma-separated values, got {}", p.len()))
}

/// Failure reported as `{"error": kind, "message": ...}` on stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub case_id: Option<String>,
}

impl CliError {
    fn new(kind: impl Into<String>, message: impl ToString) -> Self {
        CliError {
            kind: kind.into(),
            message: message.to_string(),
            case_id: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut v = json!({"error": self.kind, "message": self.message});
        if let Some(id) = &self.case_id {
            v["case_id"] = json!(id);
        }
        v.to_string()
    }
}

fn nrrd_err(e: nrrd::NrrdError) -> CliError {
    CliError::new("Nrrd", e)
}

fn report_err(e: report::ReportError) -> CliError {
    CliError::new("Report", e)
}

fn read(path: &PathBuf) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::new("Io", format!("{}: {e}", path.display())))
}

/// Executes one command and returns what goes to stdout.
pub fn execute(command: Command) -> Result<String, CliError> {
    match command {
        Command::Run {
            manifest,
            out,
            workers,
            max_iters,
        } => {
            let m = Manifest::load(&manifest).map_err(|e| CliError::new(e.kind(), e))?;
            let params = GrowCutParams {
                max_iterations: max_iters,
            };
            let runs = pipeline::run_batch(&m, &params, Some(&out.join("masks")), workers.max(1)).map_err(|e| CliError {
                kind: e.source.kind().to_string(),
                message: e.to_string(),
                case_id: Some(e.case_id.clone()),
            })?;
            let cases: Vec<_> = runs
                .iter()
                .map(|r| {
                    json!({
                        "case_id": r.case_id,
                        "iterations": r.iterations,
                        "converged": r.converged,
                        "elapsed_seconds": r.elapsed_seconds,
                    })
                })
                .collect();
            let rows = runs.into_iter().flat_map(|r| r.rows).collect();
            let rep = report::aggregate(rows).map_err(report_err)?;
            report::emit(&rep, &out).map_err(report_err)?;
            Ok(json!({"out": out, "cases": cases}).to_string())
        }
        Command::Compare { a, b } => {
            let ma = nrrd::read_labels(&a).map_err(nrrd_err)?;
            let mb = nrrd::read_labels(&b).map_err(nrrd_err)?;
            let m = metrics::compare(&ma, &mb, 0.0).map_err(|e| CliError::new("Metric", e))?;
            serde_json::to_string(&m).map_err(|e| CliError::new("Json", e))
        }
        Command::Stats { rows, out } => {
            let parsed = report::parse_rows_csv(&read(&rows)?).map_err(report_err)?;
            let rep = report::aggregate(parsed).map_err(report_err)?;
            match out {
                Some(dir) => {
                    report::emit(&rep, &dir).map_err(report_err)?;
                    Ok(json!({"out": dir}).to_string())
                }
                None => {
                    let mut text = report::summary_csv(&rep).map_err(report_err)?;
                    text.push(b'\n');
                    text.extend(report::comparisons_csv(&rep).map_err(report_err)?);
                    Ok(String::from_utf8_lossy(text.trim_ascii_end()).into_owned())
                }
            }
        }
        Command::Rasterize {
            contours: path,
            dims,
            spacing,
            out,
        } => {
            let stack: ContourStack = serde_json::from_slice(&read(&path)?).map_err(|e| CliError::new("Json", e))?;
            if dims.contains(&0) || spacing.iter().any(|s| !(*s > 0.0)) {
                return Err(CliError::new("BadArgument", "dims and spacing must be positive"));
            }
            let mask = contours::stack_to_mask(&stack, Dims(dims), Spacing(spacing)).map_err(|e| CliError::new("Contour", e))?;
            let voxels = mask.foreground_count();
            nrrd::save(&out, &NrrdGrid::Labels(mask)).map_err(nrrd_err)?;
            Ok(json!({"out": out, "voxels": voxels}).to_string())
        }
        Command::Serve { port, data_dir } => {
            let config = segbench_service::ServiceConfig::resolve(port, data_dir).map_err(|e| CliError::new("Config", e))?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::new("Io", e))?;
            runtime.block_on(segbench_service::serve(config)).map_err(|e| CliError::new("Io", e))?;
            Ok(String::new())
        }
    }
}
