//! Batch evaluation: segment each case once, compare against its ground
//! truths, and collect per-case rows for [`crate::report::aggregate`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::growcut::{self, GrowCutError, GrowCutParams, StrokeSet};
use crate::metrics::{self, MetricError};
use crate::nrrd::{self, NrrdError, NrrdGrid};
use crate::report::{PairwiseRow, ALGORITHM};
use crate::volume::LabelGrid;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Nrrd {
        path: PathBuf,
        #[source]
        source: NrrdError,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    GrowCut(#[from] GrowCutError),
    #[error("{pairing}: {source}")]
    Metric {
        pairing: String,
        #[source]
        source: MetricError,
    },
    #[error("rater label '{0}' is duplicated or reserved")]
    BadRaterLabel(String),
}

impl PipelineError {
    /// Short machine-readable kind, used in CLI error output.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Io { .. } => "Io",
            PipelineError::Nrrd { .. } => "Nrrd",
            PipelineError::Json { .. } => "Json",
            PipelineError::GrowCut(GrowCutError::ConflictingSeed(_)) => "ConflictingSeed",
            PipelineError::GrowCut(GrowCutError::EmptyForeground) => "EmptyForeground",
            PipelineError::GrowCut(_) => "GrowCut",
            PipelineError::Metric { .. } => "Metric",
            PipelineError::BadRaterLabel(_) => "BadRaterLabel",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSpec {
    pub rater: String,
    pub mask: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub id: String,
    pub volume: PathBuf,
    pub seeds: PathBuf,
    #[serde(default)]
    pub ground_truths: Vec<GroundTruthSpec>,
    /// Optional user-reported interaction times (minutes) keyed by source
    /// label, e.g. `{"A": 36, "alg": 1}`.
    #[serde(default)]
    pub interaction_minutes: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub cases: Vec<CaseSpec>,
}

fn read(path: &Path) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl Manifest {
    /// Loads a manifest; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let mut manifest: Manifest =
            serde_json::from_slice(&read(path)?).map_err(|source| PipelineError::Json {
                path: path.to_path_buf(),
                source,
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for case in &mut manifest.cases {
            case.volume = base.join(&case.volume);
            case.seeds = base.join(&case.seeds);
            for gt in &mut case.ground_truths {
                gt.mask = base.join(&gt.mask);
            }
        }
        Ok(manifest)
    }
}

/// Outcome of one case.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRun {
    pub case_id: String,
    pub rows: Vec<PairwiseRow>,
    pub iterations: usize,
    pub converged: bool,
    pub segment_seconds: f64,
    pub elapsed_seconds: f64,
    pub mask_path: Option<PathBuf>,
}

fn load_mask(path: &Path) -> Result<LabelGrid, PipelineError> {
    nrrd::parse_nrrd(&read(path)?)
        .and_then(NrrdGrid::into_labels)
        .map_err(|source| PipelineError::Nrrd {
            path: path.to_path_buf(),
            source,
        })
}

/// Segments one case and compares every mask pair. The timed span covers
/// loading the inputs, segmenting, and writing the mask (to `mask_dir`
/// when given, otherwise to an in-memory buffer).
pub fn run_case(
    spec: &CaseSpec,
    params: &GrowCutParams,
    mask_dir: Option<&Path>,
) -> Result<CaseRun, PipelineError> {
    let mut seen = Vec::new();
    for gt in &spec.ground_truths {
        if gt.rater == ALGORITHM || gt.rater.contains(':') || seen.contains(&gt.rater) {
            return Err(PipelineError::BadRaterLabel(gt.rater.clone()));
        }
        seen.push(gt.rater.clone());
    }

    let started = Instant::now();
    let volume = nrrd::parse_nrrd(&read(&spec.volume)?)
        .and_then(NrrdGrid::into_volume)
        .map_err(|source| PipelineError::Nrrd {
            path: spec.volume.clone(),
            source,
        })?;
    let strokes: StrokeSet =
        serde_json::from_slice(&read(&spec.seeds)?).map_err(|source| PipelineError::Json {
            path: spec.seeds.clone(),
            source,
        })?;
    let seeds = growcut::strokes_to_seeds(&strokes.strokes, volume.dims())?;
    let seg = growcut::segment(&volume, &seeds, params)?;
    let mask_bytes = nrrd::write_labels(&seg.mask);
    let mask_path = match mask_dir {
        Some(dir) => {
            let path = dir.join(format!("{}.nrrd", spec.id));
            std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(&path, &mask_bytes))
                .map_err(|source| PipelineError::Io {
                    path: path.clone(),
                    source,
                })?;
            Some(path)
        }
        None => None,
    };
    drop(mask_bytes);
    let elapsed_seconds = started.elapsed().as_secs_f64();

    let truths = spec
        .ground_truths
        .iter()
        .map(|gt| Ok((gt.rater.clone(), load_mask(&gt.mask)?)))
        .collect::<Result<Vec<_>, PipelineError>>()?;

    let minutes = |label: &str| spec.interaction_minutes.get(label).copied();
    let make_row = |first: &str, a: &LabelGrid, second: &str, b: &LabelGrid, timed: bool| -> Result<PairwiseRow, PipelineError> {
        let m = metrics::compare(a, b, elapsed_seconds).map_err(|source| PipelineError::Metric {
            pairing: format!("{first}:{second}"),
            source,
        })?;
        Ok(PairwiseRow {
            case_id: spec.id.clone(),
            first: first.to_string(),
            second: second.to_string(),
            dsc: m.dsc,
            hd: m.hd,
            volume_first_mm3: m.volume_a_mm3,
            volume_second_mm3: m.volume_b_mm3,
            voxels_first: m.voxels_a,
            voxels_second: m.voxels_b,
            elapsed_seconds: timed.then_some(elapsed_seconds),
            segment_seconds: timed.then_some(seg.elapsed_seconds),
            minutes_first: minutes(first),
            minutes_second: minutes(second),
        })
    };

    let mut rows = Vec::new();
    for (i, (ra, ma)) in truths.iter().enumerate() {
        for (rb, mb) in &truths[i + 1..] {
            rows.push(make_row(ra, ma, rb, mb, false)?);
        }
    }
    for (r, m) in &truths {
        rows.push(make_row(r, m, ALGORITHM, &seg.mask, true)?);
    }

    Ok(CaseRun {
        case_id: spec.id.clone(),
        rows,
        iterations: seg.iterations,
        converged: seg.converged,
        segment_seconds: seg.elapsed_seconds,
        elapsed_seconds,
        mask_path,
    })
}

#[derive(Debug, Error)]
#[error("case '{case_id}' failed: {source}")]
pub struct BatchError {
    pub case_id: String,
    #[source]
    pub source: PipelineError,
    /// Cases that finished before the failure, in manifest order.
    pub completed: Vec<CaseRun>,
}

/// Runs every case with up to `workers` concurrent cases. The first
/// failure stops new cases from starting.
pub fn run_batch(
    manifest: &Manifest,
    params: &GrowCutParams,
    mask_dir: Option<&Path>,
    workers: usize,
) -> Result<Vec<CaseRun>, BatchError> {
    let abort = AtomicBool::new(false);
    let run_one = |spec: &CaseSpec| -> Option<Result<CaseRun, (String, PipelineError)>> {
        if abort.load(Ordering::SeqCst) {
            return None;
        }
        let out = run_case(spec, params, mask_dir).map_err(|e| (spec.id.clone(), e));
        if out.is_err() {
            abort.store(true, Ordering::SeqCst);
        }
        Some(out)
    };

    let results: Vec<Option<Result<CaseRun, (String, PipelineError)>>> = if workers <= 1 {
        manifest.cases.iter().map(run_one).collect()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(|| manifest.cases.par_iter().map(run_one).collect()),
            Err(_) => manifest.cases.iter().map(run_one).collect(),
        }
    };

    let mut completed = Vec::new();
    let mut failure = None;
    for r in results.into_iter().flatten() {
        match r {
            Ok(run) => completed.push(run),
            Err(e) if failure.is_none() => failure = Some(e),
            Err(_) => {}
        }
    }
    match failure {
        None => Ok(completed),
        Some((case_id, source)) => Err(BatchError {
            case_id,
            source,
            completed,
        }),
    }
}
