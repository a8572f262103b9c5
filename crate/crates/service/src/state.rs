use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use segbench_core::growcut::{SeedSet, Stroke};
use segbench_core::metrics::{self, CaseMetrics};
use segbench_core::nrrd::{self, NrrdGrid};
use segbench_core::volume::{LabelGrid, VolumeGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DATA_DIR_ENV: &str = "SEG_DATA_DIR";
pub const DEFAULT_TIME_BUDGET: Duration = Duration::from_secs(120);

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("no data directory: pass --data-dir or set {DATA_DIR_ENV}")]
    NoDataDir,
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
        source: nrrd::NrrdError,
    },
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub port: u16,
    pub data_dir: PathBuf,
    /// Longest a segment request waits before answering 202.
    pub time_budget: Duration,
}

impl ServiceConfig {
    /// `--data-dir` wins over the environment.
    pub fn resolve(port: u16, data_dir: Option<PathBuf>) -> Result<Self, ConfigError> {
        let data_dir = data_dir
            .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
            .ok_or(ConfigError::NoDataDir)?;
        Ok(ServiceConfig {
            port,
            data_dir,
            time_budget: DEFAULT_TIME_BUDGET,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentOutcome {
    pub mask_id: String,
    pub iterations: usize,
    pub elapsed_seconds: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Idle,
    Running,
    Done(SegmentOutcome),
    Failed { kind: &'static str, message: String },
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub volume_id: String,
    pub seeds: SeedSet,
    pub strokes: Vec<Stroke>,
    pub mask_id: Option<String>,
    pub ground_truth: Option<Arc<LabelGrid>>,
    pub metrics: Option<CaseMetrics>,
    pub run: RunStatus,
}

impl Session {
    pub fn running(&self) -> bool {
        self.run == RunStatus::Running
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedCounts {
    pub foreground: usize,
    pub background: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionView {
    pub id: String,
    pub volume_id: String,
    pub seeds: SeedCounts,
    pub strokes: usize,
    pub mask_id: Option<String>,
    pub has_ground_truth: bool,
    pub metrics: Option<CaseMetrics>,
    pub running: bool,
}

impl From<&Session> for SessionView {
    fn from(s: &Session) -> Self {
        use segbench_core::growcut::SeedLabel;
        SessionView {
            id: s.id.clone(),
            volume_id: s.volume_id.clone(),
            seeds: SeedCounts {
                foreground: s.seeds.count(SeedLabel::Foreground),
                background: s.seeds.count(SeedLabel::Background),
            },
            strokes: s.strokes.len(),
            mask_id: s.mask_id.clone(),
            has_ground_truth: s.ground_truth.is_some(),
            metrics: s.metrics,
            running: s.running(),
        }
    }
}

/// On-disk snapshot written by `POST /sessions/{id}/save`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub volume_id: String,
    pub strokes: Vec<Stroke>,
    pub mask_id: Option<String>,
    pub metrics: Option<CaseMetrics>,
}

#[derive(Debug)]
pub struct AppState {
    pub config: ServiceConfig,
    pub volumes: BTreeMap<String, Arc<VolumeGrid>>,
    pub sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    pub masks: RwLock<HashMap<String, Arc<LabelGrid>>>,
    next_session: AtomicU64,
}

/// Content hash of the NRRD encoding; equal masks share an id.
pub fn mask_id(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

impl AppState {
    /// Loads every `short` NRRD file in the data directory into the
    /// catalog, keyed by file stem. Label files are skipped.
    pub fn load(config: ServiceConfig) -> Result<Self, ConfigError> {
        let dir = &config.data_dir;
        let io = |source| ConfigError::Io {
            path: dir.clone(),
            source,
        };
        let mut volumes = BTreeMap::new();
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "nrrd"))
            .collect();
        entries.sort();
        for path in entries {
            let grid = nrrd::read_file(&path).map_err(|source| ConfigError::Nrrd {
                path: path.clone(),
                source,
            })?;
            if let NrrdGrid::Volume(v) = grid {
                let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                volumes.insert(id, Arc::new(v));
            }
        }
        Ok(Self::with_volumes(config, volumes))
    }

    pub fn with_volumes(config: ServiceConfig, volumes: BTreeMap<String, Arc<VolumeGrid>>) -> Self {
        AppState {
            config,
            volumes,
            sessions: RwLock::new(HashMap::new()),
            masks: RwLock::new(HashMap::new()),
            next_session: AtomicU64::new(1),
        }
    }

    pub fn create_session(&self, volume_id: &str) -> Option<Arc<Mutex<Session>>> {
        let volume = self.volumes.get(volume_id)?;
        let id = self.next_session.fetch_add(1, Ordering::SeqCst).to_string();
        let session = Arc::new(Mutex::new(Session {
            id: id.clone(),
            volume_id: volume_id.to_string(),
            seeds: SeedSet::new(volume.dims()),
            strokes: Vec::new(),
            mask_id: None,
            ground_truth: None,
            metrics: None,
            run: RunStatus::Idle,
        }));
        self.sessions.write().unwrap().insert(id, session.clone());
        Some(session)
    }

    pub fn session(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions.read().unwrap().get(id).cloned()
    }

    pub fn mask(&self, id: &str) -> Option<Arc<LabelGrid>> {
        self.masks.read().unwrap().get(id).cloned()
    }

    pub fn store_mask(&self, mask: LabelGrid) -> String {
        let id = mask_id(&nrrd::write_labels(&mask));
        self.masks.write().unwrap().entry(id.clone()).or_insert_with(|| Arc::new(mask));
        id
    }

    /// Recomputes the session metrics when both a ground truth and a
    /// mask are present.
    pub fn refresh_metrics(&self, session: &mut Session, elapsed_seconds: f64) -> Result<(), metrics::MetricError> {
        session.metrics = None;
        let (Some(gt), Some(id)) = (&session.ground_truth, &session.mask_id) else {
            return Ok(());
        };
        let Some(mask) = self.mask(id) else {
            return Ok(());
        };
        session.metrics = Some(metrics::compare(gt, &mask, elapsed_seconds)?);
        Ok(())
    }

    pub fn snapshot_dir(&self) -> PathBuf {
        self.config.data_dir.join("sessions")
    }

    pub fn resolve_path(&self, path: &Path) -> PathBuf {
        self.config.data_dir.join(path)
    }
}
