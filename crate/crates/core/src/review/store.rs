use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use thiserror::Error;

use crate::clock::{Clock, SystemClock};
use crate::generate::{run_generation, GenerationSummary, Strategy};
use crate::model::{
    validate_project, Hazard, Project, ReviewState, Severity, TraceLink, ValidationDiagnostic,
    SCHEMA_VERSION,
};

use super::{
    create_hazard, import_decisions, record_decision, trace_malfunctions, DecisionCommand,
    ImportError, ImportOutcome, NewHazard, ReviewError, WorksheetFormat,
};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Review(#[from] ReviewError),
    #[error(transparent)]
    Import(#[from] ImportError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: not a project file: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    Schema(u32),
    #[error("project has {} validation error(s): {}", .0.len(), .0.first().map(|d| d.message.as_str()).unwrap_or(""))]
    Invalid(Vec<ValidationDiagnostic>),
}

/// Where a one-shot injected persistence fault fires.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultPoint {
    /// After the temporary file is written, before it replaces the project file.
    BeforeRename,
}

/// Shared project state. Writers are serialized; readers take cheap
/// snapshots. Each mutation that changes the project is committed as one
/// unit: `store_version` grows by one and, for file-backed stores, the file
/// is atomically replaced before the new state becomes visible.
pub struct ProjectStore {
    path: Option<PathBuf>,
    current: RwLock<Arc<Project>>,
    writer: Mutex<()>,
    clock: Arc<dyn Clock>,
    fault: Mutex<Option<FaultPoint>>,
}

impl std::fmt::Debug for ProjectStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectStore")
            .field("path", &self.path)
            .field("version", &self.version())
            .finish()
    }
}

fn load_project(path: &Path) -> Result<Project, StoreError> {
    let text = fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.to_owned(),
        source,
    })?;
    let raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|source| StoreError::Parse {
            path: path.to_owned(),
            source,
        })?;
    if let Some(v) = raw.get("schema_version").and_then(|v| v.as_u64()) {
        if v != u64::from(SCHEMA_VERSION) {
            return Err(StoreError::Schema(v as u32));
        }
    }
    let project: Project = serde_json::from_value(raw).map_err(|source| StoreError::Parse {
        path: path.to_owned(),
        source,
    })?;
    check(&project)?;
    Ok(project)
}

fn check(project: &Project) -> Result<(), StoreError> {
    let errors: Vec<_> = validate_project(project)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(StoreError::Invalid(errors))
    }
}

/// Writes `project` next to `path` and renames it into place.
pub(crate) fn write_atomic(
    path: &Path,
    project: &Project,
    fault: Option<FaultPoint>,
) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io {
        path: path.to_owned(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".hazproj")
        .suffix(".tmp")
        .tempfile_in(dir)
        .map_err(io_err)?;
    tmp.write_all(project.to_json().as_bytes())
        .map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    if fault == Some(FaultPoint::BeforeRename) {
        return Err(io_err(io::Error::other("injected fault before rename")));
    }
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

impl ProjectStore {
    pub fn in_memory(project: Project) -> Self {
        ProjectStore {
            path: None,
            current: RwLock::new(Arc::new(project)),
            writer: Mutex::new(()),
            clock: Arc::new(SystemClock),
            fault: Mutex::new(None),
        }
    }

    /// Loads and validates a project file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let project = load_project(path)?;
        Ok(ProjectStore {
            path: Some(path.to_owned()),
            ..ProjectStore::in_memory(project)
        })
    }

    /// Writes `project` to `path`, replacing any existing file, and opens it.
    pub fn create(path: impl AsRef<Path>, project: Project) -> Result<Self, StoreError> {
        let path = path.as_ref();
        check(&project)?;
        write_atomic(path, &project, None)?;
        Ok(ProjectStore {
            path: Some(path.to_owned()),
            ..ProjectStore::in_memory(project)
        })
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }

    /// The latest committed state. Never observes a partial mutation.
    pub fn snapshot(&self) -> Arc<Project> {
        self.current.read().clone()
    }

    pub fn version(&self) -> u64 {
        self.current.read().store_version
    }

    #[doc(hidden)]
    pub fn inject_fault(&self, point: FaultPoint) {
        *self.fault.lock() = Some(point);
    }

    /// Runs `f` on a private copy and commits it if it succeeded and changed
    /// anything. A failed `f` or a failed write leaves the store untouched.
    pub fn mutate<T, E>(
        &self,
        f: impl FnOnce(&mut Project, &dyn Clock) -> Result<T, E>,
    ) -> Result<T, StoreError>
    where
        StoreError: From<E>,
    {
        let _guard = self.writer.lock();
        let base = self.snapshot();
        let mut next = (*base).clone();
        let out = f(&mut next, self.clock.as_ref())?;
        if next == *base {
            return Ok(out);
        }
        next.store_version = base.store_version + 1;
        if let Some(path) = &self.path {
            let fault = self.fault.lock().take();
            write_atomic(path, &next, fault)?;
        }
        *self.current.write() = Arc::new(next);
        Ok(out)
    }

    pub fn record_decision(&self, cmd: &DecisionCommand) -> Result<ReviewState, StoreError> {
        self.mutate(|p, clock| record_decision(p, cmd, clock))
    }

    pub fn create_hazard(&self, new: &NewHazard) -> Result<Hazard, StoreError> {
        self.mutate(|p, _| create_hazard(p, new))
    }

    pub fn trace(&self, hazard: &str, catalog: Option<&str>) -> Result<Vec<TraceLink>, StoreError> {
        self.mutate(|p, _| trace_malfunctions(p, hazard, catalog))
    }

    pub fn import(
        &self,
        doc: &str,
        format: WorksheetFormat,
        reviewer: &str,
    ) -> Result<ImportOutcome, StoreError> {
        self.mutate(|p, clock| import_decisions(p, doc, format, reviewer, clock))
    }

    pub fn generate(
        &self,
        strategy: Strategy,
        catalog: Option<&str>,
    ) -> Result<GenerationSummary, StoreError> {
        self.mutate(|p, _| run_generation(p, strategy, catalog).map_err(ReviewError::from))
    }

    /// Writes the current state to `path` without changing the store's own path.
    pub fn save_as(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        write_atomic(path.as_ref(), &self.snapshot(), None)
    }
}
