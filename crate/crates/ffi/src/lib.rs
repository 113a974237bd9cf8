//! C ABI for hazlab.
//!
//! A project lives behind an opaque `HazlabProject` handle. Every call returns
//! a `HazlabStatus`; on failure `hazlab_last_error_message` describes the
//! error for the calling thread. Strings returned through `out` parameters are
//! owned by the caller and must be released with `hazlab_string_free`.
//! Structured results are JSON documents using the same shapes as the HTTP API.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hazlab::generate::{compare_strategies, GenerateError, Strategy};
use hazlab::hazlang::{check_sources, SourceFile};
use hazlab::review::{
    export_worksheet, summary_report, DecisionCommand, NewHazard, ProjectStore, ReviewError,
    StoreError, WorksheetFormat,
};
use serde::Serialize;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HazlabStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    NotFound = 4,
    VersionConflict = 5,
    RuleViolation = 6,
    MalformedInput = 7,
    InvalidModel = 8,
    Io = 9,
    Panic = 10,
}

/// Opaque project handle. Safe to share between threads.
pub struct HazlabProject {
    store: ProjectStore,
}

struct Failure {
    status: HazlabStatus,
    message: String,
}

impl Failure {
    fn new(status: HazlabStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<ReviewError> for Failure {
    fn from(e: ReviewError) -> Self {
        let status = match &e {
            ReviewError::NotFound { .. } => HazlabStatus::NotFound,
            ReviewError::VersionConflict { .. } => HazlabStatus::VersionConflict,
            ReviewError::EmptyLeg(_)
            | ReviewError::InvalidId(_)
            | ReviewError::Duplicate { .. } => HazlabStatus::InvalidArgument,
            ReviewError::IllegalTransition { .. }
            | ReviewError::RationaleRequired
            | ReviewError::NotHazardous { .. }
            | ReviewError::Generate(_) => HazlabStatus::RuleViolation,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<GenerateError> for Failure {
    fn from(e: GenerateError) -> Self {
        Failure::new(HazlabStatus::RuleViolation, e.to_string())
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Review(e) => e.into(),
            StoreError::Import(e) => {
                let lines: Vec<String> = e.0.iter().map(ToString::to_string).collect();
                Failure::new(HazlabStatus::MalformedInput, lines.join("\n"))
            }
            StoreError::Io { .. } => Failure::new(HazlabStatus::Io, e.to_string()),
            StoreError::Parse { .. } | StoreError::Schema(_) => {
                Failure::new(HazlabStatus::MalformedInput, e.to_string())
            }
            StoreError::Invalid(_) => Failure::new(HazlabStatus::InvalidModel, e.to_string()),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HazlabStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HazlabStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("internal error");
            HazlabStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(
            HazlabStatus::NullArgument,
            format!("{name} is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(HazlabStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn project<'a>(p: *const HazlabProject) -> Result<&'a HazlabProject, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(HazlabStatus::NullArgument, "project is null"))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(HazlabStatus::NullArgument, "out is null"));
    }
    let c = CString::new(s)
        .map_err(|_| Failure::new(HazlabStatus::InvalidArgument, "result contains NUL"))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn write_json(out: *mut *mut c_char, value: &impl Serialize) -> Result<(), Failure> {
    let s = serde_json::to_string(value)
        .map_err(|e| Failure::new(HazlabStatus::InvalidArgument, e.to_string()))?;
    write_string(out, s)
}

unsafe fn check_out<T>(out: *mut *mut T) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure::new(HazlabStatus::NullArgument, "out is null"))
    } else {
        *out = ptr::null_mut();
        Ok(())
    }
}

unsafe fn into_handle(out: *mut *mut HazlabProject, store: ProjectStore) {
    *out = Box::into_raw(Box::new(HazlabProject { store }));
}

fn parse_json<'a, T: serde::Deserialize<'a>>(s: &'a str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(s)
        .map_err(|e| Failure::new(HazlabStatus::MalformedInput, format!("{what}: {e}")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hazlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn hazlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hazlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Opens a project file. Decisions are persisted to it on every change.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hazlab_project_open(
    path: *const c_char,
    out: *mut *mut HazlabProject,
) -> HazlabStatus {
    guard(|| {
        check_out(out)?;
        let path = str_arg(path, "path")?;
        into_handle(out, ProjectStore::open(path)?);
        Ok(())
    })
}

/// Builds an in-memory project from HazLang source. On model errors returns
/// `InvalidModel` and the last error lists the findings.
///
/// # Safety
/// `source` and `name` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hazlab_project_from_hzl(
    source: *const c_char,
    name: *const c_char,
    out: *mut *mut HazlabProject,
) -> HazlabStatus {
    guard(|| {
        check_out(out)?;
        let source = str_arg(source, "source")?;
        let name = str_arg(name, "name")?;
        let outcome = check_sources(&[SourceFile::new(format!("{name}.hzl"), source)], name);
        match outcome.project {
            Some(p) => {
                into_handle(out, ProjectStore::in_memory(p));
                Ok(())
            }
            None => {
                let lines: Vec<String> = outcome
                    .findings
                    .iter()
                    .filter(|f| f.is_error())
                    .map(ToString::to_string)
                    .collect();
                Err(Failure::new(HazlabStatus::InvalidModel, lines.join("\n")))
            }
        }
    })
}

/// Releases a project handle. NULL is ignored.
///
/// # Safety
/// `project` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hazlab_project_free(project: *mut HazlabProject) {
    if !project.is_null() {
        drop(Box::from_raw(project));
    }
}

/// Writes the project to `path` and keeps persisting there.
///
/// # Safety
/// `project` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hazlab_project_save(
    project: *const HazlabProject,
    path: *const c_char,
) -> HazlabStatus {
    guard(|| {
        let p = self::project(project)?;
        p.store.save_as(str_arg(path, "path")?)?;
        Ok(())
    })
}

/// Full project document as JSON.
///
/// # Safety
/// `project` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hazlab_project_json(
    project: *const HazlabProject,
    out: *mut *mut c_char,
) -> HazlabStatus {
    guard(|| {
        check_out(out)?;
        write_string(out, self::project(project)?.store.snapshot().to_json())
    })
}

/// Runs generation. `strategy` is "deviation", "malfunction" or "both";
/// `catalog` may be NULL to use every catalog. Writes the generation summary.
///
/// # Safety
/// `project` must be a live handle, `strategy` a NUL-terminated string,
/// `catalog` NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hazlab_project_generate(
    project: *const HazlabProject,
    strategy: *const c_char,
    catalog: *const c_char,
    out: *mut *mut c_char,
) -> HazlabStatus {
    guard(|| {
        check_out(out)?;
        let p = self::project(project)?;
        let name = str_arg(strategy, "strategy")?;
        let strategy = Strategy::parse(name).ok_or_else(|| {
            Failure::new(
                HazlabStatus::InvalidArgument,
                format!("unknown strategy `{name}`"),
            )
        })?;
        let summary = p
            .store
            .generate(strategy, opt_str_arg(catalog, "catalog")?)?;
        write_json(out, &summary)
    })
}

/// Comparison report for one catalog. `catalog` may be NULL when the project
/// has exactly one.
///
/// # Safety
/// `project` must be a live handle, `catalog` NULL or NUL-terminated; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn hazlab_project_compare_json(
    project: *const HazlabProject,
    catalog: *const c_char,
    out: *mut *mut c_char,
) -> HazlabStatus {
    guard(|| {
        check_out(out)?;
        let snap = self::project(project)?.store.snapshot();
        let c = match opt_str_arg(catalog, "catalog")? {
            Some(key) => snap.catalog(key).ok_or(ReviewError::NotFound {
                kind: "catalog",
                id: key.to_owned(),
            })?,
            None => match snap.catalogs.as_slice() {
                [only] => only,
                [] => {
                    return Err(Failure::new(
                        HazlabStatus::NotFound,
                        "project has no catalog",
                    ))
                }
                _ => {
                    return Err(Failure::new(
                        HazlabStatus::InvalidArgument,
                        "several catalogs, select one",
                    ))
                }
            },
        };
        write_json(out, &compare_strategies(&snap, c)?)
    })
}

/// Records a decision. `command_json` has the fields `phs`, `new_status`,
/// `rationale`, `reviewer` and `expected_version`. Writes the new review state.
///
/// # Safety
/// `project` must be a live handle, `command_json` NUL-terminated; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn hazlab_project_record_decision(
    project: *const HazlabProject,
    command_json: *const c_char,
    out: *mut *mut c_char,
) -> HazlabStatus {
    guard(|| {
        check_out(out)?;
        let p = self::project(project)?;
        let cmd: DecisionCommand = parse_json(str_arg(command_json, "command_json")?, "decision")?;
        write_json(out, &p.store.record_decision(&cmd)?)
    })
}

/// Creates a hazard on a hazardous PHS. Writes the created hazard.
///
/// # Safety
/// `project` must be a live handle, `hazard_json` NUL-terminated; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn hazlab_project_create_hazard(
    project: *const HazlabProject,
    hazard_json: *const c_char,
    out: *mut *mut c_char,
) -> HazlabStatus {
    guard(|| {
        check_out(out)?;
        let p = self::project(project)?;
        let new: NewHazard = parse_json(str_arg(hazard_json, "hazard_json")?, "hazard")?;
        write_json(out, &p.store.create_hazard(&new)?)
    })
}

/// Links a hazard to the malfunctions that map to its deviation. Writes the
/// trace links.
///
/// # Safety
/// `project` must be a live handle, `hazard` NUL-terminated, `catalog` NULL
/// or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hazlab_project_trace(
    project: *const HazlabProject,
    hazard: *const c_char,
    catalog: *const c_char,
    out: *mut *mut c_char,
) -> HazlabStatus {
    guard(|| {
        check_out(out)?;
        let p = self::project(project)?;
        let links = p
            .store
            .trace(str_arg(hazard, "hazard")?, opt_str_arg(catalog, "catalog")?)?;
        write_json(out, &links)
    })
}

fn worksheet_format(s: &str) -> Result<WorksheetFormat, Failure> {
    WorksheetFormat::parse(s).ok_or_else(|| {
        Failure::new(
            HazlabStatus::InvalidArgument,
            format!("unknown format `{s}`"),
        )
    })
}

/// Exports the worksheet as "csv" or "json".
///
/// # Safety
/// `project` must be a live handle, `format` NUL-terminated; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn hazlab_project_export(
    project: *const HazlabProject,
    format: *const c_char,
    out: *mut *mut c_char,
) -> HazlabStatus {
    guard(|| {
        check_out(out)?;
        let p = self::project(project)?;
        let format = worksheet_format(str_arg(format, "format")?)?;
        write_string(out, export_worksheet(&p.store.snapshot(), format))
    })
}

/// Imports an edited worksheet. `format` may be NULL to detect it. A malformed
/// document changes nothing and returns `MalformedInput`. Writes
/// `{"applied": n, "warnings": [...]}`.
///
/// # Safety
/// `project` must be a live handle, `doc` and `reviewer` NUL-terminated,
/// `format` NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hazlab_project_import(
    project: *const HazlabProject,
    doc: *const c_char,
    format: *const c_char,
    reviewer: *const c_char,
    out: *mut *mut c_char,
) -> HazlabStatus {
    guard(|| {
        check_out(out)?;
        let p = self::project(project)?;
        let doc = str_arg(doc, "doc")?;
        let format = match opt_str_arg(format, "format")? {
            Some(f) => worksheet_format(f)?,
            None => WorksheetFormat::sniff(doc),
        };
        let outcome = p.store.import(
            doc,
            format,
            opt_str_arg(reviewer, "reviewer")?.unwrap_or(""),
        )?;
        write_json(out, &outcome)
    })
}

/// Summary report as JSON.
///
/// # Safety
/// `project` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hazlab_project_summary_json(
    project: *const HazlabProject,
    out: *mut *mut c_char,
) -> HazlabStatus {
    guard(|| {
        check_out(out)?;
        write_json(
            out,
            &summary_report(&self::project(project)?.store.snapshot()),
        )
    })
}

/// Checks HazLang source without building a project. Writes the findings as a
/// JSON array and returns `InvalidModel` when any of them is an error.
///
/// # Safety
/// `path` and `source` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hazlab_check_source(
    path: *const c_char,
    source: *const c_char,
    out: *mut *mut c_char,
) -> HazlabStatus {
    guard(|| {
        check_out(out)?;
        let path = str_arg(path, "path")?;
        let outcome = check_sources(
            &[SourceFile::new(path, str_arg(source, "source")?)],
            "check",
        );
        write_json(out, &outcome.findings)?;
        match outcome.findings.iter().find(|f| f.is_error()) {
            Some(f) => Err(Failure::new(HazlabStatus::InvalidModel, f.to_string())),
            None => Ok(()),
        }
    })
}
