//! Expert triage of generated PHS: decisions, hazards, a-posteriori
//! traceability to malfunctions, worksheets and the project store.

mod report;
mod store;
mod worksheet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::generate::GenerateError;
use crate::model::{
    DecisionRecord, Derivation, EmptyLeg, Hazard, Ident, Project, ReviewState, ReviewStatus,
    TargetKind, TraceLink,
};

pub use report::{summary_report, ScenarioSummary, StatusCounts, SummaryReport};
pub use store::{FaultPoint, ProjectStore, StoreError};
pub use worksheet::{
    export_worksheet, import_decisions, ImportDiagnostic, ImportError, ImportOutcome,
    WorksheetFormat, WorksheetRow, CSV_HEADER,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReviewError {
    #[error("unknown {kind} `{id}`")]
    NotFound { kind: &'static str, id: String },
    #[error("version conflict: expected {expected}, current is {}", .current.version)]
    VersionConflict { expected: u64, current: ReviewState },
    #[error("illegal transition {from} -> {to}: {rule}")]
    IllegalTransition {
        from: ReviewStatus,
        to: ReviewStatus,
        rule: &'static str,
    },
    #[error("rationale required to mark a PHS not_hazardous")]
    RationaleRequired,
    #[error("PHS `{phs}` is {status}, hazards can only be created for hazardous scenarios")]
    NotHazardous { phs: Ident, status: ReviewStatus },
    #[error(transparent)]
    EmptyLeg(#[from] EmptyLeg),
    #[error("{kind} `{id}` already exists")]
    Duplicate { kind: &'static str, id: String },
    #[error("invalid identifier `{0}`")]
    InvalidId(String),
    #[error(transparent)]
    Generate(#[from] GenerateError),
}

/// The two verdicts an expert can give.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NotHazardous,
    Hazardous,
}

impl From<Verdict> for ReviewStatus {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::NotHazardous => ReviewStatus::NotHazardous,
            Verdict::Hazardous => ReviewStatus::Hazardous,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionCommand {
    pub phs: Ident,
    pub new_status: Verdict,
    #[serde(default)]
    pub rationale: String,
    #[serde(default)]
    pub reviewer: String,
    pub expected_version: u64,
}

/// Records a verdict on a PHS under optimistic concurrency.
///
/// Legal: generated -> either verdict, re-triage between the verdicts, and
/// repeating a verdict to amend its rationale. Leaving `hazardous` requires
/// that no hazard is still linked.
pub fn record_decision(
    project: &mut Project,
    cmd: &DecisionCommand,
    clock: &dyn Clock,
) -> Result<ReviewState, ReviewError> {
    apply_decision(
        project,
        &cmd.phs,
        cmd.new_status,
        &cmd.rationale,
        &cmd.reviewer,
        Some(cmd.expected_version),
        clock,
    )
}

pub(crate) fn apply_decision(
    project: &mut Project,
    phs_id: &Ident,
    verdict: Verdict,
    rationale: &str,
    reviewer: &str,
    expected_version: Option<u64>,
    clock: &dyn Clock,
) -> Result<ReviewState, ReviewError> {
    let linked = project.hazards_of(phs_id.as_str()).count();
    let phs = project
        .phs_mut(phs_id.as_str())
        .ok_or_else(|| ReviewError::NotFound {
            kind: "PHS",
            id: phs_id.to_string(),
        })?;
    if let Some(expected) = expected_version {
        if expected != phs.review.version {
            return Err(ReviewError::VersionConflict {
                expected,
                current: phs.review.clone(),
            });
        }
    }
    let from = phs.review.status;
    let to = ReviewStatus::from(verdict);
    if from == ReviewStatus::Hazardous && to == ReviewStatus::NotHazardous && linked > 0 {
        return Err(ReviewError::IllegalTransition {
            from,
            to,
            rule: "hazards still linked",
        });
    }
    let rationale = rationale.trim();
    if to == ReviewStatus::NotHazardous && rationale.is_empty() {
        return Err(ReviewError::RationaleRequired);
    }
    let at = clock.now();
    phs.review = ReviewState {
        status: to,
        rationale: rationale.to_owned(),
        reviewer: reviewer.trim().to_owned(),
        decided_at: Some(at),
        version: phs.review.version + 1,
    };
    let state = phs.review.clone();
    project.decision_log.push(DecisionRecord {
        phs: phs_id.clone(),
        from,
        to,
        rationale: state.rationale.clone(),
        reviewer: state.reviewer.clone(),
        at,
        version: state.version,
    });
    Ok(state)
}

/// Payload for [`create_hazard`]. The id is generated when absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewHazard {
    #[serde(default)]
    pub id: Option<String>,
    pub phs: String,
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub target: String,
    #[serde(default)]
    pub initiating_mechanism: String,
    #[serde(default)]
    pub description: String,
    pub target_kind: TargetKind,
}

fn next_hazard_id(project: &Project) -> Ident {
    let mut n = project.hazards.len() + 1;
    loop {
        let id = Ident::new(format!("hz_{n:03}")).expect("generated id");
        if project.hazard(id.as_str()).is_none() {
            return id;
        }
        n += 1;
    }
}

/// Documents a hazard on a hazardous PHS. Every leg of the
/// source/target/initiating-mechanism triple must be non-empty.
pub fn create_hazard(project: &mut Project, new: &NewHazard) -> Result<Hazard, ReviewError> {
    let phs = project.phs(&new.phs).ok_or_else(|| ReviewError::NotFound {
        kind: "PHS",
        id: new.phs.clone(),
    })?;
    let id = match &new.id {
        Some(id) if !id.is_empty() => {
            Ident::new(id.clone()).map_err(|e| ReviewError::InvalidId(e.0))?
        }
        _ => next_hazard_id(project),
    };
    let hazard = Hazard::new(
        id,
        phs.id.clone(),
        &new.source,
        &new.target,
        &new.initiating_mechanism,
        &new.description,
        new.target_kind,
    )?;
    if phs.review.status != ReviewStatus::Hazardous {
        return Err(ReviewError::NotHazardous {
            phs: phs.id.clone(),
            status: phs.review.status,
        });
    }
    if project.hazard(hazard.id.as_str()).is_some() {
        return Err(ReviewError::Duplicate {
            kind: "hazard",
            id: hazard.id.to_string(),
        });
    }
    project.hazards.push(hazard.clone());
    Ok(hazard)
}

/// Removes a hazard and its trace links, e.g. before re-triaging its PHS.
pub fn remove_hazard(project: &mut Project, id: &str) -> Result<Hazard, ReviewError> {
    let pos = project
        .hazards
        .iter()
        .position(|h| h.id == id)
        .ok_or_else(|| ReviewError::NotFound {
            kind: "hazard",
            id: id.to_owned(),
        })?;
    project.traces.retain(|t| t.hazard != id);
    Ok(project.hazards.remove(pos))
}

/// Links a hazard to every malfunction m with g(m) equal to the hazard's
/// deviation (g⁻¹ of that class), in catalog order. `catalog` restricts the
/// search to one catalog. Idempotent; returns the hazard's links in scope.
pub fn trace_malfunctions(
    project: &mut Project,
    hazard_id: &str,
    catalog: Option<&str>,
) -> Result<Vec<TraceLink>, ReviewError> {
    let hazard = project
        .hazard(hazard_id)
        .ok_or_else(|| ReviewError::NotFound {
            kind: "hazard",
            id: hazard_id.to_owned(),
        })?;
    let deviation = project
        .phs(hazard.phs.as_str())
        .ok_or_else(|| ReviewError::NotFound {
            kind: "PHS",
            id: hazard.phs.to_string(),
        })?
        .deviation
        .clone();
    let catalogs: Vec<_> = match catalog {
        Some(key) => vec![project.catalog(key).ok_or_else(|| ReviewError::NotFound {
            kind: "catalog",
            id: key.to_owned(),
        })?],
        None => project.catalogs.iter().collect(),
    };
    let links: Vec<TraceLink> = catalogs
        .iter()
        .flat_map(|c| c.malfunctions())
        .filter(|m| m.maps_to.as_ref() == Some(&deviation))
        .map(|m| TraceLink {
            hazard: hazard.id.clone(),
            malfunction: m.id.clone(),
            derivation: Derivation::GInverse,
        })
        .collect();
    for link in &links {
        if !project.traces.contains(link) {
            project.traces.push(link.clone());
        }
    }
    Ok(links)
}
