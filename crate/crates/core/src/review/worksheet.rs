use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::model::{Hazard, Origin, Project, ReviewStatus, Severity};

use super::{apply_decision, create_hazard, NewHazard, Verdict};

pub const CSV_HEADER: &str = "phs_id,scenario,segment,deviation,origin,status,rationale,hazards";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorksheetFormat {
    Csv,
    Json,
}

impl WorksheetFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(WorksheetFormat::Csv),
            "json" => Some(WorksheetFormat::Json),
            _ => None,
        }
    }

    /// Guesses the format from a file's content.
    pub fn sniff(doc: &str) -> Self {
        match doc.trim_start().chars().next() {
            Some('[') => WorksheetFormat::Json,
            _ => WorksheetFormat::Csv,
        }
    }
}

/// One row of the JSON worksheet. The CSV worksheet has the same columns
/// with `hazards` reduced to `;`-joined hazard ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorksheetRow {
    pub phs_id: String,
    pub scenario: String,
    pub segment: String,
    pub deviation: String,
    pub origin: Origin,
    pub status: ReviewStatus,
    #[serde(default)]
    pub rationale: String,
    #[serde(default)]
    pub hazards: Vec<Hazard>,
}

fn rows(project: &Project) -> Vec<WorksheetRow> {
    project
        .phs_set
        .iter()
        .map(|p| WorksheetRow {
            phs_id: p.id.to_string(),
            scenario: project
                .scenario(p.scenario.as_str())
                .map_or_else(|| p.scenario.to_string(), |s| s.title.clone()),
            segment: p.segment.to_string(),
            deviation: p.instance_label.clone(),
            origin: p.origin,
            status: p.review.status,
            rationale: p.review.rationale.clone(),
            hazards: project.hazards_of(p.id.as_str()).cloned().collect(),
        })
        .collect()
}

fn csv_field(out: &mut String, field: &str) {
    if field.contains([',', '"', '\n', '\r']) {
        out.push('"');
        out.push_str(&field.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(field);
    }
}

/// Serializes the PHS set with decisions and hazards, in PHS order.
pub fn export_worksheet(project: &Project, format: WorksheetFormat) -> String {
    let rows = rows(project);
    match format {
        WorksheetFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
            s.push('\n');
            s
        }
        WorksheetFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in rows {
                let hazards = r
                    .hazards
                    .iter()
                    .map(|h| h.id.as_str())
                    .collect::<Vec<_>>()
                    .join(";");
                let fields = [
                    r.phs_id.as_str(),
                    &r.scenario,
                    &r.segment,
                    &r.deviation,
                    r.origin.as_str(),
                    r.status.as_str(),
                    &r.rationale,
                    &hazards,
                ];
                for (i, f) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    csv_field(&mut out, f);
                }
                out.push('\n');
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportDiagnostic {
    pub severity: Severity,
    /// 1-based line in the imported document, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ImportDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match self.line {
            Some(line) => write!(f, "line {line}: {sev}: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed worksheet: {}", .0.first().map(ToString::to_string).unwrap_or_default())]
pub struct ImportError(pub Vec<ImportDiagnostic>);

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ImportOutcome {
    pub applied: usize,
    pub warnings: Vec<ImportDiagnostic>,
}

enum RowHazards {
    Ids(Vec<String>),
    Full(Vec<Hazard>),
}

struct ParsedRow {
    line: Option<usize>,
    phs_id: String,
    status: ReviewStatus,
    rationale: String,
    hazards: RowHazards,
}

fn error(line: Option<usize>, message: impl Into<String>) -> ImportDiagnostic {
    ImportDiagnostic {
        severity: Severity::Error,
        line,
        message: message.into(),
    }
}

fn warning(line: Option<usize>, message: impl Into<String>) -> ImportDiagnostic {
    ImportDiagnostic {
        severity: Severity::Warning,
        line,
        message: message.into(),
    }
}

fn parse_csv(doc: &str) -> Result<Vec<ParsedRow>, ImportError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(doc.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| ImportError(vec![error(Some(1), e.to_string())]))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(ImportError(vec![error(
            Some(1),
            format!("expected header `{CSV_HEADER}`"),
        )]));
    }
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize);
                errors.push(error(line, e.to_string()));
                continue;
            }
        };
        let line = record.position().map(|p| p.line() as usize);
        let status = match ReviewStatus::parse(&record[5]) {
            Some(s) => s,
            None => {
                errors.push(error(
                    line,
                    format!("column status: unknown status `{}`", &record[5]),
                ));
                continue;
            }
        };
        if Origin::parse(&record[4]).is_none() {
            errors.push(error(
                line,
                format!("column origin: unknown origin `{}`", &record[4]),
            ));
            continue;
        }
        let ids = record[7]
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
            .collect();
        out.push(ParsedRow {
            line,
            phs_id: record[0].to_owned(),
            status,
            rationale: record[6].to_owned(),
            hazards: RowHazards::Ids(ids),
        });
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(ImportError(errors))
    }
}

fn parse_json(doc: &str) -> Result<Vec<ParsedRow>, ImportError> {
    let rows: Vec<WorksheetRow> = serde_json::from_str(doc)
        .map_err(|e| ImportError(vec![error(Some(e.line()), e.to_string())]))?;
    Ok(rows
        .into_iter()
        .map(|r| ParsedRow {
            line: None,
            phs_id: r.phs_id,
            status: r.status,
            rationale: r.rationale,
            hazards: RowHazards::Full(r.hazards),
        })
        .collect())
}

/// Applies an edited worksheet. Parsing is all-or-nothing; rows are then
/// applied one by one. Rows for unknown PHS, illegal transitions and hazards
/// that cannot be created become warnings. Rows matching the stored state
/// are skipped, so re-importing the same file applies nothing.
pub fn import_decisions(
    project: &mut Project,
    doc: &str,
    format: WorksheetFormat,
    reviewer: &str,
    clock: &dyn Clock,
) -> Result<ImportOutcome, ImportError> {
    let parsed = match format {
        WorksheetFormat::Csv => parse_csv(doc)?,
        WorksheetFormat::Json => parse_json(doc)?,
    };
    let mut outcome = ImportOutcome::default();
    for row in parsed {
        let Some(phs) = project.phs(&row.phs_id) else {
            outcome.warnings.push(warning(
                row.line,
                format!("unknown PHS `{}`, row skipped", row.phs_id),
            ));
            continue;
        };
        let phs_id = phs.id.clone();
        let current = phs.review.clone();
        let mut changed = false;

        let decision_differs =
            row.status != current.status || row.rationale.trim() != current.rationale;
        if decision_differs {
            let verdict = match row.status {
                ReviewStatus::Hazardous => Some(Verdict::Hazardous),
                ReviewStatus::NotHazardous => Some(Verdict::NotHazardous),
                ReviewStatus::Generated => None,
            };
            match verdict {
                None => {
                    outcome.warnings.push(warning(
                        row.line,
                        format!("PHS `{phs_id}`: cannot return to generated, row skipped"),
                    ));
                    continue;
                }
                Some(v) => {
                    match apply_decision(project, &phs_id, v, &row.rationale, reviewer, None, clock)
                    {
                        Ok(_) => changed = true,
                        Err(e) => {
                            outcome.warnings.push(warning(
                                row.line,
                                format!("PHS `{phs_id}`: {e}, row skipped"),
                            ));
                            continue;
                        }
                    }
                }
            }
        }

        match row.hazards {
            RowHazards::Ids(ids) => {
                for id in ids {
                    match project.hazard(&id) {
                        Some(h) if h.phs == phs_id => {}
                        Some(h) => outcome.warnings.push(warning(
                            row.line,
                            format!("hazard `{id}` belongs to PHS `{}`, not `{phs_id}`", h.phs),
                        )),
                        None => outcome.warnings.push(warning(
                            row.line,
                            format!("unknown hazard `{id}`; CSV rows reference hazards, use the JSON worksheet to create them"),
                        )),
                    }
                }
            }
            RowHazards::Full(hazards) => {
                for h in hazards {
                    if let Some(existing) = project.hazard(h.id.as_str()) {
                        if existing.phs != phs_id
                            || *existing
                                != (Hazard {
                                    phs: phs_id.clone(),
                                    ..h.clone()
                                })
                        {
                            outcome.warnings.push(warning(
                                row.line,
                                format!(
                                    "hazard `{}` differs from the stored one, not updated",
                                    h.id
                                ),
                            ));
                        }
                        continue;
                    }
                    let new = NewHazard {
                        id: Some(h.id.to_string()),
                        phs: phs_id.to_string(),
                        source: h.source,
                        target: h.target,
                        initiating_mechanism: h.initiating_mechanism,
                        description: h.description,
                        target_kind: h.target_kind,
                    };
                    match create_hazard(project, &new) {
                        Ok(_) => changed = true,
                        Err(e) => outcome.warnings.push(warning(
                            row.line,
                            format!("hazard `{}`: {e}", new.id.unwrap_or_default()),
                        )),
                    }
                }
            }
        }
        if changed {
            outcome.applied += 1;
        }
    }
    Ok(outcome)
}
