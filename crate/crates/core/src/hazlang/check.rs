use serde::Serialize;

use crate::model::{validate_project, DeviationTaxonomy, Project, Severity};

use super::{lower_many, parse, Diagnostic, SourceFile};

/// A diagnostic tied to a file, or to the combined model when `path` is absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<u32>,
    pub severity: Severity,
    pub code: String,
    pub message: String,
}

impl Finding {
    fn at(path: &str, d: Diagnostic) -> Self {
        Finding {
            path: Some(path.to_owned()),
            line: Some(d.span.line),
            column: Some(d.span.column),
            severity: d.severity,
            code: d.code,
            message: d.message,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match (&self.path, self.line, self.column) {
            (Some(p), Some(l), Some(c)) => {
                write!(f, "{p}:{l}:{c}: {sev}[{}]: {}", self.code, self.message)
            }
            (Some(p), _, _) => write!(f, "{p}: {sev}[{}]: {}", self.code, self.message),
            _ => write!(f, "model: {sev}[{}]: {}", self.code, self.message),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    /// Present when no error was found.
    pub project: Option<Project>,
    pub findings: Vec<Finding>,
}

impl CheckOutcome {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(Finding::is_error)
    }
}

/// Parses, lowers and validates a set of `.hzl` files as one model.
pub fn check_sources(files: &[SourceFile], name: &str) -> CheckOutcome {
    let mut findings = Vec::new();
    let mut trees = Vec::new();
    for file in files {
        let (tree, diags) = parse(file);
        findings.extend(diags.into_iter().map(|d| Finding::at(&file.path, d)));
        trees.extend(tree);
    }
    if trees.len() != files.len() {
        return CheckOutcome {
            project: None,
            findings,
        };
    }
    let refs: Vec<_> = trees.iter().collect();
    let (lowered, diags) = lower_many(&refs, &DeviationTaxonomy::builtin());
    let lower_failed = diags.iter().any(|(_, d)| d.is_error());
    findings.extend(
        diags
            .into_iter()
            .map(|(i, d)| Finding::at(&files[i].path, d)),
    );
    if lower_failed {
        return CheckOutcome {
            project: None,
            findings,
        };
    }
    let project = lowered.into_project(name);
    let mut valid = true;
    for d in validate_project(&project) {
        valid &= d.severity != Severity::Error;
        findings.push(Finding {
            path: None,
            line: None,
            column: None,
            severity: d.severity,
            code: d.code,
            message: format!("{}: {}", d.entity, d.message),
        });
    }
    CheckOutcome {
        project: valid.then_some(project),
        findings,
    }
}
