//! Systematic generation of potentially hazardous scenarios (PHS).
//!
//! Two strategies are implemented side by side. The deviation route combines
//! every segment with the deviations applicable in it. The malfunction route
//! combines every malfunction with every segment and relies on g to name the
//! observable behavior. [`compare_strategies`] quantifies how many
//! malfunction-route rows collapse onto the same behavior.

mod compare;

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{
    validate_project, DeviationKind, DeviationTaxonomy, Ident, MalfunctionCatalog, Origin, Phs,
    Project, ReviewState, Segment, Severity, ValidationDiagnostic,
};

pub use compare::{compare_strategies, ComparisonReport, CoverageGap};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("project has {} validation error(s)", .0.len())]
    InvalidProject(Vec<ValidationDiagnostic>),
    #[error(
        "segment `{segment}` requires action `{action}` but no absence deviation class covers it"
    )]
    UnresolvedAction { segment: Ident, action: Ident },
    #[error("unmapped malfunction(s): {}", join(.0))]
    Unmapped(Vec<Ident>),
    #[error("malfunction `{malfunction}` maps to unknown deviation class `{class}`")]
    UnresolvedMapping { malfunction: Ident, class: Ident },
    #[error("collapse expects malfunction-route rows only; `{0}` is a deviation-route row")]
    MixedOrigin(Ident),
    #[error("unknown catalog `{0}`")]
    UnknownCatalog(String),
}

fn join(ids: &[Ident]) -> String {
    ids.iter().map(Ident::as_str).collect::<Vec<_>>().join(", ")
}

/// A generic deviation class instantiated in one segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationInstance {
    pub class: Ident,
    pub kind: DeviationKind,
    /// Requirement-specific for absence classes, the class label otherwise.
    pub label: String,
    pub segment: Ident,
}

pub fn absence_label(requirement_label: &str) -> String {
    format!("Absence of required {requirement_label}")
}

/// Deviations that can occur in `segment`: every improper class, plus one
/// absence instance per action the segment requires.
pub fn applicable_deviations(
    segment: &Segment,
    taxonomy: &DeviationTaxonomy,
) -> Result<Vec<DeviationInstance>, GenerateError> {
    for req in &segment.requirements {
        if taxonomy.absence_for_action(req.action.as_str()).is_none() {
            return Err(GenerateError::UnresolvedAction {
                segment: segment.id.clone(),
                action: req.action.clone(),
            });
        }
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for class in &taxonomy.classes {
        match class.kind {
            DeviationKind::Improper => out.push(DeviationInstance {
                class: class.id.clone(),
                kind: class.kind,
                label: class.display_label.clone(),
                segment: segment.id.clone(),
            }),
            DeviationKind::Absence => {
                for req in &segment.requirements {
                    if class.action.as_ref() != Some(&req.action) || !seen.insert(&req.action) {
                        continue;
                    }
                    out.push(DeviationInstance {
                        class: class.id.clone(),
                        kind: class.kind,
                        label: req
                            .label
                            .as_deref()
                            .map_or_else(|| class.display_label.clone(), absence_label),
                        segment: segment.id.clone(),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Whether deviation class `class` can occur in `segment`.
pub fn is_applicable(segment: &Segment, taxonomy: &DeviationTaxonomy, class: &str) -> bool {
    match taxonomy.class(class) {
        None => false,
        Some(c) => match c.kind {
            DeviationKind::Improper => true,
            DeviationKind::Absence => segment
                .requirements
                .iter()
                .any(|r| c.action.as_ref() == Some(&r.action)),
        },
    }
}

/// Stable PHS identity. Expert decisions survive regeneration as long as
/// none of these key fields change.
pub fn phs_id(
    scenario: &str,
    segment: &str,
    deviation: &str,
    requirement_label: &str,
    origin: Origin,
    malfunction: Option<&str>,
) -> Ident {
    let mut h = Sha256::new();
    for part in [
        scenario,
        segment,
        deviation,
        requirement_label,
        origin.as_str(),
        malfunction.unwrap_or(""),
    ] {
        h.update(part.as_bytes());
        h.update([0x1f]);
    }
    let digest = h.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    Ident::new(format!("phs_{hex}")).expect("hex id")
}

fn model_errors(project: &Project) -> Result<(), GenerateError> {
    let errors: Vec<_> = validate_project(&project.model_only())
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(GenerateError::InvalidProject(errors))
    }
}

fn review_of(project: &Project, id: &Ident) -> ReviewState {
    project
        .phs(id.as_str())
        .map_or_else(ReviewState::generated, |p| p.review.clone())
}

/// P_D: every segment combined with each of its applicable deviations, in
/// scenario, segment, instance order. Existing review states are carried over.
pub fn generate_deviation_route(project: &Project) -> Result<Vec<Phs>, GenerateError> {
    model_errors(project)?;
    let mut out = Vec::new();
    for (scenario, segment) in project.segments() {
        for inst in applicable_deviations(segment, &project.taxonomy)? {
            let key_label = if inst.kind == DeviationKind::Absence {
                inst.label.as_str()
            } else {
                ""
            };
            let id = phs_id(
                scenario.id.as_str(),
                segment.id.as_str(),
                inst.class.as_str(),
                key_label,
                Origin::DeviationRoute,
                None,
            );
            out.push(Phs {
                review: review_of(project, &id),
                id,
                scenario: scenario.id.clone(),
                segment: segment.id.clone(),
                origin: Origin::DeviationRoute,
                deviation: inst.class,
                source_malfunction: None,
                instance_label: inst.label,
                orphaned: false,
            });
        }
    }
    Ok(out)
}

/// P_M = M x S for one catalog, malfunction-major. Every malfunction must be mapped.
pub fn generate_malfunction_route(
    project: &Project,
    catalog: &MalfunctionCatalog,
) -> Result<Vec<Phs>, GenerateError> {
    model_errors(project)?;
    let unmapped: Vec<Ident> = catalog
        .malfunctions()
        .filter(|m| m.maps_to.is_none())
        .map(|m| m.id.clone())
        .collect();
    if !unmapped.is_empty() {
        return Err(GenerateError::Unmapped(unmapped));
    }
    malfunction_rows(project, catalog, true)
}

/// Builds malfunction-route rows for mapped malfunctions, skipping unmapped ones.
pub(crate) fn malfunction_rows(
    project: &Project,
    catalog: &MalfunctionCatalog,
    carry_reviews: bool,
) -> Result<Vec<Phs>, GenerateError> {
    let taxonomy = &project.taxonomy;
    let mut out = Vec::with_capacity(catalog.len() * project.segment_count());
    for m in catalog.malfunctions() {
        let Some(class_id) = &m.maps_to else { continue };
        let Some(class) = taxonomy.class(class_id.as_str()) else {
            return Err(GenerateError::UnresolvedMapping {
                malfunction: m.id.clone(),
                class: class_id.clone(),
            });
        };
        for (scenario, segment) in project.segments() {
            let label = match class.kind {
                DeviationKind::Absence => segment
                    .requirements
                    .iter()
                    .find(|r| class.action.as_ref() == Some(&r.action))
                    .and_then(|r| r.label.as_deref())
                    .map_or_else(|| class.display_label.clone(), absence_label),
                DeviationKind::Improper => class.display_label.clone(),
            };
            let id = phs_id(
                scenario.id.as_str(),
                segment.id.as_str(),
                class_id.as_str(),
                "",
                Origin::MalfunctionRoute,
                Some(m.id.as_str()),
            );
            out.push(Phs {
                review: if carry_reviews {
                    review_of(project, &id)
                } else {
                    ReviewState::generated()
                },
                id,
                scenario: scenario.id.clone(),
                segment: segment.id.clone(),
                origin: Origin::MalfunctionRoute,
                deviation: class_id.clone(),
                source_malfunction: Some(m.id.clone()),
                instance_label: label,
                orphaned: false,
            });
        }
    }
    Ok(out)
}

/// Malfunction-route rows sharing one (segment, observable behavior).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorGroup {
    pub scenario: Ident,
    pub segment: Ident,
    pub deviation: Ident,
    pub malfunctions: Vec<Ident>,
}

/// Groups malfunction-route rows by (segment, g(m)), in order of first occurrence.
pub fn collapse_by_behavior(phs_m: &[Phs]) -> Result<Vec<BehaviorGroup>, GenerateError> {
    let mut groups: IndexMap<(&Ident, &Ident, &Ident), Vec<Ident>> = IndexMap::new();
    for p in phs_m {
        if p.origin != Origin::MalfunctionRoute {
            return Err(GenerateError::MixedOrigin(p.id.clone()));
        }
        let members = groups
            .entry((&p.scenario, &p.segment, &p.deviation))
            .or_default();
        if let Some(m) = &p.source_malfunction {
            if !members.contains(m) {
                members.push(m.clone());
            }
        }
    }
    Ok(groups
        .into_iter()
        .map(
            |((scenario, segment, deviation), malfunctions)| BehaviorGroup {
                scenario: scenario.clone(),
                segment: segment.clone(),
                deviation: deviation.clone(),
                malfunctions,
            },
        )
        .collect())
}

/// Which existing rows a regeneration may orphan.
#[derive(Debug, Clone, Copy)]
pub enum Scope<'a> {
    DeviationRoute,
    MalfunctionRoute(&'a MalfunctionCatalog),
}

/// Merges freshly generated rows into the project. Existing rows keep their
/// position and review state; rows in scope that were not regenerated are
/// marked orphaned, never removed; new rows are appended. Returns the number
/// of newly added rows.
pub fn apply_generation(project: &mut Project, scope: Scope<'_>, fresh: Vec<Phs>) -> usize {
    let fresh_ids: HashMap<Ident, usize> = fresh
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.clone(), i))
        .collect();
    let known_malfunctions: HashSet<Ident> = project.malfunctions().map(|m| m.id.clone()).collect();
    let in_scope = |p: &Phs| match scope {
        Scope::DeviationRoute => p.origin == Origin::DeviationRoute,
        Scope::MalfunctionRoute(catalog) => {
            p.origin == Origin::MalfunctionRoute
                && p.source_malfunction.as_ref().is_some_and(|m| {
                    catalog.malfunction(m.as_str()).is_some() || !known_malfunctions.contains(m)
                })
        }
    };
    let mut fresh: Vec<Option<Phs>> = fresh.into_iter().map(Some).collect();
    for existing in &mut project.phs_set {
        match fresh_ids.get(&existing.id) {
            Some(&i) => {
                let mut row = fresh[i].take().expect("ids are unique");
                row.review = existing.review.clone();
                *existing = row;
            }
            None if in_scope(existing) => existing.orphaned = true,
            None => {}
        }
    }
    let added: Vec<Phs> = fresh.into_iter().flatten().collect();
    let count = added.len();
    project.phs_set.extend(added);
    project.phs_set.sort_by_key(|p| p.origin);
    count
}

/// Distinct deviation labels per scenario over deviation-route rows, the
/// scenario-level summary of segment-level PHS.
pub fn distinct_deviation_labels(project: &Project) -> IndexMap<Ident, Vec<String>> {
    let mut out: IndexMap<Ident, Vec<String>> = IndexMap::new();
    for p in project
        .phs_set
        .iter()
        .filter(|p| p.origin == Origin::DeviationRoute && !p.orphaned)
    {
        let labels = out.entry(p.scenario.clone()).or_default();
        if !labels.contains(&p.instance_label) {
            labels.push(p.instance_label.clone());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Deviation,
    Malfunction,
    Both,
}

impl Strategy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "deviation" => Some(Strategy::Deviation),
            "malfunction" => Some(Strategy::Malfunction),
            "both" => Some(Strategy::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSummary {
    /// Rows produced by this run.
    pub total: usize,
    /// Rows not present before this run.
    pub added: usize,
    /// Distinct deviation labels among the produced rows.
    pub distinct_deviations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<RouteSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub malfunction: Option<RouteSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub comparisons: Vec<ComparisonReport>,
}

fn summarize(rows: &[Phs], added: usize) -> RouteSummary {
    let labels: HashSet<&str> = rows.iter().map(|p| p.instance_label.as_str()).collect();
    RouteSummary {
        total: rows.len(),
        added,
        distinct_deviations: labels.len(),
    }
}

/// Runs one or both strategies and merges the rows into the project.
/// `catalog` selects the malfunction catalog; all catalogs are used when absent.
pub fn run_generation(
    project: &mut Project,
    strategy: Strategy,
    catalog: Option<&str>,
) -> Result<GenerationSummary, GenerateError> {
    let mut summary = GenerationSummary::default();
    let catalogs: Vec<MalfunctionCatalog> = match catalog {
        Some(key) => vec![project
            .catalog(key)
            .cloned()
            .ok_or_else(|| GenerateError::UnknownCatalog(key.to_owned()))?],
        None => project.catalogs.clone(),
    };
    if matches!(strategy, Strategy::Deviation | Strategy::Both) {
        let rows = generate_deviation_route(project)?;
        let s = summarize(&rows, 0);
        let added = apply_generation(project, Scope::DeviationRoute, rows);
        summary.deviation = Some(RouteSummary { added, ..s });
    }
    if matches!(strategy, Strategy::Malfunction | Strategy::Both) {
        let mut all = Vec::new();
        let mut added = 0;
        for c in &catalogs {
            let rows = generate_malfunction_route(project, c)?;
            all.extend(rows.iter().cloned());
            added += apply_generation(project, Scope::MalfunctionRoute(c), rows);
        }
        summary.malfunction = Some(RouteSummary {
            added,
            ..summarize(&all, 0)
        });
    }
    if strategy == Strategy::Both {
        for c in &catalogs {
            summary.comparisons.push(compare_strategies(project, c)?);
        }
    }
    Ok(summary)
}
