use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::generate::{compare_strategies, distinct_deviation_labels, ComparisonReport};
use crate::model::{Ident, Origin, Project, ReviewStatus};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub generated: usize,
    pub not_hazardous: usize,
    pub hazardous: usize,
    pub orphaned: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub id: Ident,
    pub title: String,
    pub segments: usize,
    pub distinct_deviations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub project: String,
    pub store_version: u64,
    pub phs_total: usize,
    pub deviation_route: StatusCounts,
    pub malfunction_route: StatusCounts,
    pub hazards_total: usize,
    /// Hazard counts per target, in order of first appearance.
    pub hazards_by_target: IndexMap<String, usize>,
    pub hazards_by_target_kind: IndexMap<String, usize>,
    pub trace_links: usize,
    pub scenarios: Vec<ScenarioSummary>,
    /// Only filled when malfunction-route rows exist for the catalog.
    pub comparisons: Vec<ComparisonReport>,
}

impl SummaryReport {
    /// Counts over both routes.
    pub fn totals(&self) -> StatusCounts {
        let (a, b) = (&self.deviation_route, &self.malfunction_route);
        StatusCounts {
            generated: a.generated + b.generated,
            not_hazardous: a.not_hazardous + b.not_hazardous,
            hazardous: a.hazardous + b.hazardous,
            orphaned: a.orphaned + b.orphaned,
        }
    }
}

pub fn summary_report(project: &Project) -> SummaryReport {
    let mut deviation_route = StatusCounts::default();
    let mut malfunction_route = StatusCounts::default();
    for p in &project.phs_set {
        let c = match p.origin {
            Origin::DeviationRoute => &mut deviation_route,
            Origin::MalfunctionRoute => &mut malfunction_route,
        };
        if p.orphaned {
            c.orphaned += 1;
            continue;
        }
        match p.review.status {
            ReviewStatus::Generated => c.generated += 1,
            ReviewStatus::NotHazardous => c.not_hazardous += 1,
            ReviewStatus::Hazardous => c.hazardous += 1,
        }
    }
    let mut hazards_by_target: IndexMap<String, usize> = IndexMap::new();
    let mut hazards_by_target_kind: IndexMap<String, usize> = IndexMap::new();
    for h in &project.hazards {
        *hazards_by_target.entry(h.target.clone()).or_default() += 1;
        *hazards_by_target_kind
            .entry(h.target_kind.as_str().to_owned())
            .or_default() += 1;
    }
    let mut labels = distinct_deviation_labels(project);
    let scenarios = project
        .scenarios
        .iter()
        .map(|s| ScenarioSummary {
            id: s.id.clone(),
            title: s.title.clone(),
            segments: s.segments.len(),
            distinct_deviations: labels.shift_remove(&s.id).unwrap_or_default(),
        })
        .collect();
    let comparisons = project
        .catalogs
        .iter()
        .filter(|c| {
            project.phs_set.iter().any(|p| {
                p.origin == Origin::MalfunctionRoute
                    && p.source_malfunction
                        .as_ref()
                        .is_some_and(|m| c.malfunction(m.as_str()).is_some())
            })
        })
        .filter_map(|c| compare_strategies(project, c).ok())
        .collect();
    SummaryReport {
        project: project.name.clone(),
        store_version: project.store_version,
        phs_total: project.phs_set.len(),
        deviation_route,
        malfunction_route,
        hazards_total: project.hazards.len(),
        hazards_by_target,
        hazards_by_target_kind,
        trace_links: project.traces.len(),
        scenarios,
        comparisons,
    }
}

fn counts(map: &IndexMap<String, usize>) -> String {
    if map.is_empty() {
        return "0".to_owned();
    }
    map.iter()
        .map(|(k, n)| format!("{k} {n}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for SummaryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.totals();
        writeln!(
            f,
            "project: {} (version {})",
            self.project, self.store_version
        )?;
        writeln!(
            f,
            "PHS: {} (generated {}, not_hazardous {}, hazardous {}, orphaned {})",
            self.phs_total, t.generated, t.not_hazardous, t.hazardous, t.orphaned
        )?;
        writeln!(f, "hazards: {}", counts(&self.hazards_by_target))?;
        writeln!(
            f,
            "hazards by target kind: {}",
            counts(&self.hazards_by_target_kind)
        )?;
        writeln!(f, "trace links: {}", self.trace_links)?;
        for s in &self.scenarios {
            writeln!(
                f,
                "scenario {} \"{}\": {} segment(s), {} distinct deviation(s)",
                s.id,
                s.title,
                s.segments,
                s.distinct_deviations.len()
            )?;
            for label in &s.distinct_deviations {
                writeln!(f, "  - {label}")?;
            }
        }
        for c in &self.comparisons {
            writeln!(
                f,
                "catalog {}: count_PM {}, distinct_behaviors_PM {}, count_PD {}, reduction_ratio {:.1}, coverage_gaps {}",
                c.catalog,
                c.count_pm,
                c.distinct_behaviors_pm,
                c.count_pd,
                c.reduction_ratio,
                c.coverage_gaps.len()
            )?;
        }
        Ok(())
    }
}
