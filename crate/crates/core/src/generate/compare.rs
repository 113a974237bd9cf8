use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::model::{image_of_g, Ident, MalfunctionCatalog, Project};

use super::{
    collapse_by_behavior, generate_deviation_route, is_applicable, malfunction_rows, model_errors,
    GenerateError,
};

/// A (segment, g(m)) behavior the malfunction route produces but the
/// deviation route does not: g(m) is an absence class the segment doesn't require.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageGap {
    pub scenario: Ident,
    pub segment: Ident,
    pub deviation: Ident,
    pub malfunctions: Vec<Ident>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub catalog: Ident,
    /// |M| * |S|, unmapped malfunctions included.
    #[serde(rename = "count_PM")]
    pub count_pm: usize,
    /// Malfunction-route rows whose g(m) is applicable in their segment.
    #[serde(rename = "count_PM_filtered")]
    pub count_pm_filtered: usize,
    #[serde(rename = "count_PD")]
    pub count_pd: usize,
    /// |D| * |S|
    #[serde(rename = "count_PD_unfiltered")]
    pub count_pd_unfiltered: usize,
    #[serde(rename = "distinct_behaviors_PM")]
    pub distinct_behaviors_pm: usize,
    /// count_PM / count_PD, or 0 when count_PD is 0.
    pub reduction_ratio: f64,
    pub unmapped_malfunctions: Vec<Ident>,
    #[serde(rename = "deviations_outside_gM")]
    pub deviations_outside_gm: Vec<Ident>,
    pub coverage_gaps: Vec<CoverageGap>,
}

/// Runs both strategies on the same model and reports the counts. Unmapped
/// malfunctions are listed and counted in |M| but produce no behavior.
pub fn compare_strategies(
    project: &Project,
    catalog: &MalfunctionCatalog,
) -> Result<ComparisonReport, GenerateError> {
    model_errors(project)?;
    let segments = project.segment_count();
    let taxonomy = &project.taxonomy;

    let image = image_of_g(catalog, taxonomy).map_err(|e| GenerateError::UnresolvedMapping {
        malfunction: e.malfunction,
        class: e.class,
    })?;
    let image: HashSet<&Ident> = image.iter().collect();
    let deviations_outside_gm = taxonomy
        .classes
        .iter()
        .filter(|c| !image.contains(&c.id))
        .map(|c| c.id.clone())
        .collect();
    let unmapped_malfunctions = catalog
        .malfunctions()
        .filter(|m| m.maps_to.is_none())
        .map(|m| m.id.clone())
        .collect();

    let p_m = malfunction_rows(project, catalog, false)?;
    let count_pm_filtered = p_m
        .iter()
        .filter(|row| {
            project
                .segment(row.scenario.as_str(), row.segment.as_str())
                .is_some_and(|seg| is_applicable(seg, taxonomy, row.deviation.as_str()))
        })
        .count();
    let groups = collapse_by_behavior(&p_m)?;

    let p_d = generate_deviation_route(project)?;
    let pd_keys: HashSet<(&Ident, &Ident, &Ident)> = p_d
        .iter()
        .map(|p| (&p.scenario, &p.segment, &p.deviation))
        .collect();
    let coverage_gaps = groups
        .iter()
        .filter(|g| !pd_keys.contains(&(&g.scenario, &g.segment, &g.deviation)))
        .map(|g| CoverageGap {
            scenario: g.scenario.clone(),
            segment: g.segment.clone(),
            deviation: g.deviation.clone(),
            malfunctions: g.malfunctions.clone(),
        })
        .collect();

    let count_pm = catalog.len() * segments;
    let count_pd = p_d.len();
    Ok(ComparisonReport {
        catalog: catalog.id.clone(),
        count_pm,
        count_pm_filtered,
        count_pd,
        count_pd_unfiltered: taxonomy.classes.len() * segments,
        distinct_behaviors_pm: groups.len(),
        reduction_ratio: if count_pd == 0 {
            0.0
        } else {
            count_pm as f64 / count_pd as f64
        },
        unmapped_malfunctions,
        deviations_outside_gm,
        coverage_gaps,
    })
}
