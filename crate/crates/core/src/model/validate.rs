use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    is_valid_ident, ActorRole, DeviationKind, DeviationTaxonomy, Ident, MalfunctionCatalog, Origin,
    Project, ReviewStatus, Severity, SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationDiagnostic {
    pub severity: Severity,
    pub code: String,
    pub entity: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malfunction `{malfunction}` maps to unknown deviation class `{class}`")]
pub struct UnresolvedMapping {
    pub malfunction: Ident,
    pub class: Ident,
}

/// g(M): the distinct deviation classes the catalog's malfunctions map to,
/// in order of first occurrence. Unmapped malfunctions contribute nothing.
pub fn image_of_g(
    catalog: &MalfunctionCatalog,
    taxonomy: &DeviationTaxonomy,
) -> Result<Vec<Ident>, UnresolvedMapping> {
    let mut seen = HashSet::new();
    let mut image = Vec::new();
    for m in catalog.malfunctions() {
        let Some(class) = &m.maps_to else { continue };
        if taxonomy.class(class.as_str()).is_none() {
            return Err(UnresolvedMapping {
                malfunction: m.id.clone(),
                class: class.clone(),
            });
        }
        if seen.insert(class.clone()) {
            image.push(class.clone());
        }
    }
    Ok(image)
}

struct Sink(Vec<ValidationDiagnostic>);

impl Sink {
    fn error(&mut self, code: &str, entity: impl ToString, message: impl Into<String>) {
        self.push(Severity::Error, code, entity, message);
    }

    fn warning(&mut self, code: &str, entity: impl ToString, message: impl Into<String>) {
        self.push(Severity::Warning, code, entity, message);
    }

    fn push(
        &mut self,
        severity: Severity,
        code: &str,
        entity: impl ToString,
        message: impl Into<String>,
    ) {
        self.0.push(ValidationDiagnostic {
            severity,
            code: code.to_owned(),
            entity: entity.to_string(),
            message: message.into(),
        });
    }
}

/// Checks every model invariant. Returns an empty list iff the project is clean.
pub fn validate_project(project: &Project) -> Vec<ValidationDiagnostic> {
    let mut out = Sink(Vec::new());
    if project.schema_version != SCHEMA_VERSION {
        out.error(
            "V000",
            &project.name,
            format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                project.schema_version
            ),
        );
    }
    check_taxonomy(&project.taxonomy, &mut out);
    check_catalogs(project, &mut out);
    check_scenarios(project, &mut out);
    check_phs(project, &mut out);
    check_hazards(project, &mut out);
    check_traces(project, &mut out);
    out.0
}

fn check_taxonomy(taxonomy: &DeviationTaxonomy, out: &mut Sink) {
    if taxonomy.classes.is_empty() {
        out.error("V001", &taxonomy.name, "taxonomy has no deviation classes");
    }
    let mut ids = HashSet::new();
    let mut actions = HashSet::new();
    for class in &taxonomy.classes {
        if !ids.insert(class.id.as_str()) {
            out.error("V002", &class.id, "duplicate deviation class id");
        }
        if class.kind == DeviationKind::Absence {
            match &class.action {
                None => out.error("V003", &class.id, "absence deviation class names no action"),
                Some(action) if !actions.insert(action.as_str()) => out.error(
                    "V004",
                    &class.id,
                    format!("action `{action}` is claimed by more than one absence class"),
                ),
                Some(_) => {}
            }
        }
    }
}

fn check_catalogs(project: &Project, out: &mut Sink) {
    let taxonomy = &project.taxonomy;
    let mut catalog_ids = HashSet::new();
    let mut malfunction_ids = HashSet::new();
    let mut image = HashSet::new();
    for catalog in &project.catalogs {
        if !catalog_ids.insert(catalog.id.as_str()) {
            out.error("V012", &catalog.id, "duplicate catalog id");
        }
        for m in catalog.malfunctions() {
            if !malfunction_ids.insert(m.id.as_str()) {
                out.error("V011", &m.id, "duplicate malfunction id");
            }
            match &m.maps_to {
                None => out.warning("W101", &m.id, "malfunction lacks maps_to"),
                Some(class) if taxonomy.class(class.as_str()).is_none() => out.error(
                    "V010",
                    &m.id,
                    format!(
                        "malfunction `{}` maps to unknown deviation class `{class}`",
                        m.id
                    ),
                ),
                Some(class) => {
                    image.insert(class.as_str());
                }
            }
        }
    }
    if !project.catalogs.is_empty() {
        for class in &taxonomy.classes {
            if !image.contains(class.id.as_str()) {
                out.warning(
                    "W102",
                    &class.id,
                    "deviation class not in image g(M): no modeled malfunction causes it",
                );
            }
        }
    }
}

fn check_scenarios(project: &Project, out: &mut Sink) {
    let taxonomy = &project.taxonomy;
    let mut scenario_ids = HashSet::new();
    for scenario in &project.scenarios {
        if !scenario_ids.insert(scenario.id.as_str()) {
            out.error("V020", &scenario.id, "duplicate scenario id");
        }
        let egos = scenario
            .actors
            .iter()
            .filter(|a| a.role == ActorRole::Ego)
            .count();
        if egos != 1 {
            out.error(
                "V021",
                &scenario.id,
                format!("scenario has {egos} ego actors, expected exactly 1"),
            );
        }
        let mut actor_ids = HashSet::new();
        for actor in &scenario.actors {
            if !actor_ids.insert(actor.id.as_str()) {
                out.error(
                    "V028",
                    format!("{}/{}", scenario.id, actor.id),
                    "duplicate actor id",
                );
            }
        }
        if scenario.segments.is_empty() {
            out.error("V022", &scenario.id, "scenario has no segments");
        }
        let mut segment_ids = HashSet::new();
        let mut last_order: Option<u32> = None;
        for segment in &scenario.segments {
            let entity = format!("{}/{}", scenario.id, segment.id);
            if !segment_ids.insert(segment.id.as_str()) {
                out.error("V023", &entity, "duplicate segment id");
            }
            if segment.scenario != scenario.id {
                out.error(
                    "V027",
                    &entity,
                    format!("segment claims scenario `{}`", segment.scenario),
                );
            }
            if last_order.is_some_and(|prev| segment.order <= prev) {
                out.error(
                    "V024",
                    &entity,
                    "segment order must strictly increase within a scenario",
                );
            }
            last_order = Some(segment.order);
            if segment.desired_behavior.trim().is_empty() {
                out.error("V025", &entity, "segment has no desired behavior");
            }
            let mut required = HashSet::new();
            for req in &segment.requirements {
                match taxonomy.absence_for_action(req.action.as_str()) {
                    None => out.error(
                        "V026",
                        &entity,
                        format!(
                            "required action `{}` matches no absence deviation class",
                            req.action
                        ),
                    ),
                    Some(class) if class.axis != req.axis => out.error(
                        "V029",
                        &entity,
                        format!(
                            "required action `{}` declared on the wrong axis",
                            req.action
                        ),
                    ),
                    Some(_) => {}
                }
                if !required.insert(req.action.as_str()) {
                    out.error(
                        "V026",
                        &entity,
                        format!("action `{}` required twice", req.action),
                    );
                }
            }
        }
    }
}

fn check_phs(project: &Project, out: &mut Sink) {
    let mut ids = HashSet::new();
    let mut keys = HashSet::new();
    for phs in &project.phs_set {
        // Rows the current model no longer produces may reference removed entities.
        let dangling = |out: &mut Sink, code: &str, msg: String| {
            if phs.orphaned {
                out.warning(code, &phs.id, msg);
            } else {
                out.error(code, &phs.id, msg);
            }
        };
        if !is_valid_ident(phs.id.as_str()) || !ids.insert(phs.id.as_str()) {
            out.error("V035", &phs.id, "duplicate PHS id");
        }
        let key = (
            phs.scenario.as_str(),
            phs.segment.as_str(),
            phs.deviation.as_str(),
            phs.origin,
            phs.source_malfunction.as_ref().map(Ident::as_str),
        );
        if !keys.insert(key) {
            out.error(
                "V034",
                &phs.id,
                "duplicate PHS (segment, deviation, origin, malfunction)",
            );
        }
        if project
            .segment(phs.scenario.as_str(), phs.segment.as_str())
            .is_none()
        {
            dangling(
                out,
                "V030",
                format!("unknown segment `{}/{}`", phs.scenario, phs.segment),
            );
        }
        if project.taxonomy.class(phs.deviation.as_str()).is_none() {
            dangling(
                out,
                "V031",
                format!("unknown deviation class `{}`", phs.deviation),
            );
        }
        match (phs.origin, &phs.source_malfunction) {
            (Origin::DeviationRoute, Some(_)) => out.error(
                "V032",
                &phs.id,
                "deviation-route PHS must not carry a source malfunction",
            ),
            (Origin::MalfunctionRoute, None) => out.error(
                "V032",
                &phs.id,
                "malfunction-route PHS lacks its source malfunction",
            ),
            (Origin::MalfunctionRoute, Some(m)) => match project.malfunction(m.as_str()) {
                None => dangling(out, "V033", format!("unknown malfunction `{m}`")),
                Some(mal) if mal.maps_to.as_ref() != Some(&phs.deviation) => {
                    dangling(out, "V036", format!("deviation differs from g(`{m}`)"))
                }
                Some(_) => {}
            },
            (Origin::DeviationRoute, None) => {}
        }
        if phs.review.status == ReviewStatus::Hazardous
            && project.hazards_of(phs.id.as_str()).next().is_none()
        {
            out.warning(
                "W103",
                &phs.id,
                "hazardous scenario has no documented hazard yet",
            );
        }
    }
}

fn check_hazards(project: &Project, out: &mut Sink) {
    let mut ids = HashSet::new();
    for hazard in &project.hazards {
        if !ids.insert(hazard.id.as_str()) {
            out.error("V042", &hazard.id, "duplicate hazard id");
        }
        if let Err(e) = hazard.check_triple() {
            out.error("V041", &hazard.id, e.to_string());
        }
        match project.phs(hazard.phs.as_str()) {
            None => out.error("V040", &hazard.id, format!("unknown PHS `{}`", hazard.phs)),
            Some(phs) if phs.review.status != ReviewStatus::Hazardous => out.error(
                "V043",
                &hazard.id,
                format!(
                    "hazard linked to PHS `{}` whose status is {}",
                    phs.id, phs.review.status
                ),
            ),
            Some(_) => {}
        }
    }
}

fn check_traces(project: &Project, out: &mut Sink) {
    let deviation_of_hazard: HashMap<&str, &str> = project
        .hazards
        .iter()
        .filter_map(|h| {
            project
                .phs(h.phs.as_str())
                .map(|p| (h.id.as_str(), p.deviation.as_str()))
        })
        .collect();
    let mut seen = HashSet::new();
    for link in &project.traces {
        let entity = format!("{}->{}", link.hazard, link.malfunction);
        if !seen.insert((link.hazard.as_str(), link.malfunction.as_str())) {
            out.error("V053", &entity, "duplicate trace link");
        }
        let Some(hazard_dev) = deviation_of_hazard.get(link.hazard.as_str()) else {
            out.error("V050", &entity, format!("unknown hazard `{}`", link.hazard));
            continue;
        };
        match project.malfunction(link.malfunction.as_str()) {
            None => out.error(
                "V051",
                &entity,
                format!("unknown malfunction `{}`", link.malfunction),
            ),
            Some(m) if m.maps_to.as_ref().map(Ident::as_str) != Some(*hazard_dev) => out.error(
                "V052",
                &entity,
                "trace link violates g: malfunction maps elsewhere",
            ),
            Some(_) => {}
        }
    }
}
