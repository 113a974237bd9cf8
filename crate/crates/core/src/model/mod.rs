//! Domain types for scenario-based hazard identification.
//!
//! The sets the workbench reasons about map onto these types as follows:
//! deviations (D) are [`DeviationClass`]es of a [`DeviationTaxonomy`],
//! malfunctions (M) are the flattened [`Malfunction`]s of every
//! [`MalfunctionCatalog`], scenes (S) are the [`Segment`]s of every
//! [`OperationalScenario`], and the generated combinations are
//! [`PotentiallyHazardousScenario`] rows. Expert triage turns some of them
//! into [`Hazard`]s.

mod ident;
mod validate;

use chrono::{DateTime, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ident::{is_valid_ident, Ident, InvalidIdent};
pub use validate::{image_of_g, validate_project, ValidationDiagnostic};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Longitudinal,
    Lateral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviationKind {
    /// A required action is not performed. Only applicable where a segment requires it.
    Absence,
    /// An action is performed when it should not be. Applicable in every segment.
    Improper,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationClass {
    pub id: Ident,
    pub axis: Axis,
    pub kind: DeviationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Ident>,
    pub display_label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationTaxonomy {
    pub name: String,
    pub classes: Vec<DeviationClass>,
}

impl DeviationTaxonomy {
    /// The generic longitudinal and lateral deviations of an automated vehicle.
    pub fn builtin() -> Self {
        use Axis::*;
        use DeviationKind::*;
        let class = |id: &str, axis, kind, action: &str, label: &str| DeviationClass {
            id: Ident::new(id).expect("builtin id"),
            axis,
            kind,
            action: Some(Ident::new(action).expect("builtin action")),
            display_label: label.to_owned(),
        };
        DeviationTaxonomy {
            name: "default".to_owned(),
            classes: vec![
                class(
                    "absent_acceleration",
                    Longitudinal,
                    Absence,
                    "accelerate",
                    "Absence of required acceleration",
                ),
                class(
                    "absent_deceleration",
                    Longitudinal,
                    Absence,
                    "decelerate",
                    "Absence of required deceleration",
                ),
                class(
                    "absent_course_change",
                    Lateral,
                    Absence,
                    "change_course",
                    "Absence of required course angle changes",
                ),
                class(
                    "improper_acceleration",
                    Longitudinal,
                    Improper,
                    "accelerate",
                    "Improper acceleration",
                ),
                class(
                    "improper_deceleration",
                    Longitudinal,
                    Improper,
                    "decelerate",
                    "Improper deceleration",
                ),
                class(
                    "improper_course_change",
                    Lateral,
                    Improper,
                    "change_course",
                    "Improper course angle changes",
                ),
            ],
        }
    }

    pub fn class(&self, id: &str) -> Option<&DeviationClass> {
        self.classes.iter().find(|c| c.id == id)
    }

    /// The absence-kind class whose omitted action is `action`.
    pub fn absence_for_action(&self, action: &str) -> Option<&DeviationClass> {
        self.classes.iter().find(|c| {
            c.kind == DeviationKind::Absence && c.action.as_ref().is_some_and(|a| a == action)
        })
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.id == id)
    }
}

impl Default for DeviationTaxonomy {
    fn default() -> Self {
        Self::builtin()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Malfunction {
    pub id: Ident,
    pub description: String,
    /// g(m). `None` only while a catalog is being authored.
    #[serde(default)]
    pub maps_to: Option<Ident>,
    pub parent_function: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemFunction {
    pub id: Ident,
    pub name: String,
    pub malfunctions: Vec<Malfunction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalfunctionCatalog {
    pub id: Ident,
    pub name: String,
    pub functions: Vec<ItemFunction>,
}

impl MalfunctionCatalog {
    pub fn malfunctions(&self) -> impl Iterator<Item = &Malfunction> {
        self.functions.iter().flat_map(|f| f.malfunctions.iter())
    }

    pub fn len(&self) -> usize {
        self.functions.iter().map(|f| f.malfunctions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn malfunction(&self, id: &str) -> Option<&Malfunction> {
        self.malfunctions().find(|m| m.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub action: Ident,
    pub axis: Axis,
    /// Scenario-specific name of the required behavior, e.g. "speed adjustment".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Descriptive parameter value. Numbers keep their literal text and unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Quantity {
        value: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unit: Option<String>,
    },
    Text(String),
}

impl std::fmt::Display for ParamValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamValue::Quantity {
                value,
                unit: Some(unit),
            } => write!(f, "{value} {unit}"),
            ParamValue::Quantity { value, unit: None } => f.write_str(value),
            ParamValue::Text(t) => f.write_str(t),
        }
    }
}

/// A slice of an operational scenario with homogeneous behavior requirements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub id: Ident,
    pub scenario: Ident,
    pub order: u32,
    pub requirements: Vec<Requirement>,
    pub desired_behavior: String,
    #[serde(default)]
    pub kinematic_params: IndexMap<String, ParamValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorRole {
    Ego,
    Pedestrian,
    Vehicle,
    Object,
    Other,
}

impl ActorRole {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ego" => ActorRole::Ego,
            "pedestrian" => ActorRole::Pedestrian,
            "vehicle" => ActorRole::Vehicle,
            "object" => ActorRole::Object,
            "other" => ActorRole::Other,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Actor {
    pub id: Ident,
    pub role: ActorRole,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub kinematic_params: IndexMap<String, ParamValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationalScenario {
    pub id: Ident,
    pub title: String,
    #[serde(default)]
    pub odd_tags: IndexMap<String, String>,
    pub actors: Vec<Actor>,
    pub segments: Vec<Segment>,
}

impl OperationalScenario {
    pub fn segment(&self, id: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    DeviationRoute,
    MalfunctionRoute,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::DeviationRoute => "deviation_route",
            Origin::MalfunctionRoute => "malfunction_route",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "deviation_route" => Some(Origin::DeviationRoute),
            "malfunction_route" => Some(Origin::MalfunctionRoute),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewStatus {
    Generated,
    NotHazardous,
    Hazardous,
}

impl ReviewStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ReviewStatus::Generated => "generated",
            ReviewStatus::NotHazardous => "not_hazardous",
            ReviewStatus::Hazardous => "hazardous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "generated" => Some(ReviewStatus::Generated),
            "not_hazardous" => Some(ReviewStatus::NotHazardous),
            "hazardous" => Some(ReviewStatus::Hazardous),
            _ => None,
        }
    }
}

impl std::fmt::Display for ReviewStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewState {
    pub status: ReviewStatus,
    #[serde(default)]
    pub rationale: String,
    #[serde(default)]
    pub reviewer: String,
    #[serde(default)]
    pub decided_at: Option<DateTime<Utc>>,
    pub version: u64,
}

impl ReviewState {
    pub fn generated() -> Self {
        ReviewState {
            status: ReviewStatus::Generated,
            rationale: String::new(),
            reviewer: String::new(),
            decided_at: None,
            version: 0,
        }
    }
}

/// One generated combination of a segment with a deviating behavior.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PotentiallyHazardousScenario {
    pub id: Ident,
    pub scenario: Ident,
    pub segment: Ident,
    pub origin: Origin,
    /// For the malfunction route this is g(source_malfunction).
    pub deviation: Ident,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_malfunction: Option<Ident>,
    pub instance_label: String,
    pub review: ReviewState,
    /// Set when the model no longer produces this row. Expert work is kept.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub orphaned: bool,
}

pub type Phs = PotentiallyHazardousScenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    OtherTrafficParticipant,
    Passengers,
    InfrastructureLaw,
    Other,
}

impl TargetKind {
    pub const ALL: [TargetKind; 4] = [
        TargetKind::OtherTrafficParticipant,
        TargetKind::Passengers,
        TargetKind::InfrastructureLaw,
        TargetKind::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetKind::OtherTrafficParticipant => "other_traffic_participant",
            TargetKind::Passengers => "passengers",
            TargetKind::InfrastructureLaw => "infrastructure_law",
            TargetKind::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        TargetKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TripleLeg {
    Source,
    Target,
    InitiatingMechanism,
}

impl TripleLeg {
    pub fn as_str(self) -> &'static str {
        match self {
            TripleLeg::Source => "source",
            TripleLeg::Target => "target",
            TripleLeg::InitiatingMechanism => "initiating_mechanism",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{} empty", .0.as_str())]
pub struct EmptyLeg(pub TripleLeg);

/// A verified hazard: source, target and initiating mechanism are all present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hazard {
    pub id: Ident,
    pub phs: Ident,
    pub source: String,
    pub target: String,
    pub initiating_mechanism: String,
    #[serde(default)]
    pub description: String,
    pub target_kind: TargetKind,
}

impl Hazard {
    /// Builds a hazard, trimming the triple legs and rejecting any that are empty.
    pub fn new(
        id: Ident,
        phs: Ident,
        source: &str,
        target: &str,
        initiating_mechanism: &str,
        description: &str,
        target_kind: TargetKind,
    ) -> Result<Self, EmptyLeg> {
        let hazard = Hazard {
            id,
            phs,
            source: source.trim().to_owned(),
            target: target.trim().to_owned(),
            initiating_mechanism: initiating_mechanism.trim().to_owned(),
            description: description.trim().to_owned(),
            target_kind,
        };
        hazard.check_triple()?;
        Ok(hazard)
    }

    pub fn check_triple(&self) -> Result<(), EmptyLeg> {
        if self.source.trim().is_empty() {
            return Err(EmptyLeg(TripleLeg::Source));
        }
        if self.target.trim().is_empty() {
            return Err(EmptyLeg(TripleLeg::Target));
        }
        if self.initiating_mechanism.trim().is_empty() {
            return Err(EmptyLeg(TripleLeg::InitiatingMechanism));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivation {
    GInverse,
}

/// Links a hazard back to a malfunction whose observable effect is the hazard's deviation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceLink {
    pub hazard: Ident,
    pub malfunction: Ident,
    pub derivation: Derivation,
}

/// Append-only audit entry for a review decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub phs: Ident,
    pub from: ReviewStatus,
    pub to: ReviewStatus,
    pub rationale: String,
    pub reviewer: String,
    pub at: DateTime<Utc>,
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub schema_version: u32,
    pub name: String,
    pub taxonomy: DeviationTaxonomy,
    #[serde(default)]
    pub catalogs: Vec<MalfunctionCatalog>,
    #[serde(default)]
    pub scenarios: Vec<OperationalScenario>,
    #[serde(default)]
    pub phs_set: Vec<Phs>,
    #[serde(default)]
    pub hazards: Vec<Hazard>,
    #[serde(default)]
    pub traces: Vec<TraceLink>,
    #[serde(default)]
    pub decision_log: Vec<DecisionRecord>,
    #[serde(default)]
    pub store_version: u64,
}

impl Project {
    pub fn new(name: impl Into<String>, taxonomy: DeviationTaxonomy) -> Self {
        Project {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            taxonomy,
            catalogs: Vec::new(),
            scenarios: Vec::new(),
            phs_set: Vec::new(),
            hazards: Vec::new(),
            traces: Vec::new(),
            decision_log: Vec::new(),
            store_version: 0,
        }
    }

    /// All segments (the set S) in scenario then segment order.
    pub fn segments(&self) -> impl Iterator<Item = (&OperationalScenario, &Segment)> {
        self.scenarios
            .iter()
            .flat_map(|sc| sc.segments.iter().map(move |seg| (sc, seg)))
    }

    pub fn segment_count(&self) -> usize {
        self.scenarios.iter().map(|s| s.segments.len()).sum()
    }

    pub fn scenario(&self, id: &str) -> Option<&OperationalScenario> {
        self.scenarios.iter().find(|s| s.id == id)
    }

    pub fn segment(&self, scenario: &str, segment: &str) -> Option<&Segment> {
        self.scenario(scenario).and_then(|s| s.segment(segment))
    }

    pub fn catalog(&self, key: &str) -> Option<&MalfunctionCatalog> {
        self.catalogs.iter().find(|c| c.id == key || c.name == key)
    }

    /// All malfunctions (the set M) across catalogs.
    pub fn malfunctions(&self) -> impl Iterator<Item = &Malfunction> {
        self.catalogs.iter().flat_map(|c| c.malfunctions())
    }

    pub fn malfunction(&self, id: &str) -> Option<&Malfunction> {
        self.malfunctions().find(|m| m.id == id)
    }

    pub fn phs(&self, id: &str) -> Option<&Phs> {
        self.phs_set.iter().find(|p| p.id == id)
    }

    pub fn phs_mut(&mut self, id: &str) -> Option<&mut Phs> {
        self.phs_set.iter_mut().find(|p| p.id == id)
    }

    pub fn hazard(&self, id: &str) -> Option<&Hazard> {
        self.hazards.iter().find(|h| h.id == id)
    }

    pub fn hazards_of<'a>(&'a self, phs: &'a str) -> impl Iterator<Item = &'a Hazard> + 'a {
        self.hazards.iter().filter(move |h| h.phs == phs)
    }

    /// Drops generated rows, hazards and traces; keeps the model.
    pub fn model_only(&self) -> Project {
        Project {
            phs_set: Vec::new(),
            hazards: Vec::new(),
            traces: Vec::new(),
            decision_log: Vec::new(),
            store_version: 0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("project serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Project, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_taxonomy_has_the_six_generic_deviations() {
        let t = DeviationTaxonomy::builtin();
        let labels: Vec<_> = t.classes.iter().map(|c| c.display_label.as_str()).collect();
        assert_eq!(
            labels,
            [
                "Absence of required acceleration",
                "Absence of required deceleration",
                "Absence of required course angle changes",
                "Improper acceleration",
                "Improper deceleration",
                "Improper course angle changes",
            ]
        );
        let absence = t
            .classes
            .iter()
            .filter(|c| c.kind == DeviationKind::Absence)
            .count();
        assert_eq!(absence, 3);
        assert_eq!(
            t.absence_for_action("decelerate").unwrap().id,
            "absent_deceleration"
        );
        assert!(t.absence_for_action("fly").is_none());
    }

    #[test]
    fn hazard_rejects_every_combination_with_an_empty_leg() {
        let legs = ["ego kinetic energy", "pedestrian", "no speed adjustment"];
        for mask in 0u8..8 {
            let pick = |i: usize| if mask & (1 << i) != 0 { legs[i] } else { "  " };
            let result = Hazard::new(
                Ident::new("h1").unwrap(),
                Ident::new("phs_x").unwrap(),
                pick(0),
                pick(1),
                pick(2),
                "",
                TargetKind::OtherTrafficParticipant,
            );
            if mask == 0b111 {
                assert!(result.is_ok());
            } else {
                let first_empty = (0..3).find(|i| mask & (1 << i) == 0).unwrap();
                let expected = [
                    TripleLeg::Source,
                    TripleLeg::Target,
                    TripleLeg::InitiatingMechanism,
                ][first_empty];
                assert_eq!(result.unwrap_err(), EmptyLeg(expected));
            }
        }
    }

    #[test]
    fn empty_leg_message_names_the_leg() {
        assert_eq!(
            EmptyLeg(TripleLeg::InitiatingMechanism).to_string(),
            "initiating_mechanism empty"
        );
    }

    #[test]
    fn param_value_serde_shapes() {
        let q = ParamValue::Quantity {
            value: "8.3".into(),
            unit: Some("mps".into()),
        };
        let json = serde_json::to_string(&q).unwrap();
        assert_eq!(json, r#"{"value":"8.3","unit":"mps"}"#);
        assert_eq!(serde_json::from_str::<ParamValue>(&json).unwrap(), q);
        let t: ParamValue = serde_json::from_str("\"urban\"").unwrap();
        assert_eq!(t, ParamValue::Text("urban".into()));
    }
}
