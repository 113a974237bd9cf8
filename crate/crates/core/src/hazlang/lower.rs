use std::collections::HashMap;

use indexmap::IndexMap;

use crate::model::{
    is_valid_ident, Actor, ActorRole, DeviationClass, DeviationKind, DeviationTaxonomy, Ident,
    ItemFunction, Malfunction, MalfunctionCatalog, OperationalScenario, ParamValue, Project,
    Requirement, Segment,
};

use super::ast::*;
use super::{Diagnostic, Span};

/// Model content resolved from one or more syntax trees.
#[derive(Debug, Clone, PartialEq)]
pub struct Lowered {
    pub taxonomy: DeviationTaxonomy,
    /// False when the built-in taxonomy was injected.
    pub taxonomy_declared: bool,
    pub catalogs: Vec<MalfunctionCatalog>,
    pub scenarios: Vec<OperationalScenario>,
}

impl Lowered {
    pub fn into_project(self, name: impl Into<String>) -> Project {
        let mut p = Project::new(name, self.taxonomy);
        p.catalogs = self.catalogs;
        p.scenarios = self.scenarios;
        p
    }
}

/// Resolves references in a single tree. The file's own taxonomy is used if
/// it declares one, otherwise `taxonomy_default`.
pub fn lower(
    tree: &SyntaxTree,
    taxonomy_default: &DeviationTaxonomy,
) -> (Lowered, Vec<Diagnostic>) {
    let (lowered, diags) = lower_many(&[tree], taxonomy_default);
    (lowered, diags.into_iter().map(|(_, d)| d).collect())
}

/// Lowers several files into one model. At most one taxonomy may be declared
/// across all of them. Diagnostics carry the index of the file they refer to.
pub fn lower_many(
    trees: &[&SyntaxTree],
    taxonomy_default: &DeviationTaxonomy,
) -> (Lowered, Vec<(usize, Diagnostic)>) {
    let mut cx = Cx::default();

    let mut declared = None;
    for (file, tree) in trees.iter().enumerate() {
        cx.file = file;
        for decl in tree.taxonomies() {
            if declared.is_some() {
                cx.error(
                    "E035",
                    decl.name.span,
                    "only one taxonomy may be declared per project",
                );
            } else {
                declared = Some(cx.taxonomy(decl));
            }
        }
    }
    let taxonomy_declared = declared.is_some();
    let taxonomy = declared.unwrap_or_else(|| taxonomy_default.clone());

    let mut catalogs = Vec::new();
    let mut scenarios = Vec::new();
    for (file, tree) in trees.iter().enumerate() {
        cx.file = file;
        for decl in &tree.decls {
            match decl {
                Decl::Taxonomy(_) => {}
                Decl::Catalog(c) => {
                    if let Some(c) = cx.catalog(c, &taxonomy) {
                        catalogs.push(c);
                    }
                }
                Decl::Scenario(s) => {
                    if let Some(s) = cx.scenario(s, &taxonomy) {
                        scenarios.push(s);
                    }
                }
            }
        }
    }
    (
        Lowered {
            taxonomy,
            taxonomy_declared,
            catalogs,
            scenarios,
        },
        cx.diags,
    )
}

#[derive(Default)]
struct Cx {
    file: usize,
    diags: Vec<(usize, Diagnostic)>,
    catalog_ids: HashMap<Ident, Span>,
    malfunction_ids: HashMap<Ident, Span>,
    scenario_ids: HashMap<Ident, Span>,
}

impl Cx {
    fn error(&mut self, code: &str, span: Span, msg: impl Into<String>) {
        self.diags
            .push((self.file, Diagnostic::error(code, span, msg)));
    }

    fn ident(&mut self, name: &Spanned<String>, what: &str) -> Option<Ident> {
        if is_valid_ident(&name.value) {
            Some(Ident::new(name.value.clone()).expect("checked"))
        } else {
            self.error(
                "E033",
                name.span,
                format!("{what} `{}` must match [a-z][a-z0-9_]*", name.value),
            );
            None
        }
    }

    fn slug(&mut self, name: &Spanned<String>, what: &str, seen: Seen) -> Option<Ident> {
        let Some(id) = Ident::slug(&name.value) else {
            self.error(
                "E033",
                name.span,
                format!("{what} name `{}` yields no identifier", name.value),
            );
            return None;
        };
        let table = match seen {
            Seen::Catalog => &mut self.catalog_ids,
            Seen::Malfunction => &mut self.malfunction_ids,
            Seen::Scenario => &mut self.scenario_ids,
        };
        if let Some(first) = table.get(&id) {
            let msg = format!(
                "duplicate {what} identifier `{id}` (first declared at line {})",
                first.line
            );
            self.error("E010", name.span, msg);
            return None;
        }
        table.insert(id.clone(), name.span);
        Some(id)
    }

    fn taxonomy(&mut self, decl: &TaxonomyDecl) -> DeviationTaxonomy {
        if decl.deviations.is_empty() {
            self.error(
                "E035",
                decl.name.span,
                "taxonomy declares no deviation classes",
            );
        }
        let mut classes = Vec::new();
        let mut absence_actions: HashMap<String, Span> = HashMap::new();
        for d in &decl.deviations {
            let Some(id) = self.ident(&d.id, "deviation identifier") else {
                continue;
            };
            let action = match &d.action {
                Some(a) => self.ident(a, "action"),
                None => None,
            };
            if d.kind.value == DeviationKind::Absence {
                match &d.action {
                    None => self.error(
                        "E034",
                        d.id.span,
                        format!("absence deviation `{id}` must name the required action"),
                    ),
                    Some(a) => {
                        if absence_actions.insert(a.value.clone(), a.span).is_some() {
                            self.error(
                                "E034",
                                a.span,
                                format!(
                                    "action `{}` already claimed by another absence deviation",
                                    a.value
                                ),
                            );
                        }
                    }
                }
            }
            classes.push(DeviationClass {
                display_label: d
                    .label
                    .as_ref()
                    .map_or_else(|| id.to_string(), |l| l.value.clone()),
                id,
                axis: d.axis.value,
                kind: d.kind.value,
                action,
            });
        }
        DeviationTaxonomy {
            name: decl.name.value.clone(),
            classes,
        }
    }

    fn catalog(
        &mut self,
        decl: &CatalogDecl,
        taxonomy: &DeviationTaxonomy,
    ) -> Option<MalfunctionCatalog> {
        let id = self.slug(&decl.name, "catalog", Seen::Catalog);
        let mut functions = Vec::new();
        let mut function_ids: HashMap<Ident, Span> = HashMap::new();
        for f in &decl.functions {
            let Some(fid) = Ident::slug(&f.name.value) else {
                self.error(
                    "E033",
                    f.name.span,
                    format!("function name `{}` yields no identifier", f.name.value),
                );
                continue;
            };
            if let Some(first) = function_ids.insert(fid.clone(), f.name.span) {
                self.error(
                    "E010",
                    f.name.span,
                    format!(
                        "duplicate function `{fid}` (first declared at line {})",
                        first.line
                    ),
                );
            }
            let mut malfunctions = Vec::new();
            for m in &f.malfunctions {
                let mid = self.slug(&m.description, "malfunction", Seen::Malfunction);
                let maps_to = match &m.maps_to {
                    None => None,
                    Some(target) => {
                        if taxonomy.class(&target.value).is_some() {
                            Ident::new(target.value.clone()).ok()
                        } else {
                            self.error(
                                "E031",
                                target.span,
                                format!("unknown deviation class `{}`", target.value),
                            );
                            None
                        }
                    }
                };
                if let Some(mid) = mid {
                    malfunctions.push(Malfunction {
                        id: mid,
                        description: m.description.value.clone(),
                        maps_to,
                        parent_function: fid.clone(),
                    });
                }
            }
            functions.push(ItemFunction {
                id: fid,
                name: f.name.value.clone(),
                malfunctions,
            });
        }
        Some(MalfunctionCatalog {
            id: id?,
            name: decl.name.value.clone(),
            functions,
        })
    }

    fn scenario(
        &mut self,
        decl: &ScenarioDecl,
        taxonomy: &DeviationTaxonomy,
    ) -> Option<OperationalScenario> {
        let id = self.slug(&decl.title, "scenario", Seen::Scenario);

        let odd_tags: IndexMap<String, String> = decl
            .odd
            .iter()
            .flatten()
            .map(|kv| (kv.key.value.clone(), kv.value.value.text()))
            .collect();

        let mut actors = Vec::new();
        for a in decl.actors.iter().flatten() {
            if let Some(actor) = self.actor(a) {
                actors.push(actor);
            }
        }
        let egos: Vec<&ActorDecl> = decl
            .actors
            .iter()
            .flatten()
            .filter(|a| {
                a.ego
                    || a.props
                        .iter()
                        .any(|kv| kv.key.value == "role" && kv.value.value.text() == "ego")
            })
            .collect();
        if egos.len() > 1 {
            self.error(
                "E036",
                egos[1].id.span,
                "scenario declares more than one ego actor",
            );
        }
        if egos.is_empty() && !actors.iter().any(|a: &Actor| a.role == ActorRole::Ego) {
            let ego_id = if actors.iter().any(|a| a.id == "ego") {
                "ego_vehicle"
            } else {
                "ego"
            };
            actors.insert(
                0,
                Actor {
                    id: Ident::new(ego_id).expect("static"),
                    role: ActorRole::Ego,
                    description: String::new(),
                    kinematic_params: IndexMap::new(),
                },
            );
        }

        if decl.segments.is_empty() {
            self.error("E037", decl.title.span, "scenario has no segments");
        }
        let mut segments = Vec::new();
        let mut last_order: Option<u32> = None;
        let mut used_orders: HashMap<u32, Span> = HashMap::new();
        for seg in &decl.segments {
            let seg_id = self.ident(&seg.id, "segment identifier");
            let mut requirements = Vec::new();
            let mut desired: Option<&Spanned<String>> = None;
            let mut params = IndexMap::new();
            let mut explicit_order: Option<(u32, Span)> = None;
            for item in &seg.items {
                match item {
                    SegmentItem::Requires { action, label, .. } => {
                        match taxonomy.absence_for_action(&action.value) {
                            Some(class) => requirements.push(Requirement {
                                action: class
                                    .action
                                    .clone()
                                    .expect("absence classes name an action"),
                                axis: class.axis,
                                label: label.as_ref().map(|l| l.value.clone()),
                            }),
                            None => self.error(
                                "E030",
                                action.span,
                                format!(
                                    "unknown action `{}`: no absence deviation class requires it",
                                    action.value
                                ),
                            ),
                        }
                    }
                    SegmentItem::Desired(text) => desired = Some(text),
                    SegmentItem::Property(kv) if kv.key.value == "order" => match &kv.value.value {
                        Value::Number {
                            literal,
                            unit: None,
                        } if literal.parse::<u32>().is_ok() => {
                            explicit_order =
                                Some((literal.parse().expect("checked"), kv.value.span));
                        }
                        _ => self.error(
                            "E032",
                            kv.value.span,
                            "segment order must be a non-negative integer",
                        ),
                    },
                    SegmentItem::Property(kv) => {
                        params.insert(kv.key.value.clone(), param(&kv.value.value));
                    }
                }
            }
            let desired_behavior = match desired {
                Some(d) if !d.value.trim().is_empty() => d.value.clone(),
                Some(d) => {
                    self.error("E038", d.span, "segment desired behavior is empty");
                    String::new()
                }
                None => {
                    self.error("E038", seg.id.span, "segment has no desired behavior");
                    String::new()
                }
            };
            let (order, order_span) = match explicit_order {
                Some(o) => o,
                None => (last_order.map_or(0, |p| p.saturating_add(1)), seg.id.span),
            };
            if let Some(first) = used_orders.get(&order) {
                self.error(
                    "E032",
                    order_span,
                    format!(
                        "duplicate segment order {order} (first used at line {})",
                        first.line
                    ),
                );
            } else if last_order.is_some_and(|p| order <= p) {
                self.error(
                    "E032",
                    order_span,
                    format!("segment order {order} must exceed the preceding segment's"),
                );
            }
            used_orders.entry(order).or_insert(order_span);
            last_order = Some(last_order.map_or(order, |p| p.max(order)));

            if let (Some(seg_id), Some(sc_id)) = (seg_id, id.clone()) {
                segments.push(Segment {
                    id: seg_id,
                    scenario: sc_id,
                    order,
                    requirements,
                    desired_behavior,
                    kinematic_params: params,
                });
            }
        }

        Some(OperationalScenario {
            id: id?,
            title: decl.title.value.clone(),
            odd_tags,
            actors,
            segments,
        })
    }

    fn actor(&mut self, decl: &ActorDecl) -> Option<Actor> {
        let id = self.ident(&decl.id, "actor identifier");
        let mut role = if decl.ego {
            ActorRole::Ego
        } else {
            ActorRole::Other
        };
        let mut description = String::new();
        let mut params = IndexMap::new();
        for kv in &decl.props {
            match kv.key.value.as_str() {
                "role" => {
                    let text = kv.value.value.text();
                    match ActorRole::parse(&text) {
                        Some(r) if decl.ego && r != ActorRole::Ego => {
                            self.error("E039", kv.value.span, "an `ego` actor cannot take another role")
                        }
                        Some(r) => role = r,
                        None => self.error(
                            "E039",
                            kv.value.span,
                            format!("unknown actor role `{text}` (expected ego, pedestrian, vehicle, object or other)"),
                        ),
                    }
                }
                "description" => description = kv.value.value.text(),
                key => {
                    params.insert(key.to_owned(), param(&kv.value.value));
                }
            }
        }
        Some(Actor {
            id: id?,
            role,
            description,
            kinematic_params: params,
        })
    }
}

enum Seen {
    Catalog,
    Malfunction,
    Scenario,
}

fn param(v: &Value) -> ParamValue {
    match v {
        Value::Number { literal, unit } => ParamValue::Quantity {
            value: literal.clone(),
            unit: unit.clone(),
        },
        Value::Str(s) | Value::Ident(s) => ParamValue::Text(s.clone()),
    }
}
