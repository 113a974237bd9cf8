#![allow(dead_code)]

pub mod ast_gen;

use std::collections::BTreeSet;
use std::fmt::Write;
use std::path::PathBuf;

use hazlab::hazlang::{check_sources, SourceFile};
use hazlab::model::Project;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn project_from(sources: &[(&str, &str)]) -> Project {
    let files: Vec<_> = sources
        .iter()
        .map(|(p, c)| SourceFile::new(*p, *c))
        .collect();
    let out = check_sources(&files, "test");
    out.project.unwrap_or_else(|| panic!("{:#?}", out.findings))
}

pub fn fixture_project(name: &str) -> Project {
    project_from(&[(name, &fixture_text(name))])
}

/// Hand-written expectations for the built-in taxonomy.
pub const BUILTIN: [(&str, &str, Option<&str>, &str); 6] = [
    (
        "absent_acceleration",
        "absence",
        Some("accelerate"),
        "Absence of required acceleration",
    ),
    (
        "absent_deceleration",
        "absence",
        Some("decelerate"),
        "Absence of required deceleration",
    ),
    (
        "absent_course_change",
        "absence",
        Some("change_course"),
        "Absence of required course angle changes",
    ),
    (
        "improper_acceleration",
        "improper",
        None,
        "Improper acceleration",
    ),
    (
        "improper_deceleration",
        "improper",
        None,
        "Improper deceleration",
    ),
    (
        "improper_course_change",
        "improper",
        None,
        "Improper course angle changes",
    ),
];

#[derive(Debug, Clone)]
pub struct RClass {
    pub id: String,
    pub absence: bool,
    pub action: Option<String>,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct RSegment {
    pub id: String,
    pub requires: Vec<(String, Option<String>)>,
}

#[derive(Debug, Clone)]
pub struct RScenario {
    pub title: String,
    pub id: String,
    pub segments: Vec<RSegment>,
}

/// A random model described independently of the crate's own types.
#[derive(Debug, Clone)]
pub struct RandomModel {
    pub custom_taxonomy: bool,
    pub classes: Vec<RClass>,
    pub scenarios: Vec<RScenario>,
    /// (malfunction description, slug id, mapped class index)
    pub malfunctions: Vec<(String, String, Option<usize>)>,
}

const WORDS: [&str; 8] = [
    "speed",
    "gap",
    "lateral offset",
    "yaw",
    "stop",
    "merge",
    "headway",
    "clearance",
];

impl RandomModel {
    pub fn generate(rng: &mut impl Rng) -> Self {
        let custom = rng.gen_bool(0.3);
        Self::generate_bounded(rng, 12, 24, custom)
    }

    /// At most `max_m` malfunctions and `max_s` segments in total.
    pub fn generate_bounded(
        rng: &mut impl Rng,
        max_m: usize,
        max_s: usize,
        custom_taxonomy: bool,
    ) -> Self {
        let classes: Vec<RClass> = if custom_taxonomy {
            let n_abs = rng.gen_range(0..=4);
            let n_imp = rng.gen_range(0..=3);
            let mut v = Vec::new();
            for i in 0..n_abs {
                v.push(RClass {
                    id: format!("abs_{i}"),
                    absence: true,
                    action: Some(format!("act_{i}")),
                    label: format!("Absence of required act {i}"),
                });
            }
            for i in 0..n_imp {
                v.push(RClass {
                    id: format!("imp_{i}"),
                    absence: false,
                    action: None,
                    label: format!("Improper act {i}"),
                });
            }
            v.shuffle(rng);
            if v.is_empty() {
                v.push(RClass {
                    id: "imp_x".into(),
                    absence: false,
                    action: None,
                    label: "Improper x".into(),
                });
            }
            v
        } else {
            BUILTIN
                .iter()
                .map(|(id, kind, action, label)| RClass {
                    id: id.to_string(),
                    absence: *kind == "absence",
                    action: action.map(str::to_owned),
                    label: label.to_string(),
                })
                .collect()
        };
        let actions: Vec<String> = classes.iter().filter_map(|c| c.action.clone()).collect();
        let mut remaining = rng.gen_range(0..=max_s);
        let mut scenarios = Vec::new();
        while remaining > 0 {
            let i = scenarios.len();
            let n = rng.gen_range(1..=remaining.min(6));
            remaining -= n;
            let segments = (0..n)
                .map(|j| {
                    let mut acts = actions.clone();
                    acts.shuffle(rng);
                    let k = rng.gen_range(0..=acts.len());
                    RSegment {
                        id: format!("seg_{j}"),
                        requires: acts
                            .into_iter()
                            .take(k)
                            .map(|a| {
                                let label = rng
                                    .gen_bool(0.5)
                                    .then(|| WORDS.choose(rng).unwrap().to_string());
                                (a, label)
                            })
                            .collect(),
                    }
                })
                .collect();
            scenarios.push(RScenario {
                title: format!("Scenario {i}"),
                id: format!("scenario_{i}"),
                segments,
            });
        }
        let malfunctions = (0..rng.gen_range(0..=max_m))
            .map(|i| {
                let target = if rng.gen_bool(0.85) {
                    Some(rng.gen_range(0..classes.len()))
                } else {
                    None
                };
                (format!("Fault {i}"), format!("fault_{i}"), target)
            })
            .collect();
        RandomModel {
            custom_taxonomy,
            classes,
            scenarios,
            malfunctions,
        }
    }

    pub fn to_hzl(&self) -> String {
        let mut s = String::new();
        if self.custom_taxonomy {
            writeln!(s, "taxonomy \"random\" {{").unwrap();
            for c in &self.classes {
                write!(
                    s,
                    "  deviation {} axis longitudinal kind {}",
                    c.id,
                    if c.absence { "absence" } else { "improper" }
                )
                .unwrap();
                if let Some(a) = &c.action {
                    write!(s, " action {a}").unwrap();
                }
                writeln!(s, " label \"{}\";", c.label).unwrap();
            }
            writeln!(s, "}}").unwrap();
        }
        for sc in &self.scenarios {
            writeln!(s, "scenario \"{}\" {{", sc.title).unwrap();
            for seg in &sc.segments {
                writeln!(s, "  segment {} {{", seg.id).unwrap();
                for (a, l) in &seg.requires {
                    match l {
                        Some(l) => writeln!(s, "    requires {a} label \"{l}\";").unwrap(),
                        None => writeln!(s, "    requires {a};").unwrap(),
                    }
                }
                writeln!(s, "    desired \"keep going\";\n  }}").unwrap();
            }
            writeln!(s, "}}").unwrap();
        }
        if !self.malfunctions.is_empty() {
            writeln!(s, "catalog \"Random\" {{\n  function \"f\" {{").unwrap();
            for (d, _, t) in &self.malfunctions {
                match t {
                    Some(i) => writeln!(
                        s,
                        "    malfunction \"{d}\" maps_to {};",
                        self.classes[*i].id
                    )
                    .unwrap(),
                    None => writeln!(s, "    malfunction \"{d}\";").unwrap(),
                }
            }
            writeln!(s, "  }}\n}}").unwrap();
        }
        s
    }

    pub fn segment_count(&self) -> usize {
        self.scenarios.iter().map(|s| s.segments.len()).sum()
    }

    /// Brute force over segments x classes: improper classes always apply,
    /// absence classes only where the segment requires their action.
    pub fn oracle_deviation_route(&self) -> BTreeSet<(String, String, String, String)> {
        let mut out = BTreeSet::new();
        for sc in &self.scenarios {
            for seg in &sc.segments {
                for c in &self.classes {
                    let label = if !c.absence {
                        Some(c.label.clone())
                    } else {
                        seg.requires
                            .iter()
                            .find(|(a, _)| Some(a) == c.action.as_ref())
                            .map(|(_, l)| match l {
                                Some(l) => format!("Absence of required {l}"),
                                None => c.label.clone(),
                            })
                    };
                    if let Some(label) = label {
                        out.insert((sc.id.clone(), seg.id.clone(), c.id.clone(), label));
                    }
                }
            }
        }
        out
    }

    /// Distinct (segment, g(m)) pairs over mapped malfunctions.
    pub fn oracle_behaviors(&self) -> BTreeSet<(String, String, String)> {
        let mut out = BTreeSet::new();
        for sc in &self.scenarios {
            for seg in &sc.segments {
                for (_, _, t) in &self.malfunctions {
                    if let Some(i) = t {
                        out.insert((sc.id.clone(), seg.id.clone(), self.classes[*i].id.clone()));
                    }
                }
            }
        }
        out
    }
}

/// One scenario with `segments` segments, each requiring all three built-in
/// actions, and a catalog of `malfunctions` entries spread over the classes.
pub fn scale_model(malfunctions: usize, segments: usize) -> String {
    let mut s = String::from("scenario \"Scale\" {\n");
    for i in 0..segments {
        writeln!(
            s,
            "  segment s{i} {{\n    requires accelerate;\n    requires decelerate;\n    requires change_course;\n    desired \"segment {i}\";\n  }}"
        )
        .unwrap();
    }
    s.push_str("}\ncatalog \"Scale\" {\n  function \"f\" {\n");
    for i in 0..malfunctions {
        writeln!(
            s,
            "    malfunction \"malfunction {i}\" maps_to {};",
            BUILTIN[i % 6].0
        )
        .unwrap();
    }
    s.push_str("  }\n}\n");
    s
}
