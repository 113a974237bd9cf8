use std::fmt::Write;

use crate::model::{Axis, DeviationKind};

use super::ast::*;

/// Canonical rendering: two-space indent, one declaration per line, LF
/// endings, a blank line between top-level declarations, source order kept.
pub fn print(tree: &SyntaxTree) -> String {
    let mut out = String::new();
    for (i, decl) in tree.decls.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match decl {
            Decl::Taxonomy(t) => taxonomy(&mut out, t),
            Decl::Catalog(c) => catalog(&mut out, c),
            Decl::Scenario(s) => scenario(&mut out, s),
        }
    }
    out
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            '\t' => q.push_str("\\t"),
            '\r' => q.push_str("\\r"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// Writes `head {` + items + `}` or `head {}` when empty.
fn block<T>(
    out: &mut String,
    level: usize,
    head: &str,
    items: &[T],
    mut item: impl FnMut(&mut String, &T),
) {
    indent(out, level);
    out.push_str(head);
    if items.is_empty() {
        out.push_str(" {}\n");
        return;
    }
    out.push_str(" {\n");
    for it in items {
        item(out, it);
    }
    indent(out, level);
    out.push_str("}\n");
}

fn taxonomy(out: &mut String, t: &TaxonomyDecl) {
    block(
        out,
        0,
        &format!("taxonomy {}", quote(&t.name.value)),
        &t.deviations,
        |out, d| {
            indent(out, 1);
            let axis = match d.axis.value {
                Axis::Longitudinal => "longitudinal",
                Axis::Lateral => "lateral",
            };
            let kind = match d.kind.value {
                DeviationKind::Absence => "absence",
                DeviationKind::Improper => "improper",
            };
            let _ = write!(out, "deviation {} axis {axis} kind {kind}", d.id.value);
            if let Some(a) = &d.action {
                let _ = write!(out, " action {}", a.value);
            }
            if let Some(l) = &d.label {
                let _ = write!(out, " label {}", quote(&l.value));
            }
            out.push_str(";\n");
        },
    );
}

fn catalog(out: &mut String, c: &CatalogDecl) {
    block(
        out,
        0,
        &format!("catalog {}", quote(&c.name.value)),
        &c.functions,
        |out, f| {
            block(
                out,
                1,
                &format!("function {}", quote(&f.name.value)),
                &f.malfunctions,
                |out, m| {
                    indent(out, 2);
                    let _ = write!(out, "malfunction {}", quote(&m.description.value));
                    if let Some(to) = &m.maps_to {
                        let _ = write!(out, " maps_to {}", to.value);
                    }
                    out.push_str(";\n");
                },
            );
        },
    );
}

fn kv(out: &mut String, level: usize, kv: &KeyValue) {
    indent(out, level);
    let value = match &kv.value.value {
        Value::Str(s) => quote(s),
        Value::Ident(s) => s.clone(),
        Value::Number {
            literal,
            unit: Some(u),
        } => format!("{literal} {u}"),
        Value::Number {
            literal,
            unit: None,
        } => literal.clone(),
    };
    let _ = writeln!(out, "{}: {value};", kv.key.value);
}

fn scenario(out: &mut String, s: &ScenarioDecl) {
    indent(out, 0);
    let _ = write!(out, "scenario {}", quote(&s.title.value));
    let empty = s.odd.is_none() && s.actors.is_none() && s.segments.is_empty();
    if empty {
        out.push_str(" {}\n");
        return;
    }
    out.push_str(" {\n");
    if let Some(odd) = &s.odd {
        block(out, 1, "odd", odd, |out, item| kv(out, 2, item));
    }
    if let Some(actors) = &s.actors {
        block(out, 1, "actors", actors, |out, a| {
            let head = format!("{} {}", if a.ego { "ego" } else { "actor" }, a.id.value);
            block(out, 2, &head, &a.props, |out, item| kv(out, 3, item));
        });
    }
    for seg in &s.segments {
        block(
            out,
            1,
            &format!("segment {}", seg.id.value),
            &seg.items,
            |out, item| match item {
                SegmentItem::Requires { action, label, .. } => {
                    indent(out, 2);
                    let _ = write!(out, "requires {}", action.value);
                    if let Some(l) = label {
                        let _ = write!(out, " label {}", quote(&l.value));
                    }
                    out.push_str(";\n");
                }
                SegmentItem::Desired(d) => {
                    indent(out, 2);
                    let _ = writeln!(out, "desired {};", quote(&d.value));
                }
                SegmentItem::Property(p) => kv(out, 2, p),
            },
        );
    }
    out.push_str("}\n");
}
