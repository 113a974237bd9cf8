//! Grammar-directed generator for syntactically valid trees.

use hazlab::hazlang::*;
use hazlab::model::{Axis, DeviationKind};
use proptest::collection::vec;
use proptest::prelude::*;

fn b<T>(v: T) -> Spanned<T> {
    Spanned::bare(v)
}

fn text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 ,.;:{}#\"\\\\\n\t\r\u{e7}\u{20ac}\u{1F697}-]{0,16}"
}

fn value() -> impl Strategy<Value = Value> {
    prop_oneof![
        text().prop_map(Value::Str),
        (
            "-?[0-9]{1,4}(\\.[0-9]{1,3})?",
            proptest::option::of("[a-z][a-z_]{0,4}")
        )
            .prop_map(|(literal, unit)| Value::Number {
                literal,
                unit: unit.map(|u| format!("u_{u}"))
            }),
        "[a-z][a-z0-9_]{0,6}".prop_map(|s| Value::Ident(format!("v_{s}"))),
    ]
}

fn kvs(max: usize) -> impl Strategy<Value = Vec<KeyValue>> {
    vec(value(), 0..max).prop_map(|vals| {
        vals.into_iter()
            .enumerate()
            .map(|(i, v)| KeyValue {
                key: b(format!("k{i}")),
                value: b(v),
                span: Span::default(),
            })
            .collect()
    })
}

fn segment(i: usize) -> impl Strategy<Value = SegmentDecl> {
    (
        vec(proptest::option::of(text()), 0..3),
        proptest::option::of(text()),
        kvs(3),
    )
        .prop_map(move |(reqs, desired, props)| {
            let mut items: Vec<SegmentItem> = reqs
                .into_iter()
                .enumerate()
                .map(|(j, label)| SegmentItem::Requires {
                    action: b(format!("a{j}")),
                    label: label.map(b),
                    span: Span::default(),
                })
                .collect();
            if let Some(d) = desired {
                items.push(SegmentItem::Desired(b(d)));
            }
            items.extend(props.into_iter().map(SegmentItem::Property));
            SegmentDecl {
                id: b(format!("seg_{i}")),
                items,
                span: Span::default(),
            }
        })
}

fn scenario() -> impl Strategy<Value = ScenarioDecl> {
    (
        text(),
        proptest::option::of(kvs(3)),
        proptest::option::of(vec((any::<bool>(), kvs(3)), 0..3)),
        (0usize..4).prop_flat_map(|n| (0..n).map(segment).collect::<Vec<_>>()),
    )
        .prop_map(|(title, odd, actors, segments)| ScenarioDecl {
            title: b(title),
            odd,
            actors: actors.map(|list| {
                list.into_iter()
                    .enumerate()
                    .map(|(i, (ego, props))| ActorDecl {
                        ego,
                        id: b(format!("actor_{i}")),
                        props,
                        span: Span::default(),
                    })
                    .collect()
            }),
            segments,
            span: Span::default(),
        })
}

fn catalog() -> impl Strategy<Value = CatalogDecl> {
    (
        text(),
        vec(
            (
                text(),
                vec((text(), proptest::option::of("[a-z]{1,6}")), 0..4),
            ),
            0..3,
        ),
    )
        .prop_map(|(name, fs)| CatalogDecl {
            name: b(name),
            functions: fs
                .into_iter()
                .map(|(fname, ms)| FunctionDecl {
                    name: b(fname),
                    malfunctions: ms
                        .into_iter()
                        .map(|(d, m)| MalfunctionDecl {
                            description: b(d),
                            maps_to: m.map(|m| b(format!("c_{m}"))),
                            span: Span::default(),
                        })
                        .collect(),
                    span: Span::default(),
                })
                .collect(),
            span: Span::default(),
        })
}

fn taxonomy() -> impl Strategy<Value = TaxonomyDecl> {
    (
        text(),
        vec(
            (
                any::<bool>(),
                any::<bool>(),
                proptest::option::of("[a-z]{1,5}"),
                proptest::option::of(text()),
            ),
            0..5,
        ),
    )
        .prop_map(|(name, ds)| TaxonomyDecl {
            name: b(name),
            deviations: ds
                .into_iter()
                .enumerate()
                .map(|(i, (lat, abs, action, label))| DeviationDecl {
                    id: b(format!("d{i}")),
                    axis: b(if lat {
                        Axis::Lateral
                    } else {
                        Axis::Longitudinal
                    }),
                    kind: b(if abs {
                        DeviationKind::Absence
                    } else {
                        DeviationKind::Improper
                    }),
                    action: action.map(|a| b(format!("x_{a}"))),
                    label: label.map(b),
                    span: Span::default(),
                })
                .collect(),
            span: Span::default(),
        })
}

pub fn tree() -> impl Strategy<Value = SyntaxTree> {
    vec(
        prop_oneof![
            taxonomy().prop_map(Decl::Taxonomy),
            catalog().prop_map(Decl::Catalog),
            scenario().prop_map(Decl::Scenario),
        ],
        0..4,
    )
    .prop_map(|decls| SyntaxTree { decls })
}

/// Raw bytes, half of them drawn from printable ASCII so the lexer gets past
/// the UTF-8 check.
pub fn fuzz_input() -> impl Strategy<Value = Vec<u8>> {
    prop_oneof![
        vec(any::<u8>(), 0..256),
        "[ -~\n\t]{0,256}".prop_map(String::into_bytes),
    ]
}
