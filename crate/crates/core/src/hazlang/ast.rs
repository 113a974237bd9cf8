use crate::model::{Axis, DeviationKind};

use super::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned<T> {
    pub value: T,
    pub span: Span,
}

impl<T> Spanned<T> {
    pub fn new(value: T, span: Span) -> Self {
        Spanned { value, span }
    }

    /// A node with no source location, for trees built in code.
    pub fn bare(value: T) -> Self {
        Spanned {
            value,
            span: Span::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SyntaxTree {
    pub decls: Vec<Decl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Taxonomy(TaxonomyDecl),
    Catalog(CatalogDecl),
    Scenario(ScenarioDecl),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyDecl {
    pub name: Spanned<String>,
    pub deviations: Vec<DeviationDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationDecl {
    pub id: Spanned<String>,
    pub axis: Spanned<Axis>,
    pub kind: Spanned<DeviationKind>,
    pub action: Option<Spanned<String>>,
    pub label: Option<Spanned<String>>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogDecl {
    pub name: Spanned<String>,
    pub functions: Vec<FunctionDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDecl {
    pub name: Spanned<String>,
    pub malfunctions: Vec<MalfunctionDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalfunctionDecl {
    pub description: Spanned<String>,
    pub maps_to: Option<Spanned<String>>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioDecl {
    pub title: Spanned<String>,
    pub odd: Option<Vec<KeyValue>>,
    pub actors: Option<Vec<ActorDecl>>,
    pub segments: Vec<SegmentDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActorDecl {
    /// Declared with the `ego` keyword rather than `actor`.
    pub ego: bool,
    pub id: Spanned<String>,
    pub props: Vec<KeyValue>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentDecl {
    pub id: Spanned<String>,
    pub items: Vec<SegmentItem>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentItem {
    Requires {
        action: Spanned<String>,
        label: Option<Spanned<String>>,
        span: Span,
    },
    Desired(Spanned<String>),
    Property(KeyValue),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyValue {
    pub key: Spanned<String>,
    pub value: Spanned<Value>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Str(String),
    /// Decimal literal kept verbatim, with an optional unit suffix.
    Number {
        literal: String,
        unit: Option<String>,
    },
    Ident(String),
}

impl Value {
    pub fn text(&self) -> String {
        match self {
            Value::Str(s) | Value::Ident(s) => s.clone(),
            Value::Number {
                literal,
                unit: Some(u),
            } => format!("{literal} {u}"),
            Value::Number {
                literal,
                unit: None,
            } => literal.clone(),
        }
    }
}

impl SyntaxTree {
    /// Copy of the tree with every span zeroed, for structural comparison.
    pub fn without_spans(&self) -> SyntaxTree {
        let mut t = self.clone();
        t.strip_spans();
        t
    }

    pub fn strip_spans(&mut self) {
        fn s<T>(n: &mut Spanned<T>) {
            n.span = Span::default();
        }
        fn kvs(list: &mut [KeyValue]) {
            for kv in list {
                kv.span = Span::default();
                s(&mut kv.key);
                s(&mut kv.value);
            }
        }
        for decl in &mut self.decls {
            match decl {
                Decl::Taxonomy(t) => {
                    t.span = Span::default();
                    s(&mut t.name);
                    for d in &mut t.deviations {
                        d.span = Span::default();
                        s(&mut d.id);
                        s(&mut d.axis);
                        s(&mut d.kind);
                        d.action.as_mut().map(s);
                        d.label.as_mut().map(s);
                    }
                }
                Decl::Catalog(c) => {
                    c.span = Span::default();
                    s(&mut c.name);
                    for f in &mut c.functions {
                        f.span = Span::default();
                        s(&mut f.name);
                        for m in &mut f.malfunctions {
                            m.span = Span::default();
                            s(&mut m.description);
                            m.maps_to.as_mut().map(s);
                        }
                    }
                }
                Decl::Scenario(sc) => {
                    sc.span = Span::default();
                    s(&mut sc.title);
                    if let Some(odd) = &mut sc.odd {
                        kvs(odd);
                    }
                    for a in sc.actors.iter_mut().flatten() {
                        a.span = Span::default();
                        s(&mut a.id);
                        kvs(&mut a.props);
                    }
                    for seg in &mut sc.segments {
                        seg.span = Span::default();
                        s(&mut seg.id);
                        for item in &mut seg.items {
                            match item {
                                SegmentItem::Requires {
                                    action,
                                    label,
                                    span,
                                } => {
                                    *span = Span::default();
                                    s(action);
                                    label.as_mut().map(s);
                                }
                                SegmentItem::Desired(d) => s(d),
                                SegmentItem::Property(kv) => kvs(std::slice::from_mut(kv)),
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn scenarios(&self) -> impl Iterator<Item = &ScenarioDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Scenario(s) => Some(s),
            _ => None,
        })
    }

    pub fn catalogs(&self) -> impl Iterator<Item = &CatalogDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Catalog(c) => Some(c),
            _ => None,
        })
    }

    pub fn taxonomies(&self) -> impl Iterator<Item = &TaxonomyDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Taxonomy(t) => Some(t),
            _ => None,
        })
    }
}
