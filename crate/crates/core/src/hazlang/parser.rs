use std::collections::HashMap;

use crate::model::{Axis, DeviationKind};

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{has_errors, Diagnostic, SourceFile, Span};

/// Parses a source file. Returns a tree only when no error was reported;
/// warnings may accompany a tree. Never panics.
pub fn parse(src: &SourceFile) -> (Option<SyntaxTree>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let toks = lex(src, &mut diags);
    let mut p = Parser {
        src,
        toks,
        pos: 0,
        diags,
    };
    let tree = p.file();
    let diags = p.diags;
    if has_errors(&diags) {
        (None, diags)
    } else {
        (Some(tree), diags)
    }
}

pub fn parse_str(text: &str) -> (Option<SyntaxTree>, Vec<Diagnostic>) {
    parse(&SourceFile::new("<input>", text))
}

pub fn parse_bytes(bytes: &[u8]) -> (Option<SyntaxTree>, Vec<Diagnostic>) {
    match SourceFile::from_bytes("<input>", bytes) {
        Ok(src) => parse(&src),
        Err(d) => (None, vec![d]),
    }
}

/// Marker for a statement that failed; the caller recovers.
struct Failed;

type PResult<T> = Result<T, Failed>;

struct Parser<'s> {
    src: &'s SourceFile,
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

/// Tracks first occurrences within one block to report E010.
#[derive(Default)]
struct Seen(HashMap<String, Span>);

impl Seen {
    fn check(&mut self, p: &mut Parser<'_>, what: &str, name: &Spanned<String>) {
        if let Some(first) = self.0.get(&name.value) {
            let msg = format!(
                "duplicate {what} `{}` (first declared at line {})",
                name.value, first.line
            );
            p.diags.push(Diagnostic::error("E010", name.span, msg));
        } else {
            self.0.insert(name.value.clone(), name.span);
        }
    }
}

impl<'s> Parser<'s> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn cur_span(&self) -> Span {
        let t = &self.toks[self.pos];
        self.src.span(t.start, t.end)
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].end
        }
    }

    fn span_from(&self, start: usize) -> Span {
        self.src.span(start, self.prev_end().max(start))
    }

    fn unexpected(&mut self, expected: &str) -> Failed {
        let found = self.peek().describe();
        let span = self.cur_span();
        self.diags.push(Diagnostic::error(
            "E002",
            span,
            format!("expected {expected}, found {found}"),
        ));
        Failed
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.at_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<Spanned<String>> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.cur_span();
                self.bump();
                Ok(Spanned::new(s, span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn expect_string(&mut self, what: &str) -> PResult<Spanned<String>> {
        match self.peek().clone() {
            Tok::Str(s) => {
                let span = self.cur_span();
                self.bump();
                Ok(Spanned::new(s, span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    /// Skips to the end of the current statement: past the next `;`, or past a
    /// balanced `{ ... }`, or up to (not past) the enclosing block's `}`.
    fn recover(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Semi if depth == 0 => {
                    self.bump();
                    return;
                }
                Tok::LBrace => {
                    depth += 1;
                    self.bump();
                }
                Tok::RBrace if depth == 0 => return,
                Tok::RBrace => {
                    depth -= 1;
                    self.bump();
                    if depth == 0 {
                        return;
                    }
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    /// Parses items until the closing `}` (the `{` is already consumed).
    fn block(&mut self, mut item: impl FnMut(&mut Self) -> PResult<()>) -> PResult<()> {
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.bump();
                    return Ok(());
                }
                Tok::Eof => return Err(self.unexpected("`}`")),
                _ => {
                    let before = self.pos;
                    if item(self).is_err() {
                        self.recover();
                        if self.pos == before && !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
                            self.bump();
                        }
                    }
                }
            }
        }
    }

    fn unknown_keyword(&mut self, expected: &str) -> Failed {
        match self.peek().clone() {
            Tok::Ident(word) => {
                let span = self.cur_span();
                self.diags.push(Diagnostic::error(
                    "E003",
                    span,
                    format!("unknown keyword `{word}`, expected {expected}"),
                ));
                Failed
            }
            _ => self.unexpected(expected),
        }
    }

    fn file(&mut self) -> SyntaxTree {
        let mut decls = Vec::new();
        loop {
            let result = match self.peek() {
                Tok::Eof => break,
                Tok::Ident(s) if s == "taxonomy" => self.taxonomy().map(Decl::Taxonomy),
                Tok::Ident(s) if s == "catalog" => self.catalog().map(Decl::Catalog),
                Tok::Ident(s) if s == "scenario" => self.scenario().map(Decl::Scenario),
                Tok::RBrace => {
                    let f = self.unexpected("`taxonomy`, `catalog` or `scenario`");
                    self.bump();
                    Err(f)
                }
                _ => Err(self.unknown_keyword("`taxonomy`, `catalog` or `scenario`")),
            };
            match result {
                Ok(d) => decls.push(d),
                Err(Failed) => {
                    let before = self.pos;
                    self.recover();
                    if self.pos == before {
                        self.bump();
                    }
                }
            }
        }
        SyntaxTree { decls }
    }

    fn taxonomy(&mut self) -> PResult<TaxonomyDecl> {
        let start = self.bump().start;
        let name = self.expect_string("taxonomy name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut deviations = Vec::new();
        let mut seen = Seen::default();
        self.block(|p| {
            if !p.at_kw("deviation") {
                return Err(p.unknown_keyword("`deviation`"));
            }
            let d = p.deviation()?;
            seen.check(p, "deviation", &d.id);
            deviations.push(d);
            Ok(())
        })?;
        Ok(TaxonomyDecl {
            name,
            deviations,
            span: self.span_from(start),
        })
    }

    fn deviation(&mut self) -> PResult<DeviationDecl> {
        let start = self.bump().start;
        let id = self.expect_ident("deviation identifier")?;
        self.expect_kw("axis")?;
        let axis_span = self.cur_span();
        let axis = match self.peek() {
            Tok::Ident(s) if s == "longitudinal" => Axis::Longitudinal,
            Tok::Ident(s) if s == "lateral" => Axis::Lateral,
            _ => return Err(self.unexpected("`longitudinal` or `lateral`")),
        };
        self.bump();
        self.expect_kw("kind")?;
        let kind_span = self.cur_span();
        let kind = match self.peek() {
            Tok::Ident(s) if s == "absence" => DeviationKind::Absence,
            Tok::Ident(s) if s == "improper" => DeviationKind::Improper,
            _ => return Err(self.unexpected("`absence` or `improper`")),
        };
        self.bump();
        let action = if self.at_kw("action") {
            self.bump();
            Some(self.expect_ident("action identifier")?)
        } else {
            None
        };
        let label = if self.at_kw("label") {
            self.bump();
            Some(self.expect_string("label string")?)
        } else {
            None
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(DeviationDecl {
            id,
            axis: Spanned::new(axis, axis_span),
            kind: Spanned::new(kind, kind_span),
            action,
            label,
            span: self.span_from(start),
        })
    }

    fn catalog(&mut self) -> PResult<CatalogDecl> {
        let start = self.bump().start;
        let name = self.expect_string("catalog name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut functions = Vec::new();
        self.block(|p| {
            if !p.at_kw("function") {
                return Err(p.unknown_keyword("`function`"));
            }
            functions.push(p.function()?);
            Ok(())
        })?;
        Ok(CatalogDecl {
            name,
            functions,
            span: self.span_from(start),
        })
    }

    fn function(&mut self) -> PResult<FunctionDecl> {
        let start = self.bump().start;
        let name = self.expect_string("function name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut malfunctions = Vec::new();
        self.block(|p| {
            if !p.at_kw("malfunction") {
                return Err(p.unknown_keyword("`malfunction`"));
            }
            let m_start = p.bump().start;
            let description = p.expect_string("malfunction description")?;
            let maps_to = if p.at_kw("maps_to") {
                p.bump();
                Some(p.expect_ident("deviation class identifier")?)
            } else {
                None
            };
            p.expect(Tok::Semi, "`;`")?;
            if maps_to.is_none() {
                p.diags.push(Diagnostic::warning(
                    "W021",
                    description.span,
                    "malfunction has no maps_to; it cannot be used for generation until mapped",
                ));
            }
            malfunctions.push(MalfunctionDecl {
                description,
                maps_to,
                span: p.span_from(m_start),
            });
            Ok(())
        })?;
        Ok(FunctionDecl {
            name,
            malfunctions,
            span: self.span_from(start),
        })
    }

    fn scenario(&mut self) -> PResult<ScenarioDecl> {
        let start = self.bump().start;
        let title = self.expect_string("scenario title")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut odd: Option<Vec<KeyValue>> = None;
        let mut actors: Option<Vec<ActorDecl>> = None;
        let mut segments = Vec::new();
        let mut segment_ids = Seen::default();
        let mut actor_ids = Seen::default();
        self.block(|p| {
            let kw_span = p.cur_span();
            match p.peek() {
                Tok::Ident(s) if s == "odd" => {
                    p.bump();
                    p.expect(Tok::LBrace, "`{`")?;
                    let kvs = p.kv_block()?;
                    if odd.is_some() {
                        p.diags
                            .push(Diagnostic::error("E010", kw_span, "duplicate `odd` block"));
                    }
                    odd = Some(kvs);
                    Ok(())
                }
                Tok::Ident(s) if s == "actors" => {
                    p.bump();
                    p.expect(Tok::LBrace, "`{`")?;
                    let mut list = Vec::new();
                    p.block(|p| {
                        let ego = match p.peek() {
                            Tok::Ident(s) if s == "ego" => true,
                            Tok::Ident(s) if s == "actor" => false,
                            _ => return Err(p.unknown_keyword("`ego` or `actor`")),
                        };
                        let a_start = p.bump().start;
                        let id = p.expect_ident("actor identifier")?;
                        p.expect(Tok::LBrace, "`{`")?;
                        let props = p.kv_block()?;
                        actor_ids.check(p, "actor", &id);
                        list.push(ActorDecl {
                            ego,
                            id,
                            props,
                            span: p.span_from(a_start),
                        });
                        Ok(())
                    })?;
                    if actors.is_some() {
                        p.diags.push(Diagnostic::error(
                            "E010",
                            kw_span,
                            "duplicate `actors` block",
                        ));
                    }
                    actors = Some(list);
                    Ok(())
                }
                Tok::Ident(s) if s == "segment" => {
                    let seg = p.segment()?;
                    segment_ids.check(p, "segment", &seg.id);
                    segments.push(seg);
                    Ok(())
                }
                _ => Err(p.unknown_keyword("`odd`, `actors` or `segment`")),
            }
        })?;
        Ok(ScenarioDecl {
            title,
            odd,
            actors,
            segments,
            span: self.span_from(start),
        })
    }

    fn segment(&mut self) -> PResult<SegmentDecl> {
        let start = self.bump().start;
        let id = self.expect_ident("segment identifier")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut items = Vec::new();
        let mut keys = Seen::default();
        let mut actions = Seen::default();
        let mut desired_seen = false;
        self.block(|p| {
            if matches!(p.peek(), Tok::Ident(_)) && *p.peek_at(1) == Tok::Colon {
                let kv = p.kv()?;
                keys.check(p, "key", &kv.key);
                items.push(SegmentItem::Property(kv));
                return Ok(());
            }
            match p.peek() {
                Tok::Ident(s) if s == "requires" => {
                    let r_start = p.bump().start;
                    let action = p.expect_ident("action identifier")?;
                    let label = if p.at_kw("label") {
                        p.bump();
                        Some(p.expect_string("label string")?)
                    } else {
                        None
                    };
                    p.expect(Tok::Semi, "`;`")?;
                    actions.check(p, "required action", &action);
                    items.push(SegmentItem::Requires {
                        action,
                        label,
                        span: p.span_from(r_start),
                    });
                    Ok(())
                }
                Tok::Ident(s) if s == "desired" => {
                    let kw_span = p.cur_span();
                    p.bump();
                    let text = p.expect_string("desired behavior string")?;
                    p.expect(Tok::Semi, "`;`")?;
                    if desired_seen {
                        p.diags.push(Diagnostic::error(
                            "E010",
                            kw_span,
                            "duplicate `desired` clause",
                        ));
                    }
                    desired_seen = true;
                    items.push(SegmentItem::Desired(text));
                    Ok(())
                }
                _ => Err(p.unknown_keyword("`requires`, `desired` or `key: value;`")),
            }
        })?;
        if !desired_seen {
            self.diags.push(Diagnostic::warning(
                "W020",
                id.span,
                "segment has no desired behavior",
            ));
        }
        Ok(SegmentDecl {
            id,
            items,
            span: self.span_from(start),
        })
    }

    /// `{ kv* }` with the `{` already consumed.
    fn kv_block(&mut self) -> PResult<Vec<KeyValue>> {
        let mut list = Vec::new();
        let mut keys = Seen::default();
        self.block(|p| {
            let kv = p.kv()?;
            keys.check(p, "key", &kv.key);
            list.push(kv);
            Ok(())
        })?;
        Ok(list)
    }

    fn kv(&mut self) -> PResult<KeyValue> {
        let key = self.expect_ident("key")?;
        let start = key.span.offset;
        self.expect(Tok::Colon, "`:`")?;
        let v_start = self.toks[self.pos].start;
        let value = match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Value::Str(s)
            }
            Tok::Ident(s) => {
                self.bump();
                Value::Ident(s)
            }
            Tok::Number(n) => {
                self.bump();
                let unit = match self.peek().clone() {
                    Tok::Ident(u) => {
                        self.bump();
                        Some(u)
                    }
                    _ => None,
                };
                Value::Number { literal: n, unit }
            }
            _ => return Err(self.unexpected("string, number or identifier")),
        };
        let value = Spanned::new(value, self.span_from(v_start));
        self.expect(Tok::Semi, "`;`")?;
        Ok(KeyValue {
            key,
            value,
            span: self.span_from(start),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codes(src: &str) -> Vec<String> {
        parse_str(src).1.into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn empty_file() {
        let (tree, diags) = parse_str("");
        assert_eq!(tree.unwrap().decls.len(), 0);
        assert!(diags.is_empty());
        let (tree, diags) = parse_str("# only a comment\r\n\r\n");
        assert_eq!(tree.unwrap().decls.len(), 0);
        assert!(diags.is_empty());
    }

    #[test]
    fn segment_without_desired_warns() {
        let (tree, diags) = parse_str(r#"scenario "X" { segment a { } }"#);
        let tree = tree.expect("warnings keep the tree");
        assert_eq!(tree.scenarios().count(), 1);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "W020");
        assert_eq!(diags[0].message, "segment has no desired behavior");
    }

    #[test]
    fn full_scenario() {
        let src = r#"
scenario "Occluded Pedestrian" {
  odd { road: "two-lane urban"; }
  actors {
    ego ego { v_ego_0: 8.3 mps; }
    actor p { role: pedestrian; }
  }
  segment approach {
    requires decelerate label "speed adjustment";
    desired "reduce speed";
    order: 1;
  }
}
"#;
        let (tree, diags) = parse_str(src);
        assert!(diags.is_empty(), "{diags:?}");
        let sc = tree.unwrap().scenarios().next().cloned().unwrap();
        assert_eq!(sc.title.value, "Occluded Pedestrian");
        assert_eq!(sc.actors.as_ref().unwrap().len(), 2);
        let seg = &sc.segments[0];
        assert_eq!(seg.items.len(), 3);
        match &seg.items[0] {
            SegmentItem::Requires { action, label, .. } => {
                assert_eq!(action.value, "decelerate");
                assert_eq!(label.as_ref().unwrap().value, "speed adjustment");
            }
            other => panic!("{other:?}"),
        }
        let ego = &sc.actors.as_ref().unwrap()[0];
        assert_eq!(
            ego.props[0].value.value,
            Value::Number {
                literal: "8.3".into(),
                unit: Some("mps".into())
            }
        );
    }

    #[test]
    fn recovery_reports_multiple_errors() {
        let src = r#"
taxonomy "t" {
  deviation a axis sideways kind absence;
  deviation b axis lateral kind improper
  deviation c axis lateral kind improper;
}
bogus "x" { }
scenario "s" { segment s1 { frobnicate; desired "d"; } }
"#;
        let (tree, diags) = parse_str(src);
        assert!(tree.is_none());
        let codes: Vec<_> = diags.iter().map(|d| d.code.as_str()).collect();
        assert_eq!(codes, ["E002", "E002", "E003", "E003"], "{diags:#?}");
    }

    #[test]
    fn duplicates_are_e010() {
        assert_eq!(
            codes(r#"scenario "s" { segment a { desired "x"; } segment a { desired "y"; } }"#),
            ["E010"]
        );
        assert_eq!(
            codes(
                r#"scenario "s" { segment a { requires decelerate; requires decelerate; desired "x"; } }"#
            ),
            ["E010"]
        );
        assert_eq!(
            codes(
                r#"taxonomy "t" { deviation a axis lateral kind improper; deviation a axis lateral kind improper; }"#
            ),
            ["E010"]
        );
    }

    #[test]
    fn unterminated_block_reports_at_eof() {
        let (tree, diags) = parse_str("scenario \"s\" {\n  segment a {");
        assert!(tree.is_none());
        assert!(diags.iter().all(|d| d.code == "E002"));
        assert!(!diags.is_empty());
    }

    #[test]
    fn keywords_usable_as_property_keys() {
        let (tree, diags) =
            parse_str(r#"scenario "s" { segment a { desired: "x"; requires: 3; desired "y"; } }"#);
        assert!(tree.is_some(), "{diags:?}");
    }

    #[test]
    fn malfunction_without_maps_to_warns() {
        let (tree, diags) = parse_str(r#"catalog "c" { function "f" { malfunction "m"; } }"#);
        assert!(tree.is_some());
        assert_eq!(
            diags.iter().map(|d| d.code.as_str()).collect::<Vec<_>>(),
            ["W021"]
        );
    }

    #[test]
    fn deterministic() {
        let src = "scenario \"s\" { segment a { requires x; } } ?? }";
        assert_eq!(parse_str(src), parse_str(src));
    }
}
