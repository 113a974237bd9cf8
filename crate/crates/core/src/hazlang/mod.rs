//! HazLang, the `.hzl` authoring format for taxonomies, malfunction catalogs
//! and operational scenarios.
//!
//! ```text
//! file      := { taxonomy | catalog | scenario } ;
//! taxonomy  := "taxonomy" STRING "{" { deviation } "}" ;
//! deviation := "deviation" IDENT "axis" ("longitudinal"|"lateral")
//!              "kind" ("absence"|"improper") ["action" IDENT] ["label" STRING] ";" ;
//! catalog   := "catalog" STRING "{" { "function" STRING "{"
//!              { "malfunction" STRING ["maps_to" IDENT] ";" } "}" } "}" ;
//! scenario  := "scenario" STRING "{" ["odd" "{" {kv} "}"]
//!              ["actors" "{" { ("ego"|"actor") IDENT "{" {kv} "}" } "}"] { segment } "}" ;
//! segment   := "segment" IDENT "{" { "requires" IDENT ["label" STRING] ";"
//!              | "desired" STRING ";" | kv } "}" ;
//! kv        := IDENT ":" (STRING | NUMBER [IDENT] | IDENT) ";" ;
//! ```
//!
//! `#` starts a line comment. LF and CRLF line endings are accepted; the
//! printer emits LF.

mod ast;
mod check;
mod lexer;
mod lower;
mod parser;
mod printer;

use serde::Serialize;

pub use ast::*;
pub use check::{check_sources, CheckOutcome, Finding};
pub use lower::{lower, lower_many, Lowered};
pub use parser::{parse, parse_bytes, parse_str};
pub use printer::print;

pub use crate::model::Severity;

/// A `.hzl` file with a precomputed index of line starts.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: String,
    pub content: String,
    line_starts: Vec<usize>,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, content: impl Into<String>) -> Self {
        let content = content.into();
        let mut line_starts = vec![0];
        line_starts.extend(content.match_indices('\n').map(|(i, _)| i + 1));
        SourceFile {
            path: path.into(),
            content,
            line_starts,
        }
    }

    /// Decodes UTF-8, reporting the first invalid byte as a lexical error.
    pub fn from_bytes(path: impl Into<String>, bytes: &[u8]) -> Result<Self, Diagnostic> {
        match std::str::from_utf8(bytes) {
            Ok(s) => Ok(SourceFile::new(path, s)),
            Err(e) => {
                let valid = &bytes[..e.valid_up_to()];
                // The valid prefix is enough to locate the offending byte.
                let prefix = SourceFile::new("", std::str::from_utf8(valid).expect("valid prefix"));
                let mut span = prefix.span(valid.len(), valid.len());
                span.len = 1;
                span.length = 1;
                Err(Diagnostic::error("E001", span, "source is not valid UTF-8"))
            }
        }
    }

    pub fn line_count(&self) -> usize {
        self.line_starts.len()
    }

    pub fn line_starts(&self) -> &[usize] {
        &self.line_starts
    }

    /// Span of the byte range `start..end`; both ends must lie on char boundaries.
    pub fn span(&self, start: usize, end: usize) -> Span {
        let start = start.min(self.content.len());
        let end = end.clamp(start, self.content.len());
        let line_idx = match self.line_starts.binary_search(&start) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let line_start = self.line_starts[line_idx];
        let column = self.content[line_start..start].chars().count() + 1;
        let length = self.content[start..end].chars().count();
        Span {
            offset: start,
            len: end - start,
            line: line_idx as u32 + 1,
            column: column as u32,
            length: length as u32,
        }
    }

    /// Whether `span` refers to text inside this file.
    pub fn contains(&self, span: &Span) -> bool {
        let end = span.offset + span.len;
        if end > self.content.len() || span.line == 0 || span.line as usize > self.line_starts.len()
        {
            return false;
        }
        let line_start = self.line_starts[span.line as usize - 1];
        if span.offset < line_start {
            return false;
        }
        self.content.is_char_boundary(span.offset)
            && self.content.is_char_boundary(end)
            && self.content[line_start..span.offset].chars().count() + 1 == span.column as usize
            && self.content[span.offset..end].chars().count() == span.length as usize
    }
}

/// Source location. `line`/`column` are 1-based; `column` and `length` count chars.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Span {
    #[serde(skip)]
    pub offset: usize,
    #[serde(skip)]
    pub len: usize,
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    #[serde(flatten)]
    pub span: Span,
    pub code: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &str, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            span,
            code: code.to_owned(),
            message: message.into(),
        }
    }

    pub fn warning(code: &str, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            span,
            code: code.to_owned(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `path:line:col: error[E031]: message`
    pub fn render(&self, path: &str) -> String {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        format!(
            "{path}:{}:{}: {sev}[{}]: {}",
            self.span.line, self.span.column, self.code, self.message
        )
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
