use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a model entity: case-sensitive, `[a-z][a-z0-9_]*`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Ident(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid identifier `{0}`: expected [a-z][a-z0-9_]*")]
pub struct InvalidIdent(pub String);

impl Ident {
    pub fn new(s: impl Into<String>) -> Result<Self, InvalidIdent> {
        let s = s.into();
        if is_valid_ident(&s) {
            Ok(Ident(s))
        } else {
            Err(InvalidIdent(s))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Derives an identifier from free text ("Occluded Pedestrian" -> `occluded_pedestrian`).
    /// Returns `None` when the text contains no ASCII alphanumerics.
    pub fn slug(text: &str) -> Option<Self> {
        let mut out = String::with_capacity(text.len());
        let mut pending_sep = false;
        for c in text.chars() {
            if c.is_ascii_alphanumeric() {
                if pending_sep && !out.is_empty() {
                    out.push('_');
                }
                pending_sep = false;
                out.push(c.to_ascii_lowercase());
            } else {
                pending_sep = true;
            }
        }
        if out.is_empty() {
            return None;
        }
        if !out.starts_with(|c: char| c.is_ascii_lowercase()) {
            out.insert_str(0, "x_");
        }
        Some(Ident(out))
    }
}

pub fn is_valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some('a'..='z'))
        && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
}

impl TryFrom<String> for Ident {
    type Error = InvalidIdent;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Ident::new(value)
    }
}

impl From<Ident> for String {
    fn from(value: Ident) -> Self {
        value.0
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Ident {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for Ident {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Ident {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}
