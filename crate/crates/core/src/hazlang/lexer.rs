use super::{Diagnostic, SourceFile};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Number(String),
    LBrace,
    RBrace,
    Semi,
    Colon,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(_) => "string".to_owned(),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::LBrace => "`{`".to_owned(),
            Tok::RBrace => "`}`".to_owned(),
            Tok::Semi => "`;`".to_owned(),
            Tok::Colon => "`:`".to_owned(),
            Tok::Eof => "end of file".to_owned(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

/// Splits the source into tokens. Always ends with `Tok::Eof`.
pub(crate) fn lex(src: &SourceFile, diags: &mut Vec<Diagnostic>) -> Vec<Token> {
    let text = src.content.as_str();
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    // Start of a run of unexpected characters, reported once per run.
    let mut junk: Option<usize> = None;

    let flush_junk = |junk: &mut Option<usize>, end: usize, diags: &mut Vec<Diagnostic>| {
        if let Some(start) = junk.take() {
            let shown: String = text[start..end].chars().take(8).collect();
            diags.push(Diagnostic::error(
                "E001",
                src.span(start, end),
                format!("unexpected character(s) `{}`", shown.escape_debug()),
            ));
        }
    };

    while i < bytes.len() {
        let c = text[i..].chars().next().expect("in bounds");
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                flush_junk(&mut junk, i, diags);
                i += 1;
            }
            '#' => {
                flush_junk(&mut junk, i, diags);
                i = text[i..].find('\n').map_or(bytes.len(), |n| i + n);
            }
            '{' | '}' | ';' | ':' => {
                flush_junk(&mut junk, i, diags);
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ';' => Tok::Semi,
                    _ => Tok::Colon,
                };
                i += 1;
                tokens.push(Token { tok, start, end: i });
            }
            '"' => {
                flush_junk(&mut junk, i, diags);
                i += 1;
                let mut value = String::new();
                let mut closed = false;
                while i < bytes.len() {
                    let ch = text[i..].chars().next().expect("in bounds");
                    match ch {
                        '"' => {
                            i += 1;
                            closed = true;
                            break;
                        }
                        '\n' => break,
                        '\\' => {
                            let esc_start = i;
                            i += 1;
                            let Some(next) = text[i..].chars().next() else {
                                break;
                            };
                            if next == '\n' {
                                break;
                            }
                            i += next.len_utf8();
                            match next {
                                '"' => value.push('"'),
                                '\\' => value.push('\\'),
                                'n' => value.push('\n'),
                                't' => value.push('\t'),
                                'r' => value.push('\r'),
                                other => {
                                    diags.push(Diagnostic::error(
                                        "E001",
                                        src.span(esc_start, i),
                                        format!("unknown escape `\\{}`", other.escape_debug()),
                                    ));
                                    value.push(other);
                                }
                            }
                        }
                        other => {
                            value.push(other);
                            i += other.len_utf8();
                        }
                    }
                }
                if !closed {
                    diags.push(Diagnostic::error(
                        "E001",
                        src.span(start, i),
                        "unterminated string",
                    ));
                }
                tokens.push(Token {
                    tok: Tok::Str(value),
                    start,
                    end: i,
                });
            }
            '0'..='9' | '-' if c != '-' || bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                flush_junk(&mut junk, i, diags);
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if bytes.get(i) == Some(&b'.') && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                tokens.push(Token {
                    tok: Tok::Number(text[start..i].to_owned()),
                    start,
                    end: i,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                flush_junk(&mut junk, i, diags);
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    tok: Tok::Ident(text[start..i].to_owned()),
                    start,
                    end: i,
                });
            }
            other => {
                junk.get_or_insert(i);
                i += other.len_utf8();
            }
        }
    }
    flush_junk(&mut junk, bytes.len(), diags);
    tokens.push(Token {
        tok: Tok::Eof,
        start: bytes.len(),
        end: bytes.len(),
    });
    tokens
}
