//! Triples and canonical N-Triples text.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
pub const XSD_DATE: &str = "http://www.w3.org/2001/XMLSchema#date";
pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    /// `datatype: None` is a plain (xsd:string) literal.
    Literal {
        value: String,
        datatype: Option<String>,
    },
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(s.into())
    }

    pub fn literal(value: impl Into<String>, datatype: Option<&str>) -> Self {
        Term::Literal {
            value: value.into(),
            datatype: datatype.filter(|d| *d != XSD_STRING).map(String::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Term,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripleSet {
    pub triples: Vec<Triple>,
}

impl TripleSet {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn push(&mut self, subject: String, predicate: &str, object: Term) {
        self.triples.push(Triple {
            subject,
            predicate: predicate.into(),
            object,
        });
    }

    /// Triples in canonical order: by serialized subject, predicate, object.
    pub fn sorted(&self) -> Vec<&Triple> {
        let mut keyed: Vec<(String, String, String, &Triple)> = self
            .triples
            .iter()
            .map(|t| {
                (
                    render_iri(&t.subject),
                    render_iri(&t.predicate),
                    render_term(&t.object),
                    t,
                )
            })
            .collect();
        keyed.sort_by(|a, b| (&a.0, &a.1, &a.2).cmp(&(&b.0, &b.1, &b.2)));
        keyed.into_iter().map(|k| k.3).collect()
    }
}

/// Percent-encodes everything except `A-Z a-z 0-9 - . ~`. The underscore is
/// encoded too, which keeps `_`-joined composite keys unambiguous.
pub fn percent_encode(s: &str) -> String {
    encode_except(s, b"-.~")
}

/// Like [`percent_encode`] but leaves `_` alone, for single names.
pub fn percent_encode_name(s: &str) -> String {
    encode_except(s, b"-._~")
}

fn encode_except(s: &str, keep: &[u8]) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || keep.contains(&b) {
            out.push(b as char);
        } else {
            let _ = write!(out, "%{b:02X}");
        }
    }
    out
}

fn render_iri(iri: &str) -> String {
    let mut out = String::with_capacity(iri.len() + 2);
    out.push('<');
    for c in iri.chars() {
        match c {
            '\u{0}'..='\u{20}' | '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('>');
    out
}

fn render_literal(value: &str, out: &mut String) {
    out.push('"');
    for c in value.chars() {
        match c {
            '\u{8}' => out.push_str("\\b"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\u{c}' => out.push_str("\\f"),
            '\r' => out.push_str("\\r"),
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\u{0}'..='\u{1f}' | '\u{7f}' => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn render_term(term: &Term) -> String {
    match term {
        Term::Iri(iri) => render_iri(iri),
        Term::Literal { value, datatype } => {
            let mut out = String::with_capacity(value.len() + 2);
            render_literal(value, &mut out);
            if let Some(dt) = datatype {
                out.push_str("^^");
                out.push_str(&render_iri(dt));
            }
            out
        }
    }
}

/// Canonical N-Triples: one `<s> <p> <o> .` line per triple, sorted,
/// `\n`-terminated. Empty set gives empty text.
pub fn serialize_ntriples(ts: &TripleSet) -> String {
    let mut out = String::new();
    for t in ts.sorted() {
        out.push_str(&render_iri(&t.subject));
        out.push(' ');
        out.push_str(&render_iri(&t.predicate));
        out.push(' ');
        out.push_str(&render_term(&t.object));
        out.push_str(" .\n");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct NTriplesError {
    pub line: usize,
    pub message: String,
}

struct Cursor<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: &str) -> NTriplesError {
        NTriplesError {
            line: self.line,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start_matches([' ', '\t']);
    }

    fn expect(&mut self, c: char) -> Result<(), NTriplesError> {
        self.skip_ws();
        match self.rest.strip_prefix(c) {
            Some(r) => {
                self.rest = r;
                Ok(())
            }
            None => Err(self.err("unexpected character")),
        }
    }

    fn unescape_until(&mut self, end: char) -> Result<String, NTriplesError> {
        let mut out = String::new();
        let mut chars = self.rest.char_indices();
        while let Some((i, c)) = chars.next() {
            if c == end {
                self.rest = &self.rest[i + c.len_utf8()..];
                return Ok(out);
            }
            if c != '\\' {
                out.push(c);
                continue;
            }
            let (_, e) = chars.next().ok_or_else(|| self.err("dangling escape"))?;
            let hex_len = match e {
                'u' => 4,
                'U' => 8,
                't' => {
                    out.push('\t');
                    continue;
                }
                'b' => {
                    out.push('\u{8}');
                    continue;
                }
                'n' => {
                    out.push('\n');
                    continue;
                }
                'r' => {
                    out.push('\r');
                    continue;
                }
                'f' => {
                    out.push('\u{c}');
                    continue;
                }
                '"' | '\'' | '\\' => {
                    out.push(e);
                    continue;
                }
                _ => return Err(self.err("unknown escape")),
            };
            let mut code = 0u32;
            for _ in 0..hex_len {
                let (_, h) = chars.next().ok_or_else(|| self.err("short unicode escape"))?;
                code = code * 16 + h.to_digit(16).ok_or_else(|| self.err("bad hex digit"))?;
            }
            out.push(char::from_u32(code).ok_or_else(|| self.err("invalid code point"))?);
        }
        Err(self.err("unterminated token"))
    }

    fn iri(&mut self) -> Result<String, NTriplesError> {
        self.expect('<')?;
        self.unescape_until('>')
    }

    fn term(&mut self) -> Result<Term, NTriplesError> {
        self.skip_ws();
        if self.rest.starts_with('<') {
            return self.iri().map(Term::Iri);
        }
        self.expect('"')?;
        let value = self.unescape_until('"')?;
        let datatype = match self.rest.strip_prefix("^^") {
            Some(r) => {
                self.rest = r;
                Some(self.iri()?)
            }
            None => None,
        };
        Ok(Term::literal(value, datatype.as_deref()))
    }
}

/// Reads N-Triples with IRI subjects and IRI or literal objects (the subset
/// [`serialize_ntriples`] writes). Blank lines and `#` comments are skipped.
pub fn parse_ntriples(text: &str) -> Result<TripleSet, NTriplesError> {
    let mut ts = TripleSet::default();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut cur = Cursor {
            rest: trimmed,
            line: i + 1,
        };
        let subject = cur.iri()?;
        let predicate = cur.iri()?;
        let object = cur.term()?;
        cur.expect('.')?;
        cur.skip_ws();
        if !cur.rest.is_empty() {
            return Err(cur.err("trailing content"));
        }
        ts.triples.push(Triple {
            subject,
            predicate,
            object,
        });
    }
    Ok(ts)
}
