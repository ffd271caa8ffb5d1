//! Versioned prompt templates with `{placeholder}` substitution.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub version: u32,
    text: String,
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, version: u32, text: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            version,
            text: text.into(),
        }
    }

    /// Loads an override template from disk; placeholders must match the
    /// built-in template it replaces.
    pub fn load_override(builtin: &PromptTemplate, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let custom = Self::new(builtin.name.clone(), 0, text);
        let mut want = builtin.placeholders();
        let mut got = custom.placeholders();
        want.sort();
        got.sort();
        if want != got {
            return Err(Error::Config(format!(
                "template {} must use placeholders {:?}, found {:?}",
                path.display(),
                want,
                got
            )));
        }
        Ok(custom)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Distinct placeholder names in order of first use.
    pub fn placeholders(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for seg in segments(&self.text) {
            if let Segment::Slot(name) = seg {
                if !out.iter().any(|n| n == name) {
                    out.push(name.to_string());
                }
            }
        }
        out
    }

    /// Single-pass substitution; values are inserted verbatim, so braces in
    /// them are never re-expanded.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String> {
        let mut out = String::with_capacity(self.text.len() + 256);
        for seg in segments(&self.text) {
            match seg {
                Segment::Literal(s) => out.push_str(s),
                Segment::Slot(name) => {
                    let v = values
                        .iter()
                        .find(|(k, _)| *k == name)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| {
                            Error::Config(format!(
                                "template {} needs a value for {{{name}}}",
                                self.name
                            ))
                        })?;
                    out.push_str(v);
                }
            }
        }
        Ok(out)
    }
}

enum Segment<'a> {
    Literal(&'a str),
    Slot(&'a str),
}

fn segments(text: &str) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close)
                if close > 0
                    && after[..close]
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '_') =>
            {
                out.push(Segment::Literal(&rest[..open]));
                out.push(Segment::Slot(&after[..close]));
                rest = &after[close + 1..];
            }
            _ => {
                out.push(Segment::Literal(&rest[..=open]));
                rest = after;
            }
        }
    }
    out.push(Segment::Literal(rest));
    out
}

pub fn concept_extraction() -> PromptTemplate {
    PromptTemplate::new(
        "concept_extraction",
        1,
        include_str!("../prompts/concept_extraction.v1.txt"),
    )
}

pub fn answer_generation() -> PromptTemplate {
    PromptTemplate::new("answer", 1, include_str!("../prompts/answer.v1.txt"))
}

pub fn triple_extraction() -> PromptTemplate {
    PromptTemplate::new(
        "triple_extraction",
        1,
        include_str!("../prompts/triple_extraction.v1.txt"),
    )
}
