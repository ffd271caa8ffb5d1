//! Evidence integration, rendering and answer generation.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph};
use crate::llm::{CompletionRequest, LlmProvider};
use crate::path::Path;
use crate::prompts::PromptTemplate;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceTriple {
    pub head: String,
    pub relation: String,
    pub tail: String,
    /// Seeds whose refined paths contained this triple.
    pub sources: Vec<EntityId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSubgraph {
    pub triples: Vec<EvidenceTriple>,
}

impl EvidenceSubgraph {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, head: &str, relation: &str, tail: &str) -> bool {
        self.triples
            .iter()
            .any(|t| t.head == head && t.relation == relation && t.tail == tail)
    }

    pub fn as_tuples(&self) -> Vec<(String, String, String)> {
        self.triples
            .iter()
            .map(|t| (t.head.clone(), t.relation.clone(), t.tail.clone()))
            .collect()
    }
}

/// Merges paths into one subgraph in stored head→tail orientation, keeping
/// the first appearance of every triple.
pub fn integrate(paths: &[Path], graph: &KnowledgeGraph) -> EvidenceSubgraph {
    let mut index: HashMap<(EntityId, String, EntityId), usize> = HashMap::new();
    let mut out = EvidenceSubgraph::default();
    for path in paths {
        for step in &path.steps {
            let (h, r, t) = step.stored();
            let key = (h, r.to_string(), t);
            match index.get(&key) {
                Some(&i) => {
                    let sources = &mut out.triples[i].sources;
                    if !sources.contains(&path.seed) {
                        sources.push(path.seed);
                    }
                }
                None => {
                    index.insert(key, out.triples.len());
                    out.triples.push(EvidenceTriple {
                        head: graph.label(h).to_string(),
                        relation: r.to_string(),
                        tail: graph.label(t).to_string(),
                        sources: vec![path.seed],
                    });
                }
            }
        }
    }
    out
}

/// One `Evidence i: head relation tail` line per triple, 1-indexed.
pub fn render_evidence(subgraph: &EvidenceSubgraph) -> String {
    subgraph
        .triples
        .iter()
        .enumerate()
        .map(|(i, t)| format!("Evidence {}: {} {} {}", i + 1, t.head, t.relation, t.tail))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Recovers triples from rendered evidence, using the graph to decide where
/// multi-word labels end.
pub fn parse_evidence(text: &str, graph: &KnowledgeGraph) -> Result<Vec<(String, String, String)>> {
    let relations = graph.relations();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let prefix = format!("Evidence {}: ", out.len() + 1);
        let body = line
            .strip_prefix(&prefix)
            .ok_or_else(|| Error::parse(i + 1, format!("expected prefix {prefix:?}")))?;
        let found = relations.iter().find_map(|rel| {
            let needle = format!(" {rel} ");
            body.match_indices(&needle).find_map(|(pos, _)| {
                let head = &body[..pos];
                let tail = &body[pos + needle.len()..];
                let h = graph.entity_by_label(head)?;
                let t = graph.entity_by_label(tail)?;
                graph
                    .has_triple(h, rel, t)
                    .then(|| (graph.label(h).to_string(), rel.to_string(), graph.label(t).to_string()))
            })
        });
        out.push(found.ok_or_else(|| Error::parse(i + 1, "no graph triple matches this line"))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub chosen_option: Option<char>,
    pub evidence_count: usize,
    pub prompt: String,
}

fn line_initial() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?im)^\s*(?:\*\*)?(?:(?:final\s+)?answer(?:\s+option)?\s*(?:is)?\s*[:：]?\s*)?[\(\[（]?([A-E])(?:[\)\]）.:：,、]|\*\*|\s*$)",
        )
        .expect("valid regex")
    })
}

fn inline() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)\b(?:answer|option|choice)(?:\s+is)?\s*[:：]?\s*[\(\[（]?([A-E])\b|[\(\[（]([A-E])[\)\]）]",
        )
        .expect("valid regex")
    })
}

/// Finds the chosen option letter in a model response.
///
/// A letter opening a line (`B.`, `(C)`, `Answer: d`) wins over one found
/// inside prose (`the answer is B`, `(E)`). Bare capital words such as the
/// article "A" are never taken as an answer.
pub fn parse_option_letter(response: &str) -> Option<char> {
    let pick = |caps: regex::Captures<'_>| {
        caps.iter()
            .skip(1)
            .flatten()
            .next()
            .and_then(|m| m.as_str().chars().next())
            .map(|c| c.to_ascii_uppercase())
    };
    line_initial()
        .captures(response)
        .and_then(pick)
        .or_else(|| inline().captures(response).and_then(pick))
}

/// Appends `A. text` option lines to the question stem.
pub fn question_with_options(question: &str, options: &[(char, String)]) -> String {
    let mut q = question.trim_end().to_string();
    for (letter, text) in options {
        q.push('\n');
        q.push(*letter);
        q.push_str(". ");
        q.push_str(text);
    }
    q
}

pub fn generate_answer(
    question: &str,
    subgraph: &EvidenceSubgraph,
    llm: &dyn LlmProvider,
    template: &PromptTemplate,
    options: Option<&[(char, String)]>,
    temperature: f64,
) -> Result<Answer> {
    let question = match options {
        Some(opts) => question_with_options(question, opts),
        None => question.to_string(),
    };
    let evidence = render_evidence(subgraph);
    let prompt = template.render(&[("question", &question), ("evidence_text", &evidence)])?;
    let text = llm.complete(&CompletionRequest::new(prompt.clone()).temperature(temperature))?;
    let chosen_option = parse_option_letter(&text);
    Ok(Answer {
        text,
        chosen_option,
        evidence_count: subgraph.len(),
        prompt,
    })
}
