//! Concept extraction and seed-entity matching.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::embedding::Similarity;
use crate::error::Result;
use crate::graph::{normalize_label, EntityId, KnowledgeGraph};
use crate::llm::{CompletionRequest, LlmProvider};
use crate::prompts::PromptTemplate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSet {
    pub query: String,
    pub concepts: Vec<String>,
    /// Set when extraction produced nothing usable and the whole question
    /// stands in as the only concept.
    #[serde(default)]
    pub fallback: bool,
}

impl ConceptSet {
    /// Builds a set directly, applying the same cleanup as extraction.
    pub fn new(query: impl Into<String>, concepts: impl IntoIterator<Item = impl Into<String>>) -> Self {
        let query = query.into();
        let concepts = dedup(concepts.into_iter().map(Into::into), usize::MAX);
        if concepts.is_empty() {
            return Self::fallback(query);
        }
        Self {
            query,
            concepts,
            fallback: false,
        }
    }

    fn fallback(query: String) -> Self {
        Self {
            concepts: vec![query.trim().to_string()],
            query,
            fallback: true,
        }
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEntity {
    pub concept: String,
    pub entity: EntityId,
    pub label: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedMatch {
    pub seeds: Vec<SeedEntity>,
    /// Concepts whose best entity did not clear the threshold.
    pub unmatched: Vec<String>,
}

fn strip_list_marker(line: &str) -> &str {
    let line = line.trim();
    if matches!(line, "-" | "*" | "•") {
        return "";
    }
    let line = line
        .strip_prefix("- ")
        .or_else(|| line.strip_prefix("* "))
        .or_else(|| line.strip_prefix("• "))
        .unwrap_or(line);
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(r) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return r.trim();
        }
    }
    line.trim()
}

fn dedup(items: impl Iterator<Item = String>, limit: usize) -> Vec<String> {
    let mut seen = HashSet::new();
    items
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty() && seen.insert(normalize_label(s)))
        .take(limit)
        .collect()
}

/// Parses one-concept-per-line model output.
pub fn parse_concepts(output: &str, max_concepts: usize) -> Vec<String> {
    dedup(
        output.lines().map(|l| strip_list_marker(l).to_string()),
        max_concepts,
    )
}

/// Asks the model for the question's key concepts.
pub fn extract_concepts(
    question: &str,
    max_concepts: usize,
    llm: &dyn LlmProvider,
    template: &PromptTemplate,
) -> Result<ConceptSet> {
    let prompt = template.render(&[("question", question)])?;
    let output = llm.complete(&CompletionRequest::new(prompt).temperature(0.0))?;
    let concepts = parse_concepts(&output, max_concepts);
    if concepts.is_empty() {
        tracing::warn!("concept extraction returned nothing; using the question itself");
        return Ok(ConceptSet::fallback(question.to_string()));
    }
    Ok(ConceptSet {
        query: question.to_string(),
        concepts,
        fallback: false,
    })
}

/// Best entity for one concept, ties to the lower id.
pub fn best_entity(
    concept: &str,
    graph: &KnowledgeGraph,
    sim: &dyn Similarity,
) -> Result<Option<(EntityId, f64)>> {
    let mut best: Option<(EntityId, f64)> = None;
    for e in graph.entities() {
        let s = sim.sim(concept, graph.label(e))?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((e, s));
        }
    }
    Ok(best)
}

/// Picks one seed per concept when its best match beats `tau_entity`.
/// A seed claimed by several concepts is kept once, at its best score.
pub fn match_seed_entities(
    concepts: &ConceptSet,
    graph: &KnowledgeGraph,
    sim: &dyn Similarity,
    tau_entity: f64,
) -> Result<SeedMatch> {
    let mut out = SeedMatch::default();
    for concept in &concepts.concepts {
        match best_entity(concept, graph, sim)? {
            Some((entity, score)) if score > tau_entity => {
                if let Some(existing) = out.seeds.iter_mut().find(|s| s.entity == entity) {
                    if score > existing.score {
                        existing.concept = concept.clone();
                        existing.score = score;
                    }
                    continue;
                }
                out.seeds.push(SeedEntity {
                    concept: concept.clone(),
                    entity,
                    label: graph.label(entity).to_string(),
                    score,
                });
            }
            _ => out.unmatched.push(concept.clone()),
        }
    }
    if out.seeds.is_empty() {
        tracing::info!("no seeds");
    }
    Ok(out)
}
