//! End-to-end question answering: concepts, seeds, one refinement cycle per
//! seed, evidence integration and answer generation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycle::{run_cycle, CycleConfig, IterationTrace};
use crate::embedding::Similarity;
use crate::error::Result;
use crate::evidence::{generate_answer, integrate, render_evidence, EvidenceSubgraph};
use crate::graph::{Direction, KnowledgeGraph};
use crate::llm::{LlmProvider, DEFAULT_TEMPERATURE};
use crate::path::Path;
use crate::prompts::{self, PromptTemplate};
use crate::query::{extract_concepts, match_seed_entities, ConceptSet, SeedEntity};

#[derive(Debug, Clone)]
pub struct Templates {
    pub concepts: PromptTemplate,
    pub answer: PromptTemplate,
}

impl Default for Templates {
    fn default() -> Self {
        Self {
            concepts: prompts::concept_extraction(),
            answer: prompts::answer_generation(),
        }
    }
}

/// Outcome of one seed's refinement cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: SeedEntity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<IterationTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_path_text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_path_text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Everything recorded while answering one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTrace {
    pub question: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<(char, String)>,
    pub concepts: ConceptSet,
    pub unmatched_concepts: Vec<String>,
    pub seeds: Vec<SeedRun>,
    pub evidence: EvidenceSubgraph,
    pub evidence_text: String,
    pub prompt: String,
    pub raw_output: String,
    pub chosen_option: Option<char>,
}

impl QueryTrace {
    pub fn iteration_traces(&self) -> impl Iterator<Item = &IterationTrace> {
        self.seeds.iter().filter_map(|s| s.trace.as_ref())
    }
}

/// Renders a path as `A -rel-> B <-rel2- C`.
pub fn describe_path(graph: &KnowledgeGraph, path: &Path) -> String {
    let mut s = graph.label(path.seed).to_string();
    for step in &path.steps {
        match step.direction {
            Direction::Outgoing => s.push_str(&format!(" -{}-> ", step.relation)),
            Direction::Incoming => s.push_str(&format!(" <-{}- ", step.relation)),
        }
        s.push_str(graph.label(step.to));
    }
    s
}

pub struct Pipeline<'a> {
    pub graph: &'a KnowledgeGraph,
    pub sim: &'a dyn Similarity,
    pub llm: &'a dyn LlmProvider,
    pub config: CycleConfig,
    pub templates: Templates,
    /// Keep at most this many seeds, in concept order.
    pub seed_cap: Option<usize>,
    pub parallel_seeds: bool,
    pub answer_temperature: f64,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        graph: &'a KnowledgeGraph,
        sim: &'a dyn Similarity,
        llm: &'a dyn LlmProvider,
        config: CycleConfig,
    ) -> Result<Self> {
        config.params.validate()?;
        sim.warm(graph)?;
        Ok(Self {
            graph,
            sim,
            llm,
            config,
            templates: Templates::default(),
            seed_cap: None,
            parallel_seeds: true,
            answer_temperature: DEFAULT_TEMPERATURE,
        })
    }

    pub fn seed_cap(mut self, cap: Option<usize>) -> Self {
        self.seed_cap = cap;
        self
    }

    pub fn templates(mut self, templates: Templates) -> Self {
        self.templates = templates;
        self
    }

    fn run_seed(&self, seed: SeedEntity, concepts: &ConceptSet) -> SeedRun {
        match run_cycle(&seed, concepts, self.graph, &self.config, self.sim) {
            Ok((path, trace)) => SeedRun {
                initial_path_text: Some(describe_path(self.graph, &trace.initial_path)),
                final_path_text: Some(describe_path(self.graph, &path)),
                seed,
                trace: Some(trace),
                error: None,
            },
            Err(e) => {
                tracing::warn!(seed = %seed.label, error = %e, "seed exploration failed");
                SeedRun {
                    seed,
                    trace: None,
                    initial_path_text: None,
                    final_path_text: None,
                    error: Some(e.to_string()),
                }
            }
        }
    }

    /// Answers `question`, optionally as a multiple-choice item.
    pub fn answer(&self, question: &str, options: &[(char, String)]) -> Result<QueryTrace> {
        let p = &self.config.params;
        let concepts = extract_concepts(question, p.max_concepts, self.llm, &self.templates.concepts)?;
        let mut matched = match_seed_entities(&concepts, self.graph, self.sim, p.tau_entity)?;
        if let Some(cap) = self.seed_cap {
            matched.seeds.truncate(cap);
        }

        let seeds: Vec<SeedRun> = if self.parallel_seeds {
            matched
                .seeds
                .into_par_iter()
                .map(|s| self.run_seed(s, &concepts))
                .collect()
        } else {
            matched
                .seeds
                .into_iter()
                .map(|s| self.run_seed(s, &concepts))
                .collect()
        };

        let paths: Vec<Path> = seeds
            .iter()
            .filter_map(|s| s.trace.as_ref().map(|t| t.final_path.clone()))
            .collect();
        let evidence = integrate(&paths, self.graph);
        let opts = (!options.is_empty()).then_some(options);
        let answer = generate_answer(
            question,
            &evidence,
            self.llm,
            &self.templates.answer,
            opts,
            self.answer_temperature,
        )?;

        Ok(QueryTrace {
            question: question.to_string(),
            options: options.to_vec(),
            concepts,
            unmatched_concepts: matched.unmatched,
            seeds,
            evidence_text: render_evidence(&evidence),
            evidence,
            prompt: answer.prompt,
            raw_output: answer.text,
            chosen_option: answer.chosen_option,
        })
    }
}
