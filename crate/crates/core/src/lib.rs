//! Knowledge-graph question answering with metacognitive path refinement.
//!
//! A question is decomposed into concepts, matched to seed entities, and
//! explored greedily. Each seed's path is then checked for missing concepts
//! and weakly supported entities, edge weights are adjusted, and the path is
//! re-searched from a chosen restart point until it stabilises. The union of
//! the final paths is handed to an LLM as evidence.
//!
//! ```
//! use metakg::{load_triples, HashProvider, SimilarityCache, Similarity};
//!
//! let (g, _) = load_triples("aspirin\tis_a\tNSAID\n").unwrap();
//! let sim = SimilarityCache::new(HashProvider::default());
//! sim.warm(&g).unwrap();
//! assert_eq!(sim.sim("aspirin", "aspirin").unwrap(), 1.0);
//! ```

pub mod builder;
pub mod cli;
pub mod config;
pub mod cycle;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod evidence;
pub mod graph;
mod http;
pub mod llm;
pub mod params;
pub mod path;
pub mod pipeline;
pub mod prompts;
pub mod query;
pub mod scenario;

pub use builder::{build_kg, extract_triples, load_dataset, parse_dataset, BuildOptions, BuildReport, QARecord};
pub use cycle::{run_cycle, Ablations, CycleConfig, ExclusionMode, IterationTrace, StopReason};
pub use embedding::{
    cosine, EmbeddingProvider, HashProvider, RemoteEmbeddings, Similarity, SimilarityCache, TableSimilarity,
    Vector,
};
pub use error::{Error, Result};
pub use eval::{compute_prr, run_batch, BatchReport, Outcome};
pub use evidence::{integrate, parse_option_letter, render_evidence, EvidenceSubgraph};
pub use graph::{load_triples, normalize_label, Direction, EntityId, KnowledgeGraph, Triple};
pub use http::{Endpoint, RetryPolicy};
pub use llm::{CompletionRequest, LlmProvider, RemoteChat, ScriptedProvider};
pub use params::Params;
pub use path::{greedy_explore, EdgeWeighting, Path, PathStep, WeightAdjustments};
pub use pipeline::{Pipeline, QueryTrace};
pub use query::{extract_concepts, match_seed_entities, ConceptSet, SeedEntity};
