//! Embedding providers and clamped similarity scoring.
//!
//! All scoring in the crate goes through the [`Similarity`] trait, which
//! returns `max(0, cosine)` in `[0, 1]`. Two implementations ship:
//! [`SimilarityCache`] wraps an [`EmbeddingProvider`] and memoizes vectors,
//! while [`TableSimilarity`] answers from an explicit pair table so that
//! algorithm tests never depend on a model.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use lru::LruCache;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::KnowledgeGraph;
use crate::http::{Endpoint, JsonClient, RetryPolicy};

/// Dense embedding with finite components.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("vector has non-finite components".into()));
        }
        Ok(Self(components))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn scaled(&self, k: f64) -> Vector {
        Vector(self.0.iter().map(|c| c * k).collect())
    }
}

/// Cosine similarity in `[-1, 1]`.
pub fn cosine(a: &Vector, b: &Vector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.0.iter().zip(&b.0) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Maps a raw cosine onto the scoring range used everywhere downstream.
pub fn clamp_score(raw: f64) -> f64 {
    raw.clamp(0.0, 1.0)
}

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vector>>;

    fn embed(&self, text: &str) -> Result<Vector> {
        let mut out = self.embed_batch(&[text])?;
        out.pop()
            .ok_or_else(|| Error::Retryable("provider returned no vectors".into()))
    }
}

/// Clamped semantic similarity between two texts.
pub trait Similarity: Send + Sync {
    fn sim(&self, a: &str, b: &str) -> Result<f64>;

    /// Pre-computes whatever is needed to score every entity of `graph`.
    /// Returns the number of new provider calls it made.
    fn warm(&self, _graph: &KnowledgeGraph) -> Result<usize> {
        Ok(0)
    }
}

impl<S: Similarity + ?Sized> Similarity for Arc<S> {
    fn sim(&self, a: &str, b: &str) -> Result<f64> {
        (**self).sim(a, b)
    }

    fn warm(&self, graph: &KnowledgeGraph) -> Result<usize> {
        (**self).warm(graph)
    }
}

impl<S: Similarity + ?Sized> Similarity for &S {
    fn sim(&self, a: &str, b: &str) -> Result<f64> {
        (**self).sim(a, b)
    }

    fn warm(&self, graph: &KnowledgeGraph) -> Result<usize> {
        (**self).warm(graph)
    }
}

/// Character-trigram feature hashing, unit-normalized. Deterministic across
/// runs and platforms; intended for fuzzing and offline demos.
#[derive(Debug, Clone)]
pub struct HashProvider {
    dimension: usize,
}

impl HashProvider {
    pub const DEFAULT_DIM: usize = 256;

    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        Self { dimension }
    }

    pub fn vector(&self, text: &str) -> Vector {
        let padded: Vec<char> = format!("  {} ", text.trim().to_lowercase()).chars().collect();
        let mut v = vec![0.0; self.dimension];
        for w in padded.windows(3) {
            let mut buf = [0u8; 12];
            let mut bytes = Vec::with_capacity(12);
            for c in w {
                bytes.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            }
            let h = fnv1a(&bytes);
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[(h % self.dimension as u64) as usize] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Vector(v)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Default for HashProvider {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIM)
    }
}

impl EmbeddingProvider for HashProvider {
    fn name(&self) -> &str {
        "hash-trigram"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vector>> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

/// Embeddings endpoint speaking `{model, input}` → `{data: [{embedding}]}`.
pub struct RemoteEmbeddings {
    client: JsonClient,
    dimension: usize,
    retry: RetryPolicy,
}

impl RemoteEmbeddings {
    pub fn new(endpoint: Endpoint, dimension: usize) -> Self {
        Self {
            client: JsonClient::new(endpoint),
            dimension,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }
}

impl EmbeddingProvider for RemoteEmbeddings {
    fn name(&self) -> &str {
        &self.client.endpoint().model
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vector>> {
        let body = EmbeddingRequest {
            model: &self.client.endpoint().model,
            input: texts,
        };
        let resp: EmbeddingResponse = self.retry.run(|| self.client.post(&body))?;
        if resp.data.len() != texts.len() {
            return Err(Error::Rejected(format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                resp.data.len()
            )));
        }
        resp.data
            .into_iter()
            .map(|d| {
                if self.dimension != 0 && d.embedding.len() != self.dimension {
                    return Err(Error::DimensionMismatch {
                        left: self.dimension,
                        right: d.embedding.len(),
                    });
                }
                Vector::new(d.embedding)
            })
            .collect()
    }
}

const WARM_BATCH: usize = 64;
pub const DEFAULT_TEXT_CAPACITY: usize = 100_000;

#[derive(Default)]
struct EntityVectors {
    by_label: HashMap<String, Arc<Vector>>,
}

/// Provider-backed similarity with an entity-vector table and an LRU of
/// other texts (concepts, questions).
pub struct SimilarityCache<P> {
    provider: P,
    entities: RwLock<EntityVectors>,
    texts: Mutex<LruCache<String, Arc<Vector>>>,
}

impl<P: EmbeddingProvider> SimilarityCache<P> {
    pub fn new(provider: P) -> Self {
        Self::with_capacity(provider, DEFAULT_TEXT_CAPACITY)
    }

    pub fn with_capacity(provider: P, text_capacity: usize) -> Self {
        let cap = NonZeroUsize::new(text_capacity.max(1)).expect("nonzero");
        Self {
            provider,
            entities: RwLock::new(EntityVectors::default()),
            texts: Mutex::new(LruCache::new(cap)),
        }
    }

    pub fn provider(&self) -> &P {
        &self.provider
    }

    pub fn entity_vector_count(&self) -> usize {
        self.entities.read().expect("poisoned").by_label.len()
    }

    /// Embeds every entity label not yet cached, in batches. Vectors from
    /// completed batches are kept if a later batch fails, so a rerun resumes.
    pub fn warm_entities(&self, graph: &KnowledgeGraph) -> Result<usize> {
        let pending: Vec<&str> = {
            let ents = self.entities.read().expect("poisoned");
            graph
                .entities()
                .map(|e| graph.label(e))
                .filter(|l| !ents.by_label.contains_key(*l))
                .collect()
        };
        let mut calls = 0;
        for chunk in pending.chunks(WARM_BATCH) {
            let vectors = self.provider.embed_batch(chunk).inspect_err(|_| {
                tracing::warn!(
                    done = self.entity_vector_count(),
                    total = graph.entity_count(),
                    "entity warm-up interrupted"
                );
            })?;
            calls += 1;
            let mut ents = self.entities.write().expect("poisoned");
            for (label, v) in chunk.iter().zip(vectors) {
                ents.by_label.insert((*label).to_string(), Arc::new(v));
            }
        }
        Ok(calls)
    }

    fn vector(&self, text: &str) -> Result<Arc<Vector>> {
        if let Some(v) = self.entities.read().expect("poisoned").by_label.get(text) {
            return Ok(Arc::clone(v));
        }
        if let Some(v) = self.texts.lock().expect("poisoned").get(text) {
            return Ok(Arc::clone(v));
        }
        let v = Arc::new(self.provider.embed(text)?);
        self.texts
            .lock()
            .expect("poisoned")
            .put(text.to_string(), Arc::clone(&v));
        Ok(v)
    }
}

impl<P: EmbeddingProvider> Similarity for SimilarityCache<P> {
    fn sim(&self, a: &str, b: &str) -> Result<f64> {
        if a == b {
            return Ok(1.0);
        }
        let (va, vb) = (self.vector(a)?, self.vector(b)?);
        match cosine(&va, &vb) {
            Ok(c) => Ok(clamp_score(c)),
            Err(Error::ZeroVector) => {
                tracing::warn!(a, b, "zero embedding; scoring as 0");
                Ok(0.0)
            }
            Err(e) => Err(e),
        }
    }

    fn warm(&self, graph: &KnowledgeGraph) -> Result<usize> {
        self.warm_entities(graph)
    }
}

/// Builds a cache holding one vector per entity of `graph`.
pub fn warm_entity_cache<P: EmbeddingProvider>(
    graph: &KnowledgeGraph,
    provider: P,
) -> Result<SimilarityCache<P>> {
    let cache = SimilarityCache::new(provider);
    cache.warm_entities(graph)?;
    Ok(cache)
}

/// Symmetric pair table of raw cosine values.
///
/// Identical texts always score 1. A missing pair is an error unless a
/// default value was configured.
#[derive(Debug, Clone, Default)]
pub struct TableSimilarity {
    pairs: HashMap<(String, String), f64>,
    default: Option<f64>,
}

impl TableSimilarity {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_default(mut self, value: f64) -> Self {
        self.default = Some(value);
        self
    }

    pub fn set_default(&mut self, value: Option<f64>) {
        self.default = value;
    }

    pub fn insert(&mut self, a: &str, b: &str, raw: f64) {
        self.pairs.insert(Self::key(a, b), raw);
    }

    pub fn with(mut self, a: &str, b: &str, raw: f64) -> Self {
        self.insert(a, b, raw);
        self
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Raw table entry, before clamping.
    pub fn raw(&self, a: &str, b: &str) -> Option<f64> {
        if a == b {
            return Some(1.0);
        }
        self.pairs.get(&Self::key(a, b)).copied().or(self.default)
    }

    fn key(a: &str, b: &str) -> (String, String) {
        if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    }

    /// Parses `text_a<TAB>text_b<TAB>value` lines. A `#default <value>` line
    /// sets the fallback for missing pairs; other `#` lines are comments.
    pub fn parse(source: &str) -> Result<Self> {
        let mut table = Self::new();
        for (i, line) in source.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            let trimmed = line.trim();
            if let Some(rest) = trimmed.strip_prefix("#default") {
                let v: f64 = rest
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(i + 1, "bad #default value"))?;
                table.default = Some(v);
                continue;
            }
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(i + 1, "expected text_a<TAB>text_b<TAB>value"));
            }
            let v: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| Error::parse(i + 1, "bad similarity value"))?;
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::parse(i + 1, "similarity outside [-1, 1]"));
            }
            table.insert(fields[0], fields[1], v);
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

impl Similarity for TableSimilarity {
    fn sim(&self, a: &str, b: &str) -> Result<f64> {
        self.raw(a, b)
            .map(clamp_score)
            .ok_or_else(|| Error::MissingSimilarity(a.to_string(), b.to_string()))
    }
}
