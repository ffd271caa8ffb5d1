//! Run configuration: a flat `key = value` file with `${VAR}` environment
//! interpolation. Relative paths resolve against the file's directory;
//! command-line overrides go through the same [`RunConfig::set`].
//!
//! ```text
//! graph = graph.tsv
//! embedding.provider = table        # hash | table | remote
//! embedding.table = sims.tsv
//! llm.provider = remote             # scripted | remote
//! llm.url = https://api.example.com/v1/chat/completions
//! llm.model = some-chat-model
//! llm.api_key = ${CHAT_API_KEY}
//! params.tau_entity = 0.9
//! ablation.naive_restart = true
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;

use crate::cycle::{Ablations, CycleConfig, ExclusionMode};
use crate::embedding::{HashProvider, RemoteEmbeddings, Similarity, SimilarityCache, TableSimilarity};
use crate::error::{Error, Result};
use crate::graph::{load_triples, KnowledgeGraph};
use crate::http::Endpoint;
use crate::llm::{LlmProvider, RemoteChat, ScriptedProvider, DEFAULT_TEMPERATURE};
use crate::params::Params;
use crate::path::EdgeWeighting;
use crate::pipeline::Templates;
use crate::prompts::{self, PromptTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbeddingKind {
    #[default]
    Hash,
    Table,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LlmKind {
    #[default]
    Scripted,
    Remote,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingConfig {
    pub provider: EmbeddingKind,
    pub table: Option<PathBuf>,
    pub dim: Option<usize>,
    pub url: Option<String>,
    pub model: Option<String>,
    pub api_key: Option<String>,
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LlmConfig {
    pub provider: LlmKind,
    pub script: Option<PathBuf>,
    pub url: Option<String>,
    pub model: Option<String>,
    pub api_key: Option<String>,
    pub timeout_secs: Option<u64>,
    /// Optional model for triple extraction only.
    pub extraction_model: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub ablations: Ablations,
    pub exclusion: ExclusionMode,
    pub weighting: EdgeWeighting,
    pub embedding: EmbeddingConfig,
    pub llm: LlmConfig,
    pub graph: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub parallelism: usize,
    pub seed_cap: Option<usize>,
    pub answer_temperature: f64,
    pub prompt_concepts: Option<PathBuf>,
    pub prompt_answer: Option<PathBuf>,
    pub prompt_triples: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: Params::default(),
            ablations: Ablations::default(),
            exclusion: ExclusionMode::default(),
            weighting: EdgeWeighting::default(),
            embedding: EmbeddingConfig::default(),
            llm: LlmConfig::default(),
            graph: None,
            dataset: None,
            out: None,
            parallelism: 4,
            seed_cap: None,
            answer_temperature: DEFAULT_TEMPERATURE,
            prompt_concepts: None,
            prompt_answer: None,
            prompt_triples: None,
        }
    }
}

fn env_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}").unwrap())
}

/// Replaces `${VAR}` with the variable's value; unset variables are errors.
pub fn interpolate(value: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String> {
    let mut out = String::with_capacity(value.len());
    let mut last = 0;
    for cap in env_pattern().captures_iter(value) {
        let m = cap.get(0).unwrap();
        let name = &cap[1];
        let v = lookup(name)
            .ok_or_else(|| Error::Config(format!("environment variable {name} is not set")))?;
        out.push_str(&value[last..m.start()]);
        out.push_str(&v);
        last = m.end();
    }
    out.push_str(&value[last..]);
    Ok(out)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn resolve(base: &Path, v: &str) -> PathBuf {
    let p = PathBuf::from(v);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Parses config text; `base` anchors relative paths.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        Self::parse_with_env(text, base, |k| std::env::var(k).ok())
    }

    pub fn parse_with_env(
        text: &str,
        base: &Path,
        lookup: impl Fn(&str) -> Option<String>,
    ) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find(" #") {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected key = value"))?;
            let value = interpolate(value.trim(), &lookup)?;
            cfg.set(key.trim(), &value, base)
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Sets one key. Path values are resolved against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        if let Some(name) = key.strip_prefix("params.") {
            self.params.set(name, value)?;
            return self.params.validate();
        }
        if let Some(name) = key.strip_prefix("ablation.") {
            let v = parse_bool(key, value)?;
            let a = &mut self.ablations;
            match name {
                "disable_cycle" => a.disable_cycle = v,
                "disable_completeness_check" => a.disable_completeness_check = v,
                "disable_relevance_check" => a.disable_relevance_check = v,
                "naive_restart" => a.naive_restart = v,
                _ => return Err(Error::Config(format!("unknown ablation {name:?}"))),
            }
            return Ok(());
        }
        match key {
            "graph" => self.graph = Some(resolve(base, value)),
            "dataset" => self.dataset = Some(resolve(base, value)),
            "out" => self.out = Some(resolve(base, value)),
            "parallelism" => {
                self.parallelism = parse_num(key, value)?;
                if self.parallelism == 0 {
                    return Err(Error::Config("parallelism must be at least 1".into()));
                }
            }
            "seed_cap" => self.seed_cap = Some(parse_num(key, value)?),
            "answer_temperature" => self.answer_temperature = parse_num(key, value)?,
            "exclusion" => {
                self.exclusion = match value {
                    "hard" => ExclusionMode::Hard,
                    "soft" => ExclusionMode::Soft,
                    _ => return Err(Error::Config(format!("exclusion: expected hard|soft, got {value:?}"))),
                }
            }
            "weighting" => {
                self.weighting = match value {
                    "destination" => EdgeWeighting::Destination,
                    "relation_aware" => EdgeWeighting::RelationAware,
                    _ => {
                        return Err(Error::Config(format!(
                            "weighting: expected destination|relation_aware, got {value:?}"
                        )))
                    }
                }
            }
            "prompt.concepts" => self.prompt_concepts = Some(resolve(base, value)),
            "prompt.answer" => self.prompt_answer = Some(resolve(base, value)),
            "prompt.triples" => self.prompt_triples = Some(resolve(base, value)),
            "embedding.provider" => {
                self.embedding.provider = match value {
                    "hash" => EmbeddingKind::Hash,
                    "table" => EmbeddingKind::Table,
                    "remote" => EmbeddingKind::Remote,
                    _ => return Err(Error::Config(format!("embedding.provider: unknown {value:?}"))),
                }
            }
            "embedding.table" => self.embedding.table = Some(resolve(base, value)),
            "embedding.dim" => self.embedding.dim = Some(parse_num(key, value)?),
            "embedding.url" => self.embedding.url = Some(value.to_string()),
            "embedding.model" => self.embedding.model = Some(value.to_string()),
            "embedding.api_key" => self.embedding.api_key = Some(value.to_string()),
            "embedding.timeout_secs" => self.embedding.timeout_secs = Some(parse_num(key, value)?),
            "llm.provider" => {
                self.llm.provider = match value {
                    "scripted" => LlmKind::Scripted,
                    "remote" => LlmKind::Remote,
                    _ => return Err(Error::Config(format!("llm.provider: unknown {value:?}"))),
                }
            }
            "llm.script" => self.llm.script = Some(resolve(base, value)),
            "llm.url" => self.llm.url = Some(value.to_string()),
            "llm.model" => self.llm.model = Some(value.to_string()),
            "llm.extraction_model" => self.llm.extraction_model = Some(value.to_string()),
            "llm.api_key" => self.llm.api_key = Some(value.to_string()),
            "llm.timeout_secs" => self.llm.timeout_secs = Some(parse_num(key, value)?),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn cycle_config(&self) -> CycleConfig {
        CycleConfig {
            params: self.params.clone(),
            ablations: self.ablations,
            weighting: self.weighting,
            exclusion: self.exclusion,
            ..CycleConfig::default()
        }
    }

    pub fn load_graph(&self) -> Result<KnowledgeGraph> {
        let path = self
            .graph
            .as_ref()
            .ok_or_else(|| Error::Config("no graph configured".into()))?;
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read graph {}: {e}", path.display())))?;
        Ok(load_triples(&text)?.0)
    }

    pub fn similarity(&self) -> Result<Box<dyn Similarity>> {
        let e = &self.embedding;
        Ok(match e.provider {
            EmbeddingKind::Hash => Box::new(SimilarityCache::new(HashProvider::new(
                e.dim.unwrap_or(HashProvider::DEFAULT_DIM),
            ))),
            EmbeddingKind::Table => {
                let path = e
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Config("embedding.table is required for the table provider".into()))?;
                Box::new(TableSimilarity::load(path)?)
            }
            EmbeddingKind::Remote => {
                let endpoint = endpoint("embedding", &e.url, &e.model, &e.api_key, e.timeout_secs)?;
                let dim = e
                    .dim
                    .ok_or_else(|| Error::Config("embedding.dim is required for the remote provider".into()))?;
                Box::new(SimilarityCache::new(RemoteEmbeddings::new(endpoint, dim)))
            }
        })
    }

    fn llm_with_model(&self, model: &Option<String>) -> Result<Box<dyn LlmProvider>> {
        let l = &self.llm;
        Ok(match l.provider {
            LlmKind::Scripted => {
                let path = l
                    .script
                    .as_ref()
                    .ok_or_else(|| Error::Config("llm.script is required for the scripted provider".into()))?;
                Box::new(ScriptedProvider::load(path)?)
            }
            LlmKind::Remote => {
                Box::new(RemoteChat::new(endpoint("llm", &l.url, model, &l.api_key, l.timeout_secs)?))
            }
        })
    }

    pub fn llm(&self) -> Result<Box<dyn LlmProvider>> {
        self.llm_with_model(&self.llm.model)
    }

    /// The provider used for triple extraction, honouring `llm.extraction_model`.
    pub fn extraction_llm(&self) -> Result<Box<dyn LlmProvider>> {
        let model = self.llm.extraction_model.clone().or_else(|| self.llm.model.clone());
        self.llm_with_model(&model)
    }

    pub fn templates(&self) -> Result<Templates> {
        Ok(Templates {
            concepts: template(prompts::concept_extraction(), &self.prompt_concepts)?,
            answer: template(prompts::answer_generation(), &self.prompt_answer)?,
        })
    }

    pub fn triple_template(&self) -> Result<PromptTemplate> {
        template(prompts::triple_extraction(), &self.prompt_triples)
    }
}

fn template(builtin: PromptTemplate, path: &Option<PathBuf>) -> Result<PromptTemplate> {
    match path {
        Some(p) => PromptTemplate::load_override(&builtin, p),
        None => Ok(builtin),
    }
}

fn endpoint(
    section: &str,
    url: &Option<String>,
    model: &Option<String>,
    key: &Option<String>,
    timeout: Option<u64>,
) -> Result<Endpoint> {
    let url = url
        .clone()
        .ok_or_else(|| Error::Config(format!("{section}.url is required for the remote provider")))?;
    let model = model
        .clone()
        .ok_or_else(|| Error::Config(format!("{section}.model is required for the remote provider")))?;
    let mut ep = Endpoint::new(url, model);
    if let Some(k) = key {
        ep = ep.with_api_key(k.clone());
    }
    if let Some(t) = timeout {
        ep.timeout = Duration::from_secs(t);
    }
    Ok(ep)
}
