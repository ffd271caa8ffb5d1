use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thresholds and limits for retrieval and refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    /// Upper bound on concepts kept from extraction.
    pub max_concepts: usize,
    /// Seed matches must score strictly above this.
    pub tau_entity: f64,
    /// A concept whose coverage falls below this is missing.
    pub tau_coverage: f64,
    /// Concept relevance cut-off inside the entity scope count.
    pub tau_c: f64,
    /// Path entities with global support below this are misleading.
    pub tau_support: f64,
    /// Refinement stops once consecutive paths overlap more than this.
    pub tau_similarity: f64,
    /// Weight of entity scope against question similarity.
    pub alpha: f64,
    /// Magnitude of the per-entity weight adjustment.
    pub delta: f64,
    pub n_max: usize,
    pub max_hops: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            max_concepts: 5,
            tau_entity: 0.5,
            tau_coverage: 0.6,
            tau_c: 0.3,
            tau_support: 0.4,
            tau_similarity: 0.8,
            alpha: 0.5,
            delta: 0.2,
            n_max: 3,
            max_hops: 4,
        }
    }
}

impl Params {
    pub const NAMES: [&'static str; 10] = [
        "max_concepts",
        "tau_entity",
        "tau_coverage",
        "tau_c",
        "tau_support",
        "tau_similarity",
        "alpha",
        "delta",
        "n_max",
        "max_hops",
    ];

    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("tau_entity", self.tau_entity),
            ("tau_coverage", self.tau_coverage),
            ("tau_c", self.tau_c),
            ("tau_support", self.tau_support),
            ("tau_similarity", self.tau_similarity),
            ("alpha", self.alpha),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!("delta = {} must be > 0", self.delta)));
        }
        if self.max_concepts == 0 {
            return Err(Error::Config("max_concepts must be >= 1".into()));
        }
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be >= 1".into()));
        }
        if self.max_hops == 0 {
            return Err(Error::Config("max_hops must be >= 1".into()));
        }
        Ok(())
    }

    /// Sets a field from its textual name and value.
    pub fn set(&mut self, name: &str, value: &str) -> Result<()> {
        let bad = || Error::Config(format!("invalid value {value:?} for {name}"));
        let real = || value.trim().parse::<f64>().map_err(|_| bad());
        let int = || value.trim().parse::<usize>().map_err(|_| bad());
        match name {
            "max_concepts" => self.max_concepts = int()?,
            "tau_entity" => self.tau_entity = real()?,
            "tau_coverage" => self.tau_coverage = real()?,
            "tau_c" => self.tau_c = real()?,
            "tau_support" => self.tau_support = real()?,
            "tau_similarity" => self.tau_similarity = real()?,
            "alpha" => self.alpha = real()?,
            "delta" => self.delta = real()?,
            "n_max" => self.n_max = int()?,
            "max_hops" => self.max_hops = int()?,
            other => return Err(Error::Config(format!("unknown parameter {other:?}"))),
        }
        Ok(())
    }
}
