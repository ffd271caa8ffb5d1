//! Path refinement: perceive coverage, evaluate deficiencies, adjust and
//! re-explore, until the path is clean, stops changing, or the iteration
//! budget runs out.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::embedding::Similarity;
use crate::error::Result;
use crate::graph::{EntityId, KnowledgeGraph};
use crate::params::Params;
use crate::path::{EdgeWeighting, Explorer, Path, WeightAdjustments};
use crate::query::{ConceptSet, SeedEntity};

/// Switches that remove individual mechanisms for ablation runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablations {
    pub disable_cycle: bool,
    pub disable_completeness_check: bool,
    pub disable_relevance_check: bool,
    /// Re-explore from the seed with an empty prefix instead of a
    /// strategic restart point.
    pub naive_restart: bool,
}

/// Whether misleading entities are removed from re-search or only
/// penalized by the negative delta.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionMode {
    #[default]
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CycleConfig {
    pub params: Params,
    pub ablations: Ablations,
    pub weighting: EdgeWeighting,
    pub exclusion: ExclusionMode,
    /// Cap on entities receiving a positive delta per adjustment.
    pub boost_limit: usize,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            params: Params::default(),
            ablations: Ablations::default(),
            weighting: EdgeWeighting::default(),
            exclusion: ExclusionMode::default(),
            boost_limit: 10,
        }
    }
}

impl CycleConfig {
    pub fn with_params(params: Params) -> Self {
        Self {
            params,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptCoverage {
    pub concept: String,
    pub coverage: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoverageMap(pub Vec<ConceptCoverage>);

impl CoverageMap {
    pub fn get(&self, concept: &str) -> Option<f64> {
        self.0
            .iter()
            .find(|c| c.concept == concept)
            .map(|c| c.coverage)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|c| (c.concept.as_str(), c.coverage))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisleadingEntity {
    pub entity: EntityId,
    pub label: String,
    pub support: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missing_concepts: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub misleading_entities: Option<Vec<MisleadingEntity>>,
}

impl Diagnosis {
    pub fn is_empty(&self) -> bool {
        self.missing_concepts.is_none() && self.misleading_entities.is_none()
    }

    pub fn has_completeness_issue(&self) -> bool {
        self.missing_concepts.is_some()
    }

    pub fn has_relevance_issue(&self) -> bool {
        self.misleading_entities.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentPlan {
    pub restart: EntityId,
    pub deltas: BTreeMap<EntityId, f64>,
    pub excluded: BTreeSet<EntityId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoIssues,
    Similar,
    NMax,
    /// The refinement cycle was switched off.
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub path: Path,
    pub coverage: CoverageMap,
    pub diagnosis: Diagnosis,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<AdjustmentPlan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub new_path: Option<Path>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_similarity: Option<f64>,
    /// For an accepted completeness-driven re-search: whether the weakest
    /// previously missing concept is covered at least as well as before.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub completeness_improved: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub seed: EntityId,
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    pub initial_path: Path,
    pub final_path: Path,
}

/// Per concept, the best clamped similarity to any path entity (seed
/// included).
pub fn perceive(
    path: &Path,
    concepts: &ConceptSet,
    graph: &KnowledgeGraph,
    sim: &dyn Similarity,
) -> Result<CoverageMap> {
    let entities = path.entities();
    let mut out = Vec::with_capacity(concepts.len());
    for concept in &concepts.concepts {
        let mut best: f64 = 0.0;
        for &e in &entities {
            best = best.max(sim.sim(concept, graph.label(e))?);
        }
        out.push(ConceptCoverage {
            concept: concept.clone(),
            coverage: best,
        });
    }
    Ok(CoverageMap(out))
}

/// Fraction of concepts whose similarity to `label` strictly exceeds `tau_c`.
pub fn entity_scope(
    label: &str,
    concepts: &ConceptSet,
    tau_c: f64,
    sim: &dyn Similarity,
) -> Result<f64> {
    if concepts.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for c in &concepts.concepts {
        if sim.sim(label, c)? > tau_c {
            hits += 1;
        }
    }
    Ok(hits as f64 / concepts.len() as f64)
}

pub fn global_support(
    label: &str,
    question: &str,
    concepts: &ConceptSet,
    alpha: f64,
    tau_c: f64,
    sim: &dyn Similarity,
) -> Result<f64> {
    let scope = entity_scope(label, concepts, tau_c, sim)?;
    let relevance = sim.sim(label, question)?;
    Ok(alpha * scope + (1.0 - alpha) * relevance)
}

pub fn evaluate(
    coverage: &CoverageMap,
    path: &Path,
    concepts: &ConceptSet,
    graph: &KnowledgeGraph,
    config: &CycleConfig,
    sim: &dyn Similarity,
) -> Result<Diagnosis> {
    let p = &config.params;
    let mut diagnosis = Diagnosis::default();
    if !config.ablations.disable_completeness_check {
        let missing: Vec<String> = coverage
            .iter()
            .filter(|(_, v)| *v < p.tau_coverage)
            .map(|(c, _)| c.to_string())
            .collect();
        if !missing.is_empty() {
            diagnosis.missing_concepts = Some(missing);
        }
    }
    if !config.ablations.disable_relevance_check {
        let mut flagged = Vec::new();
        for e in path.entities() {
            let label = graph.label(e);
            let support = global_support(label, &concepts.query, concepts, p.alpha, p.tau_c, sim)?;
            if support < p.tau_support {
                flagged.push(MisleadingEntity {
                    entity: e,
                    label: label.to_string(),
                    support,
                });
            }
        }
        if !flagged.is_empty() {
            diagnosis.misleading_entities = Some(flagged);
        }
    }
    Ok(diagnosis)
}

fn argmax_by_score(scored: impl IntoIterator<Item = (EntityId, f64)>) -> Option<(EntityId, f64)> {
    scored.into_iter().fold(None, |best, (e, s)| match best {
        Some((be, bs)) if bs > s || (bs == s && be < e) => Some((be, bs)),
        _ => Some((e, s)),
    })
}

fn max_sim_to(label: &str, concepts: &[String], sim: &dyn Similarity) -> Result<f64> {
    let mut best: f64 = 0.0;
    for c in concepts {
        best = best.max(sim.sim(label, c)?);
    }
    Ok(best)
}

/// Turns a non-empty diagnosis into weight deltas, exclusions and a
/// restart point on the current path.
pub fn plan_adjustment(
    path: &Path,
    diagnosis: &Diagnosis,
    concepts: &ConceptSet,
    graph: &KnowledgeGraph,
    config: &CycleConfig,
    sim: &dyn Similarity,
) -> Result<AdjustmentPlan> {
    let p = &config.params;
    let on_path = path.entities();
    let mut deltas = BTreeMap::new();
    let mut restart = None;

    if let Some(missing) = &diagnosis.missing_concepts {
        let mut candidates = Vec::new();
        for e in graph.entities() {
            if path.contains(e) {
                continue;
            }
            let s = max_sim_to(graph.label(e), missing, sim)?;
            if s > p.tau_c {
                candidates.push((e, s));
            }
        }
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (e, _) in candidates.into_iter().take(config.boost_limit) {
            deltas.insert(e, p.delta);
        }
        let mut scored = Vec::with_capacity(on_path.len());
        for &e in &on_path {
            scored.push((e, max_sim_to(graph.label(e), missing, sim)?));
        }
        restart = argmax_by_score(scored).map(|(e, _)| e);
    }

    let mut excluded = BTreeSet::new();
    if let Some(flagged) = &diagnosis.misleading_entities {
        for m in flagged {
            deltas.insert(m.entity, -p.delta);
        }
        if restart.is_none() {
            let mut scored = Vec::with_capacity(on_path.len());
            for &e in &on_path {
                let gs = global_support(
                    graph.label(e),
                    &concepts.query,
                    concepts,
                    p.alpha,
                    p.tau_c,
                    sim,
                )?;
                scored.push((e, gs));
            }
            restart = argmax_by_score(scored).map(|(e, _)| e);
        }
    }

    let restart = if config.ablations.naive_restart {
        path.seed
    } else {
        restart.unwrap_or(path.seed)
    };

    if config.exclusion == ExclusionMode::Hard {
        if let Some(flagged) = &diagnosis.misleading_entities {
            // entities kept in the restart prefix stay on the path
            let kept = path
                .prefix_through(restart)
                .map(|p| p.entity_set())
                .unwrap_or_default();
            excluded.extend(flagged.iter().map(|m| m.entity).filter(|e| !kept.contains(e)));
        }
    }

    if !deltas.values().any(|d| *d > 0.0) && diagnosis.has_completeness_issue() {
        tracing::debug!("no external entity qualified for a positive adjustment");
    }

    Ok(AdjustmentPlan {
        restart,
        deltas,
        excluded,
    })
}

/// Jaccard overlap of the two paths' entity sets; two empty sets count as
/// identical.
pub fn path_similarity(a: &Path, b: &Path) -> f64 {
    let (ea, eb) = (a.entity_set(), b.entity_set());
    let union = ea.union(&eb).count();
    if union == 0 {
        return 1.0;
    }
    ea.intersection(&eb).count() as f64 / union as f64
}

fn weakest(coverage: &CoverageMap, concepts: &[String]) -> f64 {
    concepts
        .iter()
        .filter_map(|c| coverage.get(c))
        .fold(f64::INFINITY, f64::min)
}

/// Runs the refinement loop for one seed.
pub fn run_cycle(
    seed: &SeedEntity,
    concepts: &ConceptSet,
    graph: &KnowledgeGraph,
    config: &CycleConfig,
    sim: &dyn Similarity,
) -> Result<(Path, IterationTrace)> {
    let p = &config.params;
    let explorer = Explorer::new(graph, sim, &concepts.query, p.max_hops).weighting(config.weighting);
    let mut adjustments = WeightAdjustments::default();
    let initial = explorer.explore(seed.entity, &adjustments, None)?;

    if config.ablations.disable_cycle {
        let coverage = perceive(&initial, concepts, graph, sim)?;
        let record = IterationRecord {
            iteration: 1,
            path: initial.clone(),
            coverage,
            diagnosis: Diagnosis::default(),
            plan: None,
            new_path: None,
            path_similarity: None,
            completeness_improved: None,
            stop: Some(StopReason::Disabled),
        };
        let trace = IterationTrace {
            seed: seed.entity,
            records: vec![record],
            stop_reason: StopReason::Disabled,
            initial_path: initial.clone(),
            final_path: initial.clone(),
        };
        return Ok((initial, trace));
    }

    let mut current = initial.clone();
    let mut records = Vec::new();
    let mut stop_reason = StopReason::NMax;

    for iteration in 1..=p.n_max {
        let coverage = perceive(&current, concepts, graph, sim)?;
        let diagnosis = evaluate(&coverage, &current, concepts, graph, config, sim)?;
        let mut record = IterationRecord {
            iteration,
            path: current.clone(),
            coverage,
            diagnosis,
            plan: None,
            new_path: None,
            path_similarity: None,
            completeness_improved: None,
            stop: None,
        };
        if record.diagnosis.is_empty() {
            record.stop = Some(StopReason::NoIssues);
            stop_reason = StopReason::NoIssues;
            records.push(record);
            break;
        }

        let plan = plan_adjustment(&current, &record.diagnosis, concepts, graph, config, sim)?;
        adjustments.merge(&plan.deltas, &plan.excluded);
        let prefix = current
            .prefix_through(plan.restart)
            .unwrap_or_else(|| Path::empty(current.seed));
        let new_path = explorer.explore(seed.entity, &adjustments, Some(&prefix))?;
        let similarity = path_similarity(&new_path, &current);
        record.plan = Some(plan);
        record.path_similarity = Some(similarity);

        if similarity > p.tau_similarity {
            record.new_path = Some(new_path);
            record.stop = Some(StopReason::Similar);
            stop_reason = StopReason::Similar;
            records.push(record);
            break;
        }

        if let Some(missing) = &record.diagnosis.missing_concepts {
            let after = perceive(&new_path, concepts, graph, sim)?;
            record.completeness_improved =
                Some(weakest(&after, missing) >= weakest(&record.coverage, missing));
        }
        record.new_path = Some(new_path.clone());
        current = new_path;
        if iteration == p.n_max {
            record.stop = Some(StopReason::NMax);
        }
        records.push(record);
    }

    let trace = IterationTrace {
        seed: seed.entity,
        records,
        stop_reason,
        initial_path: initial,
        final_path: current.clone(),
    };
    Ok((current, trace))
}
