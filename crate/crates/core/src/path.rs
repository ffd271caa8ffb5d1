//! Weighted greedy path exploration.
//!
//! A path grows one incident triple at a time from its last entity,
//! picking the candidate with the highest adjusted weight. Ties go to
//! outgoing edges, then to the lower destination id, then to the triple
//! inserted first.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::embedding::Similarity;
use crate::error::{Error, Result};
use crate::graph::{Direction, EntityId, KnowledgeGraph, Triple};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub from: EntityId,
    pub relation: String,
    pub to: EntityId,
    pub direction: Direction,
    pub weight_used: f64,
}

impl PathStep {
    /// The stored `(head, relation, tail)` this step traverses.
    pub fn stored(&self) -> (EntityId, &str, EntityId) {
        match self.direction {
            Direction::Outgoing => (self.from, &self.relation, self.to),
            Direction::Incoming => (self.to, &self.relation, self.from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub seed: EntityId,
    pub steps: Vec<PathStep>,
}

impl Path {
    pub fn empty(seed: EntityId) -> Self {
        Self {
            seed,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> EntityId {
        self.steps.last().map_or(self.seed, |s| s.to)
    }

    /// Seed followed by every step destination, in path order.
    pub fn entities(&self) -> Vec<EntityId> {
        std::iter::once(self.seed)
            .chain(self.steps.iter().map(|s| s.to))
            .collect()
    }

    pub fn entity_set(&self) -> BTreeSet<EntityId> {
        self.entities().into_iter().collect()
    }

    pub fn contains(&self, e: EntityId) -> bool {
        self.seed == e || self.steps.iter().any(|s| s.to == e)
    }

    /// The path truncated right after it first reaches `entity`.
    pub fn prefix_through(&self, entity: EntityId) -> Option<Path> {
        if entity == self.seed {
            return Some(Path::empty(self.seed));
        }
        let pos = self.steps.iter().position(|s| s.to == entity)?;
        Some(Path {
            seed: self.seed,
            steps: self.steps[..=pos].to_vec(),
        })
    }

    /// Checks connectivity, no revisits, the hop bound, and that every step
    /// exists in `graph`.
    pub fn validate(&self, graph: &KnowledgeGraph, max_hops: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("invalid path: {m}")));
        if !graph.contains(self.seed) {
            return Err(Error::UnknownEntity(self.seed.to_string()));
        }
        if self.steps.len() > max_hops {
            return bad(format!("{} steps exceed max_hops {max_hops}", self.steps.len()));
        }
        let mut seen = HashSet::from([self.seed]);
        let mut at = self.seed;
        for (i, step) in self.steps.iter().enumerate() {
            if step.from != at {
                return bad(format!("step {i} starts at {} not {at}", step.from));
            }
            if !seen.insert(step.to) {
                return bad(format!("step {i} revisits {}", step.to));
            }
            let (h, r, t) = step.stored();
            if !graph.contains(step.to) || !graph.has_triple(h, r, t) {
                return bad(format!("step {i} is not a graph triple"));
            }
            at = step.to;
        }
        Ok(())
    }
}

/// Per-entity weight offsets and hard exclusions for re-exploration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightAdjustments {
    pub deltas: BTreeMap<EntityId, f64>,
    pub excluded: BTreeSet<EntityId>,
}

impl WeightAdjustments {
    pub fn delta(&self, e: EntityId) -> f64 {
        self.deltas.get(&e).copied().unwrap_or(0.0)
    }

    pub fn is_excluded(&self, e: EntityId) -> bool {
        self.excluded.contains(&e)
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty() && self.excluded.is_empty()
    }

    /// Folds later adjustments in: deltas overwrite, exclusions accumulate,
    /// and an excluded entity never keeps a positive delta.
    pub fn merge(&mut self, deltas: &BTreeMap<EntityId, f64>, excluded: &BTreeSet<EntityId>) {
        self.excluded.extend(excluded.iter().copied());
        for (&e, &d) in deltas {
            if d > 0.0 && self.excluded.contains(&e) {
                continue;
            }
            self.deltas.insert(e, d);
        }
        let excluded = &self.excluded;
        self.deltas.retain(|e, d| !(*d > 0.0 && excluded.contains(e)));
    }
}

/// How the unadjusted edge weight is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeWeighting {
    /// Similarity of the destination label to the question.
    #[default]
    Destination,
    /// Similarity of `"<relation> <destination>"` to the question.
    RelationAware,
}

pub fn edge_weight(
    candidate: (&Triple, Direction),
    question: &str,
    graph: &KnowledgeGraph,
    adjustments: &WeightAdjustments,
    sim: &dyn Similarity,
    weighting: EdgeWeighting,
) -> Result<f64> {
    let (triple, direction) = candidate;
    let dest = triple.other(direction);
    let base = match weighting {
        EdgeWeighting::Destination => sim.sim(graph.label(dest), question)?,
        EdgeWeighting::RelationAware => sim.sim(
            &format!("{} {}", triple.relation, graph.label(dest)),
            question,
        )?,
    };
    Ok(base + adjustments.delta(dest))
}

fn direction_rank(d: Direction) -> u8 {
    match d {
        Direction::Outgoing => 0,
        Direction::Incoming => 1,
    }
}

/// Settings shared by every exploration call in a cycle.
#[derive(Clone, Copy)]
pub struct Explorer<'a> {
    pub graph: &'a KnowledgeGraph,
    pub sim: &'a dyn Similarity,
    pub question: &'a str,
    pub max_hops: usize,
    pub weighting: EdgeWeighting,
}

impl<'a> Explorer<'a> {
    pub fn new(
        graph: &'a KnowledgeGraph,
        sim: &'a dyn Similarity,
        question: &'a str,
        max_hops: usize,
    ) -> Self {
        Self {
            graph,
            sim,
            question,
            max_hops,
            weighting: EdgeWeighting::default(),
        }
    }

    pub fn weighting(mut self, weighting: EdgeWeighting) -> Self {
        self.weighting = weighting;
        self
    }

    /// Greedy search from `seed`, or from the end of `prefix` when given.
    pub fn explore(
        &self,
        seed: EntityId,
        adjustments: &WeightAdjustments,
        prefix: Option<&Path>,
    ) -> Result<Path> {
        greedy_explore(
            seed,
            self.question,
            self.graph,
            adjustments,
            prefix,
            self.max_hops,
            self.sim,
            self.weighting,
        )
    }
}

#[allow(clippy::too_many_arguments)]
pub fn greedy_explore(
    seed: EntityId,
    question: &str,
    graph: &KnowledgeGraph,
    adjustments: &WeightAdjustments,
    prefix: Option<&Path>,
    max_hops: usize,
    sim: &dyn Similarity,
    weighting: EdgeWeighting,
) -> Result<Path> {
    if !graph.contains(seed) {
        return Err(Error::UnknownEntity(seed.to_string()));
    }
    let mut path = match prefix {
        Some(p) if !p.is_empty() => {
            if p.seed != seed {
                return Err(Error::Config(format!(
                    "prefix starts at {} but seed is {seed}",
                    p.seed
                )));
            }
            p.validate(graph, max_hops)?;
            p.clone()
        }
        _ => {
            if adjustments.is_excluded(seed) {
                return Err(Error::ExcludedSeed(graph.label(seed).to_string()));
            }
            Path::empty(seed)
        }
    };
    let mut visited: HashSet<EntityId> = path.entities().into_iter().collect();

    while path.len() < max_hops {
        let at = path.last();
        let mut best: Option<(f64, u8, EntityId, &Triple, Direction)> = None;
        for (triple, dir) in graph.neighbors(at)? {
            let dest = triple.other(dir);
            if visited.contains(&dest) || adjustments.is_excluded(dest) {
                continue;
            }
            let w = edge_weight((triple, dir), question, graph, adjustments, sim, weighting)?;
            let rank = direction_rank(dir);
            let better = match best {
                None => true,
                Some((bw, br, bd, _, _)) => {
                    w > bw || (w == bw && (rank < br || (rank == br && dest < bd)))
                }
            };
            if better {
                best = Some((w, rank, dest, triple, dir));
            }
        }
        let Some((w, _, dest, triple, dir)) = best else {
            break;
        };
        path.steps.push(PathStep {
            from: at,
            relation: triple.relation.clone(),
            to: dest,
            direction: dir,
            weight_used: w,
        });
        visited.insert(dest);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{HashProvider, SimilarityCache, TableSimilarity};
    use crate::graph::load_triples;

    const Q: &str = "question";

    fn fixture() -> (KnowledgeGraph, TableSimilarity) {
        let (g, _) = load_triples("A\tr1\tB\nA\tr2\tC\nB\tr3\tD\n").unwrap();
        let t = TableSimilarity::new()
            .with("A", Q, 0.2)
            .with("B", Q, 0.9)
            .with("C", Q, 0.5)
            .with("D", Q, 0.7);
        (g, t)
    }

    fn labels(g: &KnowledgeGraph, p: &Path) -> Vec<String> {
        p.entities().iter().map(|e| g.label(*e).to_string()).collect()
    }

    #[test]
    fn edge_weight_is_additive() {
        let (g, _) = load_triples("A\tr\tB\n").unwrap();
        let t = TableSimilarity::new().with("B", Q, 0.6).with("A", Q, 0.1);
        let b = g.entity_by_label("B").unwrap();
        let a = g.entity_by_label("A").unwrap();
        let tr = &g.triples()[0];
        let mut adj = WeightAdjustments::default();
        let w = |adj: &WeightAdjustments, d| {
            edge_weight((tr, d), Q, &g, adj, &t, EdgeWeighting::Destination).unwrap()
        };
        assert_eq!(w(&adj, Direction::Outgoing), 0.6);
        adj.deltas.insert(b, 0.2);
        assert!((w(&adj, Direction::Outgoing) - 0.8).abs() < 1e-12);
        adj.deltas.insert(a, -0.2);
        assert!((w(&adj, Direction::Incoming) - -0.1).abs() < 1e-12);
    }

    #[test]
    fn isolated_seed_gives_empty_path() {
        let mut g = KnowledgeGraph::new();
        let s = g.intern("alone").unwrap();
        let t = TableSimilarity::new();
        let p = greedy_explore(s, Q, &g, &Default::default(), None, 4, &t, Default::default())
            .unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn follows_stepwise_argmax() {
        let (g, t) = fixture();
        let a = g.entity_by_label("A").unwrap();
        let p = Explorer::new(&g, &t, Q, 2)
            .explore(a, &Default::default(), None)
            .unwrap();
        assert_eq!(labels(&g, &p), ["A", "B", "D"]);
    }

    #[test]
    fn positive_delta_redirects_first_step() {
        let (g, t) = fixture();
        let a = g.entity_by_label("A").unwrap();
        let c = g.entity_by_label("C").unwrap();
        let mut adj = WeightAdjustments::default();
        adj.deltas.insert(c, 0.5);
        let p = Explorer::new(&g, &t, Q, 2).explore(a, &adj, None).unwrap();
        assert_eq!(p.steps[0].to, c);
        assert_eq!(p.steps[0].weight_used, 1.0);
    }

    #[test]
    fn follows_incoming_edges() {
        let (g, t) = fixture();
        let d = g.entity_by_label("D").unwrap();
        let p = Explorer::new(&g, &t, Q, 4)
            .explore(d, &Default::default(), None)
            .unwrap();
        assert_eq!(labels(&g, &p), ["D", "B", "A", "C"]);
        assert_eq!(p.steps[0].direction, Direction::Incoming);
        p.validate(&g, 4).unwrap();
    }

    #[test]
    fn exclusions_and_errors() {
        let (g, t) = fixture();
        let a = g.entity_by_label("A").unwrap();
        let b = g.entity_by_label("B").unwrap();
        let mut adj = WeightAdjustments::default();
        adj.excluded.insert(b);
        let p = Explorer::new(&g, &t, Q, 3).explore(a, &adj, None).unwrap();
        assert_eq!(labels(&g, &p), ["A", "C"]);
        assert!(matches!(
            Explorer::new(&g, &t, Q, 3).explore(b, &adj, None),
            Err(Error::ExcludedSeed(_))
        ));
        assert!(matches!(
            Explorer::new(&g, &t, Q, 3).explore(EntityId(42), &adj, None),
            Err(Error::UnknownEntity(_))
        ));
    }

    #[test]
    fn ties_prefer_outgoing_then_lower_id() {
        // X has outgoing to W (id 1) and Z (id 3) and incoming from Y (id 2), equal weights
        let (g, _) = load_triples("X\tp\tW\nY\tq\tX\nX\tr\tZ\n").unwrap();
        let t = TableSimilarity::new().with_default(0.5);
        let x = g.entity_by_label("X").unwrap();
        let p = Explorer::new(&g, &t, Q, 1)
            .explore(x, &Default::default(), None)
            .unwrap();
        // W and Z are both outgoing; W has the lower id
        assert_eq!(g.label(p.steps[0].to), "W");
        let mut adj = WeightAdjustments::default();
        adj.excluded.insert(g.entity_by_label("W").unwrap());
        let p = Explorer::new(&g, &t, Q, 1).explore(x, &adj, None).unwrap();
        assert_eq!(g.label(p.steps[0].to), "Z");
    }

    #[test]
    fn prefix_is_kept_verbatim() {
        let (g, t) = fixture();
        let a = g.entity_by_label("A").unwrap();
        let b = g.entity_by_label("B").unwrap();
        let full = Explorer::new(&g, &t, Q, 3)
            .explore(a, &Default::default(), None)
            .unwrap();
        let prefix = full.prefix_through(b).unwrap();
        assert_eq!(prefix.len(), 1);
        let mut adj = WeightAdjustments::default();
        adj.deltas.insert(g.entity_by_label("C").unwrap(), 0.9);
        let again = Explorer::new(&g, &t, Q, 3)
            .explore(a, &adj, Some(&prefix))
            .unwrap();
        assert_eq!(again.steps[..1], prefix.steps[..]);
    }

    #[test]
    fn merge_never_boosts_excluded() {
        let mut adj = WeightAdjustments::default();
        adj.merge(
            &BTreeMap::from([(EntityId(1), -0.2)]),
            &BTreeSet::from([EntityId(1)]),
        );
        adj.merge(&BTreeMap::from([(EntityId(1), 0.2), (EntityId(2), 0.2)]), &BTreeSet::new());
        assert_eq!(adj.delta(EntityId(1)), -0.2);
        assert_eq!(adj.delta(EntityId(2)), 0.2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph() -> impl Strategy<Value = String> {
            prop::collection::vec((0u8..10, 0u8..3, 0u8..10), 1..30).prop_map(|v| {
                v.iter()
                    .map(|(h, r, t)| format!("node {h}\tlinks{r}\tnode {t}\n"))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn output_is_a_valid_path(text in arb_graph(), hops in 1usize..6, seed in 0u32..10) {
                let (g, _) = load_triples(&text).unwrap();
                prop_assume!(!g.is_empty());
                let seed = EntityId(seed % g.entity_count() as u32);
                let sim = SimilarityCache::new(HashProvider::default());
                let p = Explorer::new(&g, &sim, "which node links", hops)
                    .explore(seed, &Default::default(), None)
                    .unwrap();
                prop_assert!(p.validate(&g, hops).is_ok());
            }

            #[test]
            fn zero_deltas_match_no_adjustments(text in arb_graph(), seed in 0u32..10) {
                let (g, _) = load_triples(&text).unwrap();
                prop_assume!(!g.is_empty());
                let seed = EntityId(seed % g.entity_count() as u32);
                let sim = SimilarityCache::new(HashProvider::default());
                let ex = Explorer::new(&g, &sim, "node links", 4);
                let mut zeros = WeightAdjustments::default();
                for e in g.entities() {
                    zeros.deltas.insert(e, 0.0);
                }
                prop_assert_eq!(
                    ex.explore(seed, &zeros, None).unwrap(),
                    ex.explore(seed, &Default::default(), None).unwrap()
                );
            }
        }
    }
}
