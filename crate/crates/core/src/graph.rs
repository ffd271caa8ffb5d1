//! In-memory knowledge graph built from tab-separated triple files.
//!
//! Entities are interned by normalized label (trimmed, lowercased) and keep
//! the surface form they were first seen with. Every triple is indexed under
//! both endpoints so exploration can follow edges in either direction.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense handle for an interned entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Which way a triple is traversed relative to the entity we stand on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Outgoing,
    Incoming,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: String,
    pub tail: EntityId,
}

impl Triple {
    /// Endpoint reached when leaving `from` along this triple.
    pub fn other(&self, direction: Direction) -> EntityId {
        match direction {
            Direction::Outgoing => self.tail,
            Direction::Incoming => self.head,
        }
    }
}

/// Counters reported by [`load_triples`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub lines: usize,
    pub duplicates: usize,
    pub self_loops_skipped: usize,
}

/// Normalization used for label identity: trim plus lowercase.
pub fn normalize_label(label: &str) -> String {
    label.trim().to_lowercase()
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    labels: Vec<String>,
    by_label: HashMap<String, EntityId>,
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
    adjacency: Vec<Vec<(usize, Direction)>>,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.triples == other.triples
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entity_count(&self) -> usize {
        self.labels.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Interns `label`, returning the existing id when the normalized form is known.
    pub fn intern(&mut self, label: &str) -> Result<EntityId> {
        let key = normalize_label(label);
        if key.is_empty() {
            return Err(Error::Config("entity label must be non-empty".into()));
        }
        if let Some(&id) = self.by_label.get(&key) {
            return Ok(id);
        }
        let id = EntityId(self.labels.len() as u32);
        self.labels.push(label.trim().to_string());
        self.by_label.insert(key, id);
        self.adjacency.push(Vec::new());
        Ok(id)
    }

    /// Adds a triple between labels. Returns `Ok(false)` if it was a duplicate
    /// or a self loop (head and tail normalize to the same entity).
    pub fn insert(&mut self, head: &str, relation: &str, tail: &str) -> Result<bool> {
        let relation = relation.trim();
        if relation.is_empty() {
            return Err(Error::Config("relation must be non-empty".into()));
        }
        if normalize_label(head) == normalize_label(tail) {
            return Ok(false);
        }
        let head = self.intern(head)?;
        let tail = self.intern(tail)?;
        let triple = Triple {
            head,
            relation: relation.to_string(),
            tail,
        };
        if !self.seen.insert(triple.clone()) {
            return Ok(false);
        }
        let idx = self.triples.len();
        self.adjacency[head.index()].push((idx, Direction::Outgoing));
        self.adjacency[tail.index()].push((idx, Direction::Incoming));
        self.triples.push(triple);
        Ok(true)
    }

    pub fn label(&self, id: EntityId) -> &str {
        &self.labels[id.index()]
    }

    pub fn contains(&self, id: EntityId) -> bool {
        id.index() < self.labels.len()
    }

    pub fn entity_by_label(&self, label: &str) -> Option<EntityId> {
        self.by_label.get(&normalize_label(label)).copied()
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> + '_ {
        (0..self.labels.len() as u32).map(EntityId)
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Looks up a stored triple by its exact endpoints and relation.
    pub fn has_triple(&self, head: EntityId, relation: &str, tail: EntityId) -> bool {
        self.seen.contains(&Triple {
            head,
            relation: relation.to_string(),
            tail,
        })
    }

    /// Triples incident to `entity` in insertion order, with the direction
    /// they are traversed when leaving `entity`.
    pub fn neighbors(&self, entity: EntityId) -> Result<Vec<(&Triple, Direction)>> {
        let list = self
            .adjacency
            .get(entity.index())
            .ok_or_else(|| Error::UnknownEntity(entity.to_string()))?;
        Ok(list
            .iter()
            .map(|&(idx, dir)| (&self.triples[idx], dir))
            .collect())
    }

    pub fn degree(&self, entity: EntityId) -> usize {
        self.adjacency.get(entity.index()).map_or(0, Vec::len)
    }

    /// Distinct relation strings, in first-appearance order.
    pub fn relations(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.triples
            .iter()
            .map(|t| t.relation.as_str())
            .filter(|r| seen.insert(*r))
            .collect()
    }

    /// Serializes back to the triple-file format, one line per triple.
    pub fn to_triple_text(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(self.label(t.head));
            out.push('\t');
            out.push_str(&t.relation);
            out.push('\t');
            out.push_str(self.label(t.tail));
            out.push('\n');
        }
        out
    }
}

/// Parses the tab-separated triple format.
///
/// Blank lines and `#` comments are ignored. A line whose head and tail are
/// the same entity is skipped and counted in the report.
pub fn load_triples(source: &str) -> Result<(KnowledgeGraph, LoadReport)> {
    let mut graph = KnowledgeGraph::new();
    let mut report = LoadReport::default();
    for (i, raw) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        if let Some(pos) = fields.iter().position(|f| f.trim().is_empty()) {
            return Err(Error::parse(line_no, format!("field {} is empty", pos + 1)));
        }
        report.lines += 1;
        if normalize_label(fields[0]) == normalize_label(fields[2]) {
            report.self_loops_skipped += 1;
            continue;
        }
        if !graph.insert(fields[0], fields[1], fields[2])? {
            report.duplicates += 1;
        }
    }
    if report.self_loops_skipped > 0 {
        tracing::warn!(
            skipped = report.self_loops_skipped,
            "skipped triples whose head equals tail"
        );
    }
    Ok((graph, report))
}


#[cfg(test)]
mod tests {
    use super::*;

    use super::tests_fixture::F1;

    #[test]
    fn empty_file() {
        let (g, _) = load_triples("").unwrap();
        assert_eq!(g.entity_count(), 0);
        assert_eq!(g.triple_count(), 0);
    }

    #[test]
    fn duplicate_lines_collapse() {
        let (g, report) = load_triples("A\tr1\tB\nA\tr1\tB").unwrap();
        assert_eq!(g.entity_count(), 2);
        assert_eq!(g.triple_count(), 1);
        assert_eq!(report.duplicates, 1);
    }

    #[test]
    fn fixture_counts() {
        let (g, _) = load_triples(F1).unwrap();
        assert_eq!(g.entity_count(), 6);
        assert_eq!(g.triple_count(), 6);
        let chest = g.entity_by_label("Chest pain").unwrap();
        assert_eq!(g.neighbors(chest).unwrap().len(), 2);
    }

    #[test]
    fn angina_neighbors_in_insertion_order() {
        let (g, _) = load_triples(F1).unwrap();
        let angina = g.entity_by_label("Angina").unwrap();
        let got: Vec<(String, String, String, Direction)> = g
            .neighbors(angina)
            .unwrap()
            .into_iter()
            .map(|(t, d)| {
                (
                    g.label(t.head).to_string(),
                    t.relation.clone(),
                    g.label(t.tail).to_string(),
                    d,
                )
            })
            .collect();
        assert_eq!(
            got,
            vec![
                ("Chest pain".into(), "suggests".into(), "Angina".into(), Direction::Incoming),
                (
                    "Angina".into(),
                    "caused_by".into(),
                    "Coronary Artery Disease".into(),
                    Direction::Outgoing
                ),
            ]
        );
    }

    #[test]
    fn isolated_entity_has_no_neighbors() {
        let mut g = KnowledgeGraph::new();
        let lone = g.intern("Lonely").unwrap();
        assert!(g.neighbors(lone).unwrap().is_empty());
    }

    #[test]
    fn self_loop_rejected_and_counted() {
        let (g, report) = load_triples("A\tr\tB\nB\tis\t b \n").unwrap();
        assert_eq!(report.self_loops_skipped, 1);
        let b = g.entity_by_label("B").unwrap();
        assert_eq!(g.neighbors(b).unwrap().len(), 1);
    }

    #[test]
    fn unknown_entity_lookup_fails() {
        let (g, _) = load_triples(F1).unwrap();
        assert!(matches!(
            g.neighbors(EntityId(99)),
            Err(Error::UnknownEntity(_))
        ));
    }

    #[test]
    fn label_lookup_normalizes() {
        let (g, _) = load_triples(F1).unwrap();
        assert!(g.entity_by_label("angina").is_some());
        assert!(g.entity_by_label(" Angina ").is_some());
        assert!(g.entity_by_label("unknown").is_none());
    }

    #[test]
    fn malformed_lines_report_line_number() {
        match load_triples("# header\nA\tr\tB\nA\tr\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match load_triples("A\t \tB\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let (g, _) = load_triples("# c\n\nA\tr\tB\n  \n").unwrap();
        assert_eq!(g.triple_count(), 1);
    }

    #[test]
    fn cjk_labels_kept_intact() {
        let (g, _) = load_triples("胸痛\t提示\t心绞痛\n").unwrap();
        assert_eq!(g.label(g.entity_by_label("胸痛").unwrap()), "胸痛");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_lines() -> impl Strategy<Value = Vec<(u8, u8, u8)>> {
            prop::collection::vec((0u8..8, 0u8..3, 0u8..8), 0..40)
        }

        fn render(lines: &[(u8, u8, u8)]) -> String {
            lines
                .iter()
                .map(|(h, r, t)| format!("E{h}\trel{r}\tE{t}\n"))
                .collect()
        }

        proptest! {
            #[test]
            fn adjacency_counts_each_triple_twice(lines in arb_lines()) {
                let (g, _) = load_triples(&render(&lines)).unwrap();
                let total: usize = g.entities().map(|e| g.degree(e)).sum();
                prop_assert_eq!(total, 2 * g.triple_count());
            }

            #[test]
            fn text_round_trip(lines in arb_lines()) {
                let (g, _) = load_triples(&render(&lines)).unwrap();
                let (again, _) = load_triples(&g.to_triple_text()).unwrap();
                let ids: HashSet<_> = g.triples().iter().map(|t| (g.label(t.head), t.relation.as_str(), g.label(t.tail))).collect();
                let ids2: HashSet<_> = again.triples().iter().map(|t| (again.label(t.head), t.relation.as_str(), again.label(t.tail))).collect();
                prop_assert_eq!(ids, ids2);
                prop_assert_eq!(&g, &again);
            }
        }
    }
}
