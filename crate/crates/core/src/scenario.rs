//! A synthetic 20-question batch for comparing ablation settings.
//!
//! Every question owns a disjoint subgraph and its own similarity rows, so
//! questions cannot interfere. Four kinds are mixed:
//!
//! * `Easy`: the initial greedy path already holds the answer.
//! * `Completeness`: the initial path misses a concept. Restarting from the
//!   mid-path entity most related to it reaches the answer; restarting from
//!   the seed gets pulled into a boosted lure branch and stalls.
//! * `Relevance`: the initial path runs through an entity related to no
//!   concept. Flagging and excluding it steers the search to the answer.
//! * `Hard`: the scripted model answers wrongly (or not at all) whatever
//!   the evidence.
//!
//! The scripted model answers correctly exactly when the rendered evidence
//! contains the question's answer-bearing triple.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::builder::{parse_dataset, QARecord};
use crate::embedding::TableSimilarity;
use crate::error::Result;
use crate::graph::{load_triples, KnowledgeGraph};
use crate::llm::ScriptedProvider;
use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Easy,
    Completeness,
    Relevance,
    Hard,
}

const CONCEPT_MARKER: &str = "List the key concepts, one concept per line";
const LETTERS: [char; 4] = ['A', 'B', 'C', 'D'];

struct Blueprint {
    edges: &'static [(&'static str, &'static str)],
    /// (entity, similarity to the question)
    question: &'static [(&'static str, f64)],
    /// (entity, primary concept, secondary concept)
    concepts: &'static [(&'static str, f64, f64)],
    answer: (&'static str, &'static str),
}

fn blueprint(kind: Kind) -> Blueprint {
    match kind {
        Kind::Easy | Kind::Hard => Blueprint {
            edges: &[("seed", "a"), ("a", "b")],
            question: &[("seed", 0.7), ("a", 0.6), ("b", 0.5)],
            concepts: &[("seed", 0.95, 0.0), ("a", 0.0, 0.8), ("b", 0.0, 0.5)],
            answer: ("seed", "a"),
        },
        Kind::Completeness => Blueprint {
            edges: &[
                ("seed", "mid"),
                ("seed", "lure"),
                ("mid", "dead"),
                ("mid", "gold"),
                ("lure", "tail"),
            ],
            question: &[
                ("seed", 0.8),
                ("mid", 0.7),
                ("lure", 0.55),
                ("dead", 0.6),
                ("gold", 0.45),
                ("tail", 0.35),
            ],
            concepts: &[
                ("seed", 0.95, 0.0),
                ("mid", 0.4, 0.3),
                ("dead", 0.4, 0.0),
                ("tail", 0.4, 0.0),
                ("lure", 0.0, 0.5),
                ("gold", 0.0, 0.8),
            ],
            answer: ("mid", "gold"),
        },
        Kind::Relevance => Blueprint {
            edges: &[("seed", "lure"), ("seed", "gold"), ("lure", "lure2"), ("gold", "far")],
            question: &[
                ("seed", 0.8),
                ("lure", 0.6),
                ("gold", 0.5),
                ("lure2", 0.3),
                ("far", 0.4),
            ],
            concepts: &[("seed", 0.95, 0.7), ("gold", 0.0, 0.5), ("far", 0.4, 0.0)],
            answer: ("seed", "gold"),
        },
    }
}

/// Text artifacts for one generated batch.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub kinds: Vec<Kind>,
    pub graph_text: String,
    pub similarity_text: String,
    pub script_json: String,
    pub dataset_jsonl: String,
}

impl Scenario {
    /// 5 completeness, 5 relevance, 8 easy and 2 hard questions, interleaved.
    pub fn ablation() -> Self {
        use Kind::*;
        let kinds = vec![
            Completeness, Relevance, Easy, Easy, Completeness, Relevance, Easy, Hard, Completeness,
            Relevance, Easy, Easy, Completeness, Relevance, Easy, Hard, Completeness, Relevance,
            Easy, Easy,
        ];
        Self::generate(&kinds)
    }

    pub fn generate(kinds: &[Kind]) -> Self {
        let mut graph_text = String::new();
        let mut similarity_text = String::from("#default 0\n");
        let mut concept_entries = Vec::new();
        let mut answer_entries = Vec::new();
        let mut dataset = String::new();
        let mut hard_seen = 0;

        for (i, &kind) in kinds.iter().enumerate() {
            let prefix = match kind {
                Kind::Easy => "e",
                Kind::Completeness => "c",
                Kind::Relevance => "r",
                Kind::Hard => "h",
            };
            let id = format!("{prefix}{:02}", i + 1);
            let label = |name: &str| format!("{id} {name}");
            let question = format!("[{id}] Which option does the {id} evidence support?");
            let primary = format!("{id} primary concept");
            let secondary = format!("{id} secondary concept");
            let bp = blueprint(kind);

            for (h, t) in bp.edges {
                graph_text.push_str(&format!("{}\tlinks\t{}\n", label(h), label(t)));
            }
            for (e, v) in bp.question {
                similarity_text.push_str(&format!("{}\t{question}\t{v}\n", label(e)));
            }
            for (e, c1, c2) in bp.concepts {
                for (concept, v) in [(&primary, c1), (&secondary, c2)] {
                    if *v != 0.0 {
                        similarity_text.push_str(&format!("{}\t{concept}\t{v}\n", label(e)));
                    }
                }
            }

            let gold = LETTERS[i % 4];
            let wrong = LETTERS[(i + 1) % 4];
            let tag = format!("[{id}]");
            concept_entries.push(json!({
                "when": [CONCEPT_MARKER, tag],
                "reply": format!("{primary}\n{secondary}"),
            }));
            let answer_line = format!("{} links {}", label(bp.answer.0), label(bp.answer.1));
            match kind {
                Kind::Hard => {
                    hard_seen += 1;
                    let reply = if hard_seen % 2 == 1 {
                        format!("{wrong}. The evidence points elsewhere.")
                    } else {
                        "The evidence is inconclusive.".to_string()
                    };
                    answer_entries.push(json!({"when": tag, "reply": reply}));
                }
                _ => {
                    answer_entries.push(json!({
                        "when": [tag.clone(), answer_line],
                        "reply": format!("{gold}. The evidence chain supports this option."),
                    }));
                    answer_entries.push(json!({
                        "when": tag,
                        "reply": format!("{wrong}. This seems most plausible."),
                    }));
                }
            }

            let options: serde_json::Map<String, serde_json::Value> = LETTERS
                .iter()
                .map(|l| (l.to_string(), json!(format!("{id} option {l}"))))
                .collect();
            dataset.push_str(
                &json!({"id": id, "question": question, "options": options, "answer": gold.to_string()})
                    .to_string(),
            );
            dataset.push('\n');
        }

        concept_entries.extend(answer_entries);
        Self {
            kinds: kinds.to_vec(),
            graph_text,
            similarity_text,
            script_json: serde_json::to_string_pretty(&concept_entries).expect("script serializes") + "\n",
            dataset_jsonl: dataset,
        }
    }

    /// Only a concept's own seed clears this entity threshold.
    pub fn params() -> Params {
        Params {
            tau_entity: 0.9,
            ..Params::default()
        }
    }

    pub fn graph(&self) -> Result<KnowledgeGraph> {
        Ok(load_triples(&self.graph_text)?.0)
    }

    pub fn similarity(&self) -> Result<TableSimilarity> {
        TableSimilarity::parse(&self.similarity_text)
    }

    pub fn llm(&self) -> Result<ScriptedProvider> {
        ScriptedProvider::from_json(&self.script_json)
    }

    pub fn records(&self) -> Result<Vec<QARecord>> {
        parse_dataset(&self.dataset_jsonl)
    }

    /// Writes the artifacts plus a run config into `dir` and returns the
    /// config path.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("graph.tsv"), &self.graph_text)?;
        fs::write(dir.join("sims.tsv"), &self.similarity_text)?;
        fs::write(dir.join("script.json"), &self.script_json)?;
        fs::write(dir.join("dataset.jsonl"), &self.dataset_jsonl)?;
        let config = "\
graph = graph.tsv
dataset = dataset.jsonl
embedding.provider = table
embedding.table = sims.tsv
llm.provider = scripted
llm.script = script.json
params.tau_entity = 0.9
";
        let path = dir.join("run.conf");
        fs::write(&path, config)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_and_parse() {
        let s = Scenario::ablation();
        let count = |k| s.kinds.iter().filter(|x| **x == k).count();
        assert_eq!(
            (count(Kind::Completeness), count(Kind::Relevance), count(Kind::Easy), count(Kind::Hard)),
            (5, 5, 8, 2)
        );
        assert_eq!(s.records().unwrap().len(), 20);
        assert_eq!(s.graph().unwrap().triple_count(), 5 * 5 + 5 * 4 + 10 * 2);
        s.similarity().unwrap();
        s.llm().unwrap();
    }

    fn accuracy(ablations: crate::cycle::Ablations) -> (usize, f64) {
        use crate::cycle::CycleConfig;
        use crate::pipeline::Pipeline;
        let s = Scenario::ablation();
        let (g, sim, llm) = (s.graph().unwrap(), s.similarity().unwrap(), s.llm().unwrap());
        let config = CycleConfig {
            ablations,
            ..CycleConfig::with_params(Scenario::params())
        };
        let p = Pipeline::new(&g, &sim, &llm, config).unwrap();
        let r = crate::eval::run_batch(&s.records().unwrap(), &p, 4, None).unwrap();
        (r.aggregates.correct, r.aggregates.prr)
    }

    #[test]
    fn ablations_rank_as_designed() {
        use crate::cycle::Ablations;
        let full = accuracy(Ablations::default());
        assert_eq!(full.0, 18);
        assert!((full.1 - 0.325).abs() < 1e-12, "{}", full.1);
        let a = |f: fn(&mut Ablations)| {
            let mut x = Ablations::default();
            f(&mut x);
            accuracy(x)
        };
        assert_eq!(a(|x| x.disable_completeness_check = true).0, 13);
        assert_eq!(a(|x| x.disable_relevance_check = true).0, 13);
        assert_eq!(a(|x| x.naive_restart = true).0, 13);
        assert_eq!(a(|x| x.disable_cycle = true), (8, 0.0));
    }
}
