#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::PathBuf;

use metakg::config::RunConfig;
use metakg::cycle::StopReason;
use metakg::pipeline::describe_path;
use metakg::{KnowledgeGraph, Pipeline, QueryTrace};

pub fn fixture(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(path)
}

pub fn read_fixture(path: &str) -> String {
    std::fs::read_to_string(fixture(path)).unwrap()
}

fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::NoIssues => "no_issues",
        StopReason::Similar => "similar",
        StopReason::NMax => "n_max",
        StopReason::Disabled => "disabled",
    }
}

fn joined(items: Option<Vec<String>>) -> String {
    match items {
        Some(v) if !v.is_empty() => v.join(" | "),
        _ => "-".into(),
    }
}

/// Compact, line-oriented rendering of a query trace for golden files.
pub fn digest(g: &KnowledgeGraph, t: &QueryTrace) -> String {
    let mut s = String::new();
    writeln!(s, "concepts: {}", t.concepts.concepts.join(" | ")).unwrap();
    for seed in &t.seeds {
        writeln!(s, "seed: {} ({}, {:.4})", seed.seed.label, seed.seed.concept, seed.seed.score).unwrap();
        let Some(trace) = &seed.trace else {
            writeln!(s, "error: {}", seed.error.as_deref().unwrap_or("?")).unwrap();
            continue;
        };
        for r in &trace.records {
            writeln!(s, "iteration {}", r.iteration).unwrap();
            writeln!(s, "  path: {}", describe_path(g, &r.path)).unwrap();
            let cov: Vec<String> = r.coverage.iter().map(|(c, v)| format!("{c}={v:.4}")).collect();
            writeln!(s, "  coverage: {}", cov.join(" ")).unwrap();
            writeln!(s, "  missing: {}", joined(r.diagnosis.missing_concepts.clone())).unwrap();
            let flagged = r
                .diagnosis
                .misleading_entities
                .as_ref()
                .map(|v| v.iter().map(|m| format!("{}={:.4}", m.label, m.support)).collect());
            writeln!(s, "  misleading: {}", joined(flagged)).unwrap();
            if let Some(plan) = &r.plan {
                writeln!(s, "  restart: {}", g.label(plan.restart)).unwrap();
                let deltas: Vec<String> = plan
                    .deltas
                    .iter()
                    .map(|(e, d)| format!("{}={d:+.4}", g.label(*e)))
                    .collect();
                writeln!(s, "  deltas: {}", if deltas.is_empty() { "-".into() } else { deltas.join(" ") }).unwrap();
                let ex: Vec<String> = plan.excluded.iter().map(|e| g.label(*e).to_string()).collect();
                writeln!(s, "  excluded: {}", joined(Some(ex))).unwrap();
            }
            if let Some(p) = &r.new_path {
                writeln!(s, "  new path: {}", describe_path(g, p)).unwrap();
            }
            if let Some(v) = r.path_similarity {
                writeln!(s, "  path similarity: {v:.4}").unwrap();
            }
            if let Some(b) = r.completeness_improved {
                writeln!(s, "  completeness improved: {}", if b { "yes" } else { "no" }).unwrap();
            }
            if let Some(stop) = r.stop {
                writeln!(s, "  stop: {}", stop_name(stop)).unwrap();
            }
        }
        writeln!(s, "stop: {}", stop_name(trace.stop_reason)).unwrap();
    }
    writeln!(s, "evidence:").unwrap();
    for line in t.evidence_text.lines() {
        writeln!(s, "{line}").unwrap();
    }
    writeln!(s, "chosen: {}", t.chosen_option.map(String::from).unwrap_or("-".into())).unwrap();
    s
}

pub struct Loaded {
    pub config: RunConfig,
    pub graph: KnowledgeGraph,
    pub sim: Box<dyn metakg::Similarity>,
    pub llm: Box<dyn metakg::LlmProvider>,
}

pub fn load(dir: &str) -> Loaded {
    let config = RunConfig::load(&fixture(&format!("{dir}/run.conf"))).unwrap();
    Loaded {
        graph: config.load_graph().unwrap(),
        sim: config.similarity().unwrap(),
        llm: config.llm().unwrap(),
        config,
    }
}

impl Loaded {
    pub fn answer(&self, question: &str, options: &[(char, String)], tweak: impl FnOnce(&mut metakg::CycleConfig)) -> QueryTrace {
        let mut cc = self.config.cycle_config();
        tweak(&mut cc);
        let p = Pipeline::new(&self.graph, self.sim.as_ref(), self.llm.as_ref(), cc).unwrap();
        p.answer(question, options).unwrap()
    }
}
