//! Batch evaluation: outcome scoring, aggregate accuracy, and the path
//! refinement rate (mean `1 - Jaccard(initial, final)` over seeds).

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builder::QARecord;
use crate::cycle::{path_similarity, IterationTrace, StopReason};
use crate::error::{Error, Result};
use crate::pipeline::{Pipeline, QueryTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Correct,
    Wrong,
    Fail,
}

pub fn score(chosen: Option<char>, gold: char) -> Outcome {
    match chosen {
        None => Outcome::Fail,
        Some(c) if c.eq_ignore_ascii_case(&gold) => Outcome::Correct,
        Some(_) => Outcome::Wrong,
    }
}

/// Path refinement rate over per-seed traces; 0 for no traces.
pub fn compute_prr<'a>(traces: impl IntoIterator<Item = &'a IterationTrace>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for t in traces {
        sum += 1.0 - path_similarity(&t.initial_path, &t.final_path);
        n += 1;
    }
    if n == 0 {
        tracing::warn!("no seed traces; path refinement rate reported as 0");
        return 0.0;
    }
    sum / n as f64
}

/// What the refinement rate needs from one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: String,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub path_similarity: f64,
}

impl SeedSummary {
    pub fn from_trace(label: &str, t: &IterationTrace) -> Self {
        Self {
            seed: label.to_string(),
            iterations: t.records.len(),
            stop_reason: t.stop_reason,
            path_similarity: path_similarity(&t.initial_path, &t.final_path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub id: String,
    pub chosen: Option<char>,
    pub gold: char,
    pub outcome: Outcome,
    pub seeds: Vec<SeedSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub total: usize,
    pub correct: usize,
    pub wrong: usize,
    pub fail: usize,
    pub correct_pct: f64,
    pub wrong_pct: f64,
    pub fail_pct: f64,
    pub seeds: usize,
    pub prr: f64,
}

impl Aggregates {
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = Outcome>, seed_similarities: &[f64]) -> Self {
        let mut a = Aggregates::default();
        for o in outcomes {
            a.total += 1;
            match o {
                Outcome::Correct => a.correct += 1,
                Outcome::Wrong => a.wrong += 1,
                Outcome::Fail => a.fail += 1,
            }
        }
        if a.total > 0 {
            let pct = |k: usize| 100.0 * k as f64 / a.total as f64;
            a.correct_pct = pct(a.correct);
            a.wrong_pct = pct(a.wrong);
            a.fail_pct = pct(a.fail);
        }
        a.seeds = seed_similarities.len();
        if !seed_similarities.is_empty() {
            a.prr = seed_similarities.iter().map(|s| 1.0 - s).sum::<f64>() / a.seeds as f64;
        }
        a
    }

    pub fn accuracy(&self) -> f64 {
        self.correct_pct / 100.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub questions: Vec<QuestionResult>,
    pub aggregates: Aggregates,
}

impl BatchReport {
    pub fn from_results(questions: Vec<QuestionResult>) -> Self {
        let sims: Vec<f64> = questions
            .iter()
            .flat_map(|q| q.seeds.iter().map(|s| s.path_similarity))
            .collect();
        let aggregates = Aggregates::from_outcomes(questions.iter().map(|q| q.outcome), &sims);
        Self { questions, aggregates }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// One row per question.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "chosen", "gold", "outcome", "seeds", "prr"])?;
        for q in &self.questions {
            let prr = if q.seeds.is_empty() {
                0.0
            } else {
                q.seeds.iter().map(|s| 1.0 - s.path_similarity).sum::<f64>() / q.seeds.len() as f64
            };
            w.write_record([
                q.id.clone(),
                q.chosen.map(String::from).unwrap_or_default(),
                q.gold.to_string(),
                format!("{:?}", q.outcome),
                q.seeds.len().to_string(),
                format!("{prr:.6}"),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Per-question trace document written by `query` and `batch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<char>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<QueryTrace>,
}

fn trace_file_name(id: &str) -> String {
    let safe: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{safe}.json")
}

pub fn write_trace(dir: &Path, record: &TraceRecord) -> Result<()> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(record)? + "\n";
    fs::write(dir.join(trace_file_name(&record.id)), text)?;
    Ok(())
}

fn summaries(trace: &QueryTrace) -> Vec<SeedSummary> {
    trace
        .seeds
        .iter()
        .filter_map(|s| s.trace.as_ref().map(|t| SeedSummary::from_trace(&s.seed.label, t)))
        .collect()
}

/// Runs the pipeline over every record. Provider failures score as Fail
/// and the batch continues. Traces are written to `trace_dir` if given.
pub fn run_batch(
    records: &[QARecord],
    pipeline: &Pipeline<'_>,
    parallelism: usize,
    trace_dir: Option<&Path>,
) -> Result<BatchReport> {
    let golds = records
        .iter()
        .map(|r| {
            r.gold_letter()
                .ok_or_else(|| Error::Config(format!("record {:?} has no gold option letter", r.id)))
        })
        .collect::<Result<Vec<char>>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let runs: Vec<Result<QueryTrace>> = pool.install(|| {
        records
            .par_iter()
            .map(|r| pipeline.answer(&r.question, &r.option_list()))
            .collect()
    });

    let mut questions = Vec::with_capacity(records.len());
    for ((rec, gold), run) in records.iter().zip(golds).zip(runs) {
        let (result, trace) = match run {
            Ok(trace) => {
                let outcome = score(trace.chosen_option, gold);
                let q = QuestionResult {
                    id: rec.id.clone(),
                    chosen: trace.chosen_option,
                    gold,
                    outcome,
                    seeds: summaries(&trace),
                    error: None,
                };
                (q, Some(trace))
            }
            Err(e) => {
                tracing::warn!(record = %rec.id, error = %e, "question failed");
                let q = QuestionResult {
                    id: rec.id.clone(),
                    chosen: None,
                    gold,
                    outcome: Outcome::Fail,
                    seeds: Vec::new(),
                    error: Some(e.to_string()),
                };
                (q, None)
            }
        };
        if let Some(dir) = trace_dir {
            write_trace(
                dir,
                &TraceRecord {
                    id: rec.id.clone(),
                    gold: Some(gold),
                    outcome: Some(result.outcome),
                    error: result.error.clone(),
                    trace,
                },
            )?;
        }
        questions.push(result);
    }
    Ok(BatchReport::from_results(questions))
}

/// Recomputes accuracy and refinement rate from a directory of trace
/// files. Accuracy counts only records that carry a gold letter.
pub fn metrics_from_traces(dir: &Path) -> Result<Aggregates> {
    let mut files: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut outcomes = Vec::new();
    let mut sims = Vec::new();
    for f in files {
        let rec: TraceRecord = serde_json::from_str(&fs::read_to_string(&f)?)
            .map_err(|e| Error::Config(format!("{}: {e}", f.display())))?;
        let chosen = rec.trace.as_ref().and_then(|t| t.chosen_option);
        if let Some(gold) = rec.gold {
            outcomes.push(if rec.error.is_some() {
                Outcome::Fail
            } else {
                score(chosen, gold)
            });
        }
        if let Some(t) = &rec.trace {
            sims.extend(summaries(t).iter().map(|s| s.path_similarity));
        }
    }
    Ok(Aggregates::from_outcomes(outcomes, &sims))
}
