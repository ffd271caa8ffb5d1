//! Knowledge-graph construction by LLM triple extraction over QA records.
//!
//! Records are read from JSON lines. Each record's extraction output uses
//! `subject\predicate\object` lines; accepted triples are written as a
//! tab-separated triple file that [`crate::graph::load_triples`] reads.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::question_with_options;
use crate::graph::normalize_label;
use crate::llm::{CompletionRequest, LlmProvider};
use crate::prompts::{self, PromptTemplate};

/// One dataset item. `options` maps letters to option text; `answer` is a
/// letter or the text of the correct option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QARecord {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept: Option<String>,
}

impl QARecord {
    pub fn option_list(&self) -> Vec<(char, String)> {
        let mut out: Vec<(char, String)> = self
            .options
            .iter()
            .flatten()
            .filter_map(|(k, v)| {
                let mut chars = k.trim().chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Some((c.to_ascii_uppercase(), v.clone())),
                    _ => None,
                }
            })
            .collect();
        out.sort();
        out
    }

    /// The gold answer as an option letter, resolving answer text against
    /// the options when needed.
    pub fn gold_letter(&self) -> Option<char> {
        let answer = self.answer.as_deref()?.trim();
        let mut chars = answer.chars();
        if let (Some(c), None) = (chars.next(), chars.clone().next()) {
            let c = c.to_ascii_uppercase();
            if c.is_ascii_uppercase() {
                return Some(c);
            }
        }
        let key = normalize_label(answer);
        self.option_list()
            .into_iter()
            .find(|(_, text)| normalize_label(text) == key)
            .map(|(l, _)| l)
    }

    fn answer_text(&self) -> String {
        let Some(answer) = self.answer.as_deref() else {
            return String::new();
        };
        match self.gold_letter() {
            Some(l) => match self.option_list().into_iter().find(|(k, _)| *k == l) {
                Some((_, text)) => format!("{l}. {text}"),
                None => answer.to_string(),
            },
            None => answer.to_string(),
        }
    }
}

/// Parses a JSON-lines dataset, checking ids are unique and questions
/// non-empty.
pub fn parse_dataset(source: &str) -> Result<Vec<QARecord>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in source.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: QARecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(i + 1, format!("bad record: {e}")))?;
        if rec.question.trim().is_empty() {
            return Err(Error::parse(i + 1, "question is empty"));
        }
        if !ids.insert(rec.id.clone()) {
            return Err(Error::parse(i + 1, format!("duplicate id {:?}", rec.id)));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Vec<QARecord>> {
    parse_dataset(&fs::read_to_string(path)?)
}

pub type LabelTriple = (String, String, String);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction {
    pub triples: Vec<LabelTriple>,
    pub warnings: Vec<String>,
}

/// Parses `subject\predicate\object` lines, dropping malformed ones.
pub fn parse_extraction(output: &str) -> Extraction {
    let mut ex = Extraction::default();
    let mut seen = HashSet::new();
    for raw in output.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\\').map(str::trim).collect();
        if fields.len() != 3 {
            ex.warnings
                .push(format!("expected 3 backslash-separated fields: {line:?}"));
            continue;
        }
        if fields.iter().any(|f| f.is_empty()) {
            ex.warnings.push(format!("empty field: {line:?}"));
            continue;
        }
        if fields.iter().any(|f| f.contains('\t')) {
            ex.warnings.push(format!("tab inside field: {line:?}"));
            continue;
        }
        if normalize_label(fields[0]) == normalize_label(fields[2]) {
            ex.warnings.push(format!("head equals tail: {line:?}"));
            continue;
        }
        let t = (fields[0].to_string(), fields[1].to_string(), fields[2].to_string());
        if seen.insert(t.clone()) {
            ex.triples.push(t);
        }
    }
    ex
}

pub fn extract_triples(
    record: &QARecord,
    llm: &dyn LlmProvider,
    template: &PromptTemplate,
) -> Result<Extraction> {
    let question = question_with_options(&record.question, &record.option_list());
    let concept = record.concept.clone().unwrap_or_default();
    let answer = record.answer_text();
    let prompt = template.render(&[
        ("question", &question),
        ("question_concept", &concept),
        ("correct_answer", &answer),
    ])?;
    let output = llm.complete(&CompletionRequest::new(prompt).temperature(0.0))?;
    let ex = parse_extraction(&output);
    for w in &ex.warnings {
        tracing::warn!(record = %record.id, "{w}");
    }
    Ok(ex)
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub out: PathBuf,
    /// Defaults to `<out>.checkpoint`.
    pub checkpoint: Option<PathBuf>,
    pub parallelism: usize,
    pub template: PromptTemplate,
}

impl BuildOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            out: out.into(),
            checkpoint: None,
            parallelism: 4,
            template: prompts::triple_extraction(),
        }
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| {
            let mut p = self.out.clone().into_os_string();
            p.push(".checkpoint");
            PathBuf::from(p)
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub records_processed: usize,
    pub records_skipped: usize,
    pub triples_written: usize,
    pub warnings: usize,
    pub resumed_from_checkpoint: usize,
}

#[derive(Serialize, Deserialize)]
struct CheckpointEntry {
    id: String,
    triples: Vec<LabelTriple>,
    warnings: usize,
}

fn read_checkpoint(path: &Path) -> Result<HashMap<String, CheckpointEntry>> {
    let mut out = HashMap::new();
    if !path.exists() {
        return Ok(out);
    }
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // a torn final line from an interrupted write is ignored
        if let Ok(entry) = serde_json::from_str::<CheckpointEntry>(&line) {
            out.insert(entry.id.clone(), entry);
        }
    }
    Ok(out)
}

/// Extracts triples for every record and writes the deduplicated union.
///
/// Progress is appended to a checkpoint file after each chunk; a rerun
/// skips records already checkpointed. Records whose extraction call fails
/// are skipped and retried on the next run. The checkpoint is removed once
/// the output file is written.
pub fn build_kg(
    records: &[QARecord],
    llm: &dyn LlmProvider,
    options: &BuildOptions,
) -> Result<BuildReport> {
    let ckpt_path = options.checkpoint_path();
    let mut done = read_checkpoint(&ckpt_path)?;
    let mut report = BuildReport {
        resumed_from_checkpoint: records.iter().filter(|r| done.contains_key(&r.id)).count(),
        ..BuildReport::default()
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let pending: Vec<&QARecord> = records.iter().filter(|r| !done.contains_key(&r.id)).collect();
    let mut ckpt = OpenOptions::new().create(true).append(true).open(&ckpt_path)?;

    for chunk in pending.chunks(options.parallelism.max(1) * 4) {
        let results: Vec<(&QARecord, Result<Extraction>)> = pool.install(|| {
            chunk
                .par_iter()
                .map(|r| (*r, extract_triples(r, llm, &options.template)))
                .collect()
        });
        for (rec, res) in results {
            match res {
                Ok(ex) => {
                    let entry = CheckpointEntry {
                        id: rec.id.clone(),
                        triples: ex.triples,
                        warnings: ex.warnings.len(),
                    };
                    writeln!(ckpt, "{}", serde_json::to_string(&entry)?)?;
                    done.insert(entry.id.clone(), entry);
                }
                Err(e) => {
                    tracing::warn!(record = %rec.id, error = %e, "extraction failed; record skipped");
                    report.records_skipped += 1;
                }
            }
        }
        ckpt.flush()?;
    }
    drop(ckpt);

    let mut seen = HashSet::new();
    let mut text = String::new();
    for rec in records {
        let Some(entry) = done.get(&rec.id) else {
            continue;
        };
        report.records_processed += 1;
        report.warnings += entry.warnings;
        for t in &entry.triples {
            if seen.insert(t.clone()) {
                text.push_str(&format!("{}\t{}\t{}\n", t.0, t.1, t.2));
                report.triples_written += 1;
            }
        }
    }

    let mut tmp = options.out.clone().into_os_string();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, text.as_bytes())?;
    fs::rename(&tmp, &options.out)?;
    if report.records_skipped == 0 {
        fs::remove_file(&ckpt_path)?;
    }
    Ok(report)
}
