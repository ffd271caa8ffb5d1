//! Command-line front end: `build-kg`, `query`, `batch` and `metrics`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::builder::{build_kg, load_dataset, BuildOptions};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{metrics_from_traces, run_batch, TraceRecord};
use crate::pipeline::Pipeline;

#[derive(Debug, Parser)]
#[command(name = "metakg", version, about = "Knowledge-graph QA with metacognitive path refinement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract triples from a QA dataset into a triple file.
    BuildKg(Common),
    /// Answer one question and write its trace.
    Query {
        question: String,
        /// Multiple-choice option, e.g. `--option "B=library"`.
        #[arg(long = "option", value_name = "LETTER=TEXT")]
        options: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate every record of a dataset; writes report.json, report.csv
    /// and traces/ under --out.
    Batch(Common),
    /// Recompute accuracy and path refinement rate from a trace directory.
    Metrics {
        traces: PathBuf,
    },
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// `key = value` run config; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Tab-separated triple file.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// JSONL question records.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output file (build-kg, query) or directory (batch).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep at most this many seed entities per question.
    #[arg(long)]
    pub seed_cap: Option<usize>,
    /// Worker threads for build-kg and batch.
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub disable_cycle: bool,
    #[arg(long)]
    pub disable_completeness_check: bool,
    #[arg(long)]
    pub disable_relevance_check: bool,
    #[arg(long)]
    pub naive_restart: bool,
    #[command(flatten)]
    pub params: ParamFlags,
}

#[derive(Debug, Args, Default)]
pub struct ParamFlags {
    #[arg(long = "params.max_concepts", value_name = "N")]
    pub max_concepts: Option<String>,
    #[arg(long = "params.tau_entity", value_name = "X")]
    pub tau_entity: Option<String>,
    #[arg(long = "params.tau_coverage", value_name = "X")]
    pub tau_coverage: Option<String>,
    #[arg(long = "params.tau_c", value_name = "X")]
    pub tau_c: Option<String>,
    #[arg(long = "params.tau_support", value_name = "X")]
    pub tau_support: Option<String>,
    #[arg(long = "params.tau_similarity", value_name = "X")]
    pub tau_similarity: Option<String>,
    #[arg(long = "params.alpha", value_name = "X")]
    pub alpha: Option<String>,
    #[arg(long = "params.delta", value_name = "X")]
    pub delta: Option<String>,
    #[arg(long = "params.n_max", value_name = "N")]
    pub n_max: Option<String>,
    #[arg(long = "params.max_hops", value_name = "N")]
    pub max_hops: Option<String>,
}

impl ParamFlags {
    fn pairs(&self) -> [(&'static str, &Option<String>); 10] {
        [
            ("max_concepts", &self.max_concepts),
            ("tau_entity", &self.tau_entity),
            ("tau_coverage", &self.tau_coverage),
            ("tau_c", &self.tau_c),
            ("tau_support", &self.tau_support),
            ("tau_similarity", &self.tau_similarity),
            ("alpha", &self.alpha),
            ("delta", &self.delta),
            ("n_max", &self.n_max),
            ("max_hops", &self.max_hops),
        ]
    }
}

impl Common {
    /// Loads `--config` (if any) and applies flag overrides.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.graph {
            cfg.graph = Some(p.clone());
        }
        if let Some(p) = &self.dataset {
            cfg.dataset = Some(p.clone());
        }
        if let Some(p) = &self.out {
            cfg.out = Some(p.clone());
        }
        if let Some(n) = self.seed_cap {
            cfg.seed_cap = Some(n);
        }
        if let Some(n) = self.parallelism {
            cfg.set("parallelism", &n.to_string(), Path::new("."))?;
        }
        let a = &mut cfg.ablations;
        a.disable_cycle |= self.disable_cycle;
        a.disable_completeness_check |= self.disable_completeness_check;
        a.disable_relevance_check |= self.disable_relevance_check;
        a.naive_restart |= self.naive_restart;
        for (name, value) in self.params.pairs() {
            if let Some(v) = value {
                cfg.set(&format!("params.{name}"), v, Path::new("."))?;
            }
        }
        Ok(cfg)
    }
}

fn usage_error(message: String) -> ! {
    Cli::command().error(ErrorKind::MissingRequiredArgument, message).exit()
}

fn dataset_path(cfg: &RunConfig) -> PathBuf {
    match &cfg.dataset {
        None => usage_error("a dataset is required (--dataset or `dataset` in --config)".into()),
        Some(p) if !p.is_file() => usage_error(format!("dataset {} does not exist", p.display())),
        Some(p) => p.clone(),
    }
}

fn parse_option(raw: &str) -> Result<(char, String)> {
    let (letter, text) = raw
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("option {raw:?} should look like B=text")))?;
    let mut chars = letter.trim().chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_alphabetic() => Ok((c.to_ascii_uppercase(), text.trim().to_string())),
        _ => Err(Error::Config(format!("option letter {letter:?} must be a single letter"))),
    }
}

type Parts = (crate::graph::KnowledgeGraph, Box<dyn crate::Similarity>, Box<dyn crate::LlmProvider>);

fn pipeline_parts(cfg: &RunConfig) -> Result<Parts> {
    Ok((cfg.load_graph()?, cfg.similarity()?, cfg.llm()?))
}

fn cmd_build_kg(common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    let dataset = dataset_path(&cfg);
    let records = load_dataset(&dataset)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("kg.tsv"));
    let llm = cfg.extraction_llm()?;
    let mut options = BuildOptions::new(&out);
    options.parallelism = cfg.parallelism;
    options.template = cfg.triple_template()?;
    let report = build_kg(&records, llm.as_ref(), &options)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_query(question: &str, raw_options: &[String], common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    let options = raw_options.iter().map(|o| parse_option(o)).collect::<Result<Vec<_>>>()?;
    let (graph, sim, llm) = pipeline_parts(&cfg)?;
    let mut pipeline = Pipeline::new(&graph, sim.as_ref(), llm.as_ref(), cfg.cycle_config())?
        .seed_cap(cfg.seed_cap)
        .templates(cfg.templates()?);
    pipeline.answer_temperature = cfg.answer_temperature;
    let trace = pipeline.answer(question, &options)?;
    println!("{}", trace.raw_output.trim_end());

    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("trace.json"));
    let record = TraceRecord {
        id: "query".into(),
        gold: None,
        outcome: None,
        error: None,
        trace: Some(trace),
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&out, serde_json::to_string_pretty(&record)? + "\n")?;
    eprintln!("trace written to {}", out.display());
    Ok(())
}

fn cmd_batch(common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    let dataset = dataset_path(&cfg);
    let records = load_dataset(&dataset)?;
    let (graph, sim, llm) = pipeline_parts(&cfg)?;
    let mut pipeline = Pipeline::new(&graph, sim.as_ref(), llm.as_ref(), cfg.cycle_config())?
        .seed_cap(cfg.seed_cap)
        .templates(cfg.templates()?);
    pipeline.answer_temperature = cfg.answer_temperature;

    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("batch-out"));
    fs::create_dir_all(&out)?;
    let traces = out.join("traces");
    if traces.exists() {
        // stale traces would be picked up by `metrics`
        fs::remove_dir_all(&traces)?;
    }
    let report = run_batch(&records, &pipeline, cfg.parallelism, Some(&traces))?;
    fs::write(out.join("report.json"), report.to_json()?)?;
    fs::write(out.join("report.csv"), report.to_csv()?)?;
    let a = &report.aggregates;
    println!(
        "questions={} correct={:.2}% wrong={:.2}% fail={:.2}% prr={:.4}",
        a.total, a.correct_pct, a.wrong_pct, a.fail_pct, a.prr
    );
    Ok(())
}

fn cmd_metrics(dir: &Path) -> Result<()> {
    let a = metrics_from_traces(dir)?;
    println!("{}", serde_json::to_string_pretty(&a)?);
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::BuildKg(c) => cmd_build_kg(c),
        Command::Query {
            question,
            options,
            common,
        } => cmd_query(question, options, common),
        Command::Batch(c) => cmd_batch(c),
        Command::Metrics { traces } => cmd_metrics(traces),
    }
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("METAKG_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
