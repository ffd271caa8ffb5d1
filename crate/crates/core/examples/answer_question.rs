//! End-to-end multiple-choice answering from a run config: concept
//! extraction, seed matching, refinement, evidence and the final choice.
//!
//! ```bash
//! cargo run -p metakg --example answer_question
//! ```

use std::path::Path;

use metakg::config::RunConfig;
use metakg::Pipeline;

fn main() -> metakg::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/donepezil");
    let config = RunConfig::load(&dir.join("run.conf"))?;
    let records = metakg::load_dataset(&dir.join("dataset.jsonl"))?;
    let record = &records[0];

    let graph = config.load_graph()?;
    let sim = config.similarity()?;
    let llm = config.llm()?;
    let pipeline = Pipeline::new(&graph, sim.as_ref(), llm.as_ref(), config.cycle_config())?;

    let trace = pipeline.answer(&record.question, &record.option_list())?;
    println!("question: {}", record.question);
    println!("concepts: {}", trace.concepts.concepts.join(" | "));
    for run in &trace.seeds {
        println!("seed {}:", run.seed.label);
        println!("  initial {}", run.initial_path_text.as_deref().unwrap_or("-"));
        println!("  final   {}", run.final_path_text.as_deref().unwrap_or("-"));
    }
    println!("{}", trace.evidence_text);
    println!(
        "chosen {:?}, gold {:?}",
        trace.chosen_option,
        record.gold_letter()
    );
    Ok(())
}
