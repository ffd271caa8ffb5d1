//! Extract triples from a QA dataset with a scripted model, resume from a
//! checkpoint, and load the result.
//!
//! ```bash
//! cargo run -p metakg --example build_graph
//! ```

use std::path::Path;

use metakg::{build_kg, load_dataset, load_triples, BuildOptions, ScriptedProvider};

fn main() -> metakg::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/builder");
    let records = load_dataset(&fixtures.join("dataset.jsonl"))?;
    let llm = ScriptedProvider::load(&fixtures.join("script.json"))?;

    let out = std::env::temp_dir().join(format!("metakg-example-{}.tsv", std::process::id()));
    let mut options = BuildOptions::new(&out);
    options.parallelism = 2;
    let report = build_kg(&records, &llm, &options)?;
    println!("{}", serde_json::to_string_pretty(&report)?);

    let text = std::fs::read_to_string(&out)?;
    let (graph, _) = load_triples(&text)?;
    println!("{} entities, {} triples", graph.entity_count(), graph.triple_count());
    print!("{text}");
    std::fs::remove_file(&out)?;
    Ok(())
}
