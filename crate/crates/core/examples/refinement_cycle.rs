//! One seed through the perceive / evaluate / adjust loop, printing every
//! iteration, then the same seed with the loop switched off.
//!
//! ```bash
//! cargo run -p metakg --example refinement_cycle
//! ```

use metakg::pipeline::describe_path;
use metakg::{load_triples, run_cycle, ConceptSet, CycleConfig, Params, SeedEntity, TableSimilarity};

const GRAPH: &str = include_str!("../fixtures/chest_pain/graph.tsv");
const SIMS: &str = include_str!("../fixtures/chest_pain/sims.tsv");
const QUESTION: &str = include_str!("../fixtures/chest_pain/question.txt");

fn main() -> metakg::Result<()> {
    let (graph, _) = load_triples(GRAPH)?;
    let sim = TableSimilarity::parse(SIMS)?;
    let concepts = ConceptSet::new(QUESTION.trim(), ["chest pain", "indigestion", "worse when lying down"]);
    let entity = graph.entity_by_label("Chest pain").unwrap();
    let seed = SeedEntity {
        concept: "chest pain".into(),
        entity,
        label: "Chest pain".into(),
        score: 0.95,
    };

    let mut config = CycleConfig::with_params(Params::default());
    let (path, trace) = run_cycle(&seed, &concepts, &graph, &config, &sim)?;
    for r in &trace.records {
        println!("iteration {}: {}", r.iteration, describe_path(&graph, &r.path));
        for (concept, cov) in r.coverage.iter() {
            println!("  coverage {concept:<24} {cov:.2}");
        }
        if let Some(missing) = &r.diagnosis.missing_concepts {
            println!("  missing: {}", missing.join(", "));
        }
        if let Some(plan) = &r.plan {
            println!("  restart at {} with {} boosted entities", graph.label(plan.restart), plan.deltas.len());
        }
        if let Some(s) = r.path_similarity {
            println!("  overlap with previous path: {s:.4}");
        }
    }
    println!("stopped: {:?}", trace.stop_reason);
    println!("refined: {}", describe_path(&graph, &path));

    config.ablations.disable_cycle = true;
    let (baseline, _) = run_cycle(&seed, &concepts, &graph, &config, &sim)?;
    println!("no cycle: {}", describe_path(&graph, &baseline));
    Ok(())
}
