//! Greedy path exploration on the chest-pain graph, with and without
//! weight adjustments.
//!
//! ```bash
//! cargo run -p metakg --example greedy_exploration
//! ```

use metakg::pipeline::describe_path;
use metakg::{greedy_explore, load_triples, EdgeWeighting, TableSimilarity, WeightAdjustments};

const GRAPH: &str = include_str!("../fixtures/chest_pain/graph.tsv");
const SIMS: &str = include_str!("../fixtures/chest_pain/sims.tsv");
const QUESTION: &str = include_str!("../fixtures/chest_pain/question.txt");

fn main() -> metakg::Result<()> {
    let (graph, _) = load_triples(GRAPH)?;
    let sim = TableSimilarity::parse(SIMS)?;
    let question = QUESTION.trim();
    let seed = graph.entity_by_label("Chest pain").expect("seed exists");
    let explore = |adj: &WeightAdjustments| {
        greedy_explore(seed, question, &graph, adj, None, 3, &sim, EdgeWeighting::Destination)
    };

    let plain = explore(&WeightAdjustments::default())?;
    println!("plain:     {}", describe_path(&graph, &plain));
    for step in &plain.steps {
        println!("  {} ({:.2})", graph.label(step.to), step.weight_used);
    }

    let mut boosted = WeightAdjustments::default();
    for label in ["GERD", "Heartburn", "Lying down"] {
        boosted.deltas.insert(graph.entity_by_label(label).unwrap(), 0.2);
    }
    println!("boosted:   {}", describe_path(&graph, &explore(&boosted)?));

    let mut excluded = WeightAdjustments::default();
    excluded.excluded.insert(graph.entity_by_label("Angina").unwrap());
    println!("excluded:  {}", describe_path(&graph, &explore(&excluded)?));
    Ok(())
}
