//! Load a triple file, then inspect labels, adjacency and duplicates.
//!
//! ```bash
//! cargo run -p metakg --example graph_store
//! ```

use metakg::{load_triples, normalize_label, Direction};

const TRIPLES: &str = "\
# head<TAB>relation<TAB>tail
Aspirin\ttreats\tFever
aspirin \ttreats\tfever
Aspirin\tmay_cause\tStomach ulcer
Ibuprofen\ttreats\tFever
Stomach ulcer\tcauses\tGastrointestinal bleeding
Fever\tis_a\tFever
";

fn main() -> metakg::Result<()> {
    let (graph, report) = load_triples(TRIPLES)?;
    println!(
        "{} entities, {} triples ({} lines, {} duplicates, {} self-loops skipped)",
        graph.entity_count(),
        graph.triple_count(),
        report.lines,
        report.duplicates,
        report.self_loops_skipped
    );

    // labels are matched after trimming and lowercasing
    println!("normalized: {:?}", normalize_label("  Stomach Ulcer "));
    let fever = graph.entity_by_label("FEVER").expect("fever is loaded");

    println!("neighbors of {}:", graph.label(fever));
    for (triple, direction) in graph.neighbors(fever)? {
        let other = graph.label(triple.other(direction));
        match direction {
            Direction::Outgoing => println!("  -{}-> {other}", triple.relation),
            Direction::Incoming => println!("  <-{}- {other}", triple.relation),
        }
    }
    println!("relations: {:?}", graph.relations());
    print!("round trip:\n{}", graph.to_triple_text());
    Ok(())
}
