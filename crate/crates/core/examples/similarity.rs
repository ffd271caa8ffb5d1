//! The three similarity sources: hashed embeddings behind a cache, a fixed
//! lookup table, and raw vector cosine.
//!
//! ```bash
//! cargo run -p metakg --example similarity
//! ```

use metakg::{cosine, load_triples, HashProvider, Similarity, SimilarityCache, TableSimilarity, Vector};

fn main() -> metakg::Result<()> {
    let (graph, _) = load_triples("Aspirin\ttreats\tFever\nAspirin\tmay_cause\tStomach ulcer\n")?;

    let cache = SimilarityCache::new(HashProvider::default());
    // entity vectors are computed once up front; query text hits an LRU
    let warmed = cache.warm(&graph)?;
    println!("warm-up batches: {warmed}, cached entities: {}", cache.entity_vector_count());
    for label in ["Aspirin", "Fever", "Stomach ulcer"] {
        println!("hash  sim({label:?}, \"Does aspirin reduce fever?\") = {:.4}", cache.sim(label, "Does aspirin reduce fever?")?);
    }

    let table = TableSimilarity::parse(
        "#default 0\n\
         Aspirin\tpain relief\t0.82\n\
         Fever\tpain relief\t-0.3\n",
    )?;
    println!("table sim(Aspirin, pain relief) = {:.2}", table.sim("Aspirin", "pain relief")?);
    // negative raw scores are clamped to zero, missing pairs use the default
    println!("table sim(Fever, pain relief)   = {:.2}", table.sim("Fever", "pain relief")?);
    println!("table sim(Fever, unknown)       = {:.2}", table.sim("Fever", "unknown")?);

    let a = Vector::new(vec![1.0, 0.0, 1.0])?;
    let b = Vector::new(vec![1.0, 1.0, 0.0])?;
    println!("cosine = {:.4}", cosine(&a, &b)?);
    Ok(())
}
