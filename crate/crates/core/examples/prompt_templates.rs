//! Built-in prompt templates, their placeholders, and overriding one from
//! a file.
//!
//! ```bash
//! cargo run -p metakg --example prompt_templates
//! ```

use metakg::prompts::{self, PromptTemplate};

fn main() -> metakg::Result<()> {
    for t in [prompts::concept_extraction(), prompts::answer_generation(), prompts::triple_extraction()] {
        println!("{} v{}: {:?}", t.name, t.version, t.placeholders());
    }

    let custom = PromptTemplate::new("concepts", 2, "Concepts in: {query}\nOne per line, at most {max_concepts}.");
    println!("{}", custom.render(&[("query", "Why does my knee hurt?"), ("max_concepts", "3")])?);
    // rendering rejects a missing placeholder
    println!("{}", custom.render(&[("query", "x")]).unwrap_err());

    let path = std::env::temp_dir().join(format!("metakg-prompt-{}.txt", std::process::id()));
    std::fs::write(&path, "Question: {question}\nList its medical concepts, one per line.\n")?;
    let loaded = PromptTemplate::load_override(&prompts::concept_extraction(), &path)?;
    println!("override placeholders: {:?}", loaded.placeholders());
    // an override must keep the built-in placeholder set
    std::fs::write(&path, "Question: {query}\n")?;
    println!("{}", PromptTemplate::load_override(&prompts::concept_extraction(), &path).unwrap_err());
    std::fs::remove_file(&path)?;
    Ok(())
}
