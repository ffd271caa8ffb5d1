//! Configure OpenAI-compatible chat and embedding endpoints.
//!
//! Without `METAKG_API_URL` this only resolves and prints the config. With
//! it (and optionally `METAKG_API_KEY`), it embeds two texts and asks one
//! question.
//!
//! ```bash
//! METAKG_API_URL=http://localhost:8000/v1 cargo run -p metakg --example remote_providers
//! ```

use std::path::Path;

use metakg::config::RunConfig;
use metakg::CompletionRequest;

const CONFIG: &str = "\
embedding.provider = remote
embedding.url = ${METAKG_API_URL}/embeddings
embedding.model = text-embedding-3-small
embedding.dim = 1536
embedding.api_key = ${METAKG_API_KEY}
llm.provider = remote
llm.url = ${METAKG_API_URL}/chat/completions
llm.model = gpt-4o-mini
llm.api_key = ${METAKG_API_KEY}
llm.timeout_secs = 30
";

fn main() -> metakg::Result<()> {
    let live = std::env::var("METAKG_API_URL").is_ok();
    let lookup = |k: &str| {
        std::env::var(k).ok().or_else(|| match k {
            "METAKG_API_URL" => Some("http://localhost:8000/v1".into()),
            "METAKG_API_KEY" => Some(String::new()),
            _ => None,
        })
    };
    let config = RunConfig::parse_with_env(CONFIG, Path::new("."), lookup)?;
    let (e, l) = (&config.embedding, &config.llm);
    println!("embedding: {:?} at {:?} model {:?}", e.provider, e.url, e.model);
    println!("chat:      {:?} at {:?} model {:?}", l.provider, l.url, l.model);
    if !live {
        println!("set METAKG_API_URL to call the endpoints");
        return Ok(());
    }

    let sim = config.similarity()?;
    println!("sim = {:.4}", sim.sim("aspirin", "fever reducer")?);
    let llm = config.llm()?;
    let reply = llm.complete(&CompletionRequest::new("Name one use of aspirin in five words.").temperature(0.0))?;
    println!("reply: {reply}");
    Ok(())
}
