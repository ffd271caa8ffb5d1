//! Deterministic model replies for tests and offline runs.
//!
//! ```bash
//! cargo run -p metakg --example scripted_llm
//! ```

use metakg::llm::{Matcher, Reply};
use metakg::{CompletionRequest, LlmProvider, ScriptedProvider};

const SCRIPT: &str = r#"[
  {"when": ["key concepts", "headache"], "reply": "headache\nlight sensitivity"},
  {"regex": "Evidence \\d+: .*migraine", "reply": "B. Migraine"},
  {"when": "*", "reply": "I cannot tell from the evidence."}
]"#;

fn main() -> metakg::Result<()> {
    let llm = ScriptedProvider::from_json(SCRIPT)?;
    let prompts = [
        "List the key concepts of: headache with light sensitivity",
        "Evidence 1: photophobia symptom_of migraine\nAnswer:",
        "Something else entirely",
    ];
    for p in prompts {
        let reply = llm.complete(&CompletionRequest::new(p).temperature(0.0))?;
        println!("{:<60} => {}", p.replace('\n', " / "), reply.replace('\n', " / "));
    }

    // builder form; the first matching entry wins
    let mut inline = ScriptedProvider::default()
        .when(&["urgent"], "C")
        .fail_when(&["timeout"], "simulated outage");
    inline.push(Matcher::Any, Reply::Text("A".into()));
    let first = inline.complete(&CompletionRequest::new("urgent question"))?;
    let other = inline.complete(&CompletionRequest::new("routine question"))?;
    println!("inline: {first}, {other}");
    println!("failure: {}", inline.complete(&CompletionRequest::new("timeout please")).unwrap_err());
    println!("calls served: {} + {}", llm.calls(), inline.calls());
    Ok(())
}
