//! Batch evaluation of the synthetic 20-question scenario under each
//! ablation setting.
//!
//! ```bash
//! cargo run -p metakg --example ablation_batch
//! ```

use metakg::scenario::Scenario;
use metakg::{run_batch, Ablations, CycleConfig, Pipeline};

fn main() -> metakg::Result<()> {
    let scenario = Scenario::ablation();
    let graph = scenario.graph()?;
    let sim = scenario.similarity()?;
    let llm = scenario.llm()?;
    let records = scenario.records()?;

    type Setting = (&'static str, fn(&mut Ablations));
    let settings: [Setting; 5] = [
        ("full", |_| {}),
        ("no completeness check", |a| a.disable_completeness_check = true),
        ("no relevance check", |a| a.disable_relevance_check = true),
        ("naive restart", |a| a.naive_restart = true),
        ("no cycle", |a| a.disable_cycle = true),
    ];
    println!("{:<24} {:>8} {:>8} {:>8} {:>6}", "setting", "correct", "wrong", "fail", "prr");
    for (name, tweak) in settings {
        let mut config = CycleConfig::with_params(Scenario::params());
        tweak(&mut config.ablations);
        let pipeline = Pipeline::new(&graph, &sim, &llm, config)?;
        let a = run_batch(&records, &pipeline, 4, None)?.aggregates;
        println!(
            "{name:<24} {:>7.1}% {:>7.1}% {:>7.1}% {:>6.3}",
            a.correct_pct, a.wrong_pct, a.fail_pct, a.prr
        );
    }
    Ok(())
}
