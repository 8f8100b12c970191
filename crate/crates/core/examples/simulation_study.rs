//! A small replicated study: coverage, region size, bias and risk per method.
//!
//! cargo run --release --example simulation_study [replicates]

use tabayes::harness::config::{Experiment, ExperimentConfig};
use tabayes::harness::experiment::run_experiment;
use tabayes::harness::report::markdown;
use tabayes::posterior::ChainSettings;

fn main() -> tabayes::error::Result<()> {
    let replicates = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let mut config = ExperimentConfig::defaults(Experiment::Meanvar);
    config.replicates = replicates;
    config.chain = ChainSettings::with_length(10_000)?;
    let out = run_experiment(&config)?;
    print!("{}", markdown(&out.rows));
    let failed = out.records.iter().filter(|r| r.outcome.is_err()).count();
    println!("\n{failed} method runs failed and were excluded");
    Ok(())
}
