//! Reweighting prior draws of the mean functional by `p / q` recovers the
//! subjective prior even though the Dirichlet process induces a much wider one.
//!
//! cargo run --release --example prior_matching

use tabayes::functionals::FunctionalKind;
use tabayes::measure::DpSpec;
use tabayes::prior::NormalPrior;
use tabayes::prob::DiscretizedNormal;
use tabayes::rng::RngHandle;
use tabayes::stats::weighted_ks_distance;
use tabayes::ta::{estimate_prior_q, prior_reweighting, TaModelSpec};

fn main() -> tabayes::error::Result<()> {
    let base = DiscretizedNormal::new(0.0, 100.0, 1e-5)?;
    let dp = DpSpec::with_default_truncation(0.5, base)?;
    let prior = NormalPrior::new(0.0, 10.0)?;
    let spec = TaModelSpec::new(dp, FunctionalKind::Mean, prior)?;

    let q = estimate_prior_q(&spec, &mut RngHandle::new(1))?;
    let vals: Vec<f64> = q.draws.iter().map(|t| t[0]).collect();
    let flat = vec![1.0 / vals.len() as f64; vals.len()];
    let w = prior_reweighting(&spec, &q.density, &q.draws);

    println!("{} prior draws of the mean functional", vals.len());
    println!("KS to N(0, 10), unweighted: {:.4}", weighted_ks_distance(&vals, &flat, |x| prior.cdf(x)));
    println!("KS to N(0, 10), p/q weights: {:.4}", weighted_ks_distance(&vals, &w, |x| prior.cdf(x)));
    Ok(())
}
