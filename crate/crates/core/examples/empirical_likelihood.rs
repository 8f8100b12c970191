//! Profile empirical likelihood for (mu, sigma2) and the Bayesian empirical
//! likelihood posterior built on it.
//!
//! cargo run --release --example empirical_likelihood

use tabayes::competitors::{bel_posterior, profile_el};
use tabayes::harness::gen_meanvar;
use tabayes::posterior::ChainSettings;
use tabayes::prob::NigParams;
use tabayes::rng::RngHandle;

fn main() -> tabayes::error::Result<()> {
    let x = gen_meanvar(30, &mut RngHandle::new(2));
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / n;
    println!("sample moments ({m:.3}, {v:.3})");
    for (mu, s2) in [(m, v), (m + 0.5, v), (m, 1.5 * v), (m + 3.0, v), (m, 10.0 * v)] {
        let r = profile_el(&x, mu, s2)?;
        println!("  log R({mu:6.3}, {s2:7.3}) = {:9.4}  in hull: {}  newton steps: {}", r.log_r, r.in_hull, r.iterations);
    }

    let s = bel_posterior(&x, &NigParams::meanvar_default(), &ChainSettings::new(20_000, 2_000)?, &mut RngHandle::new(4))?;
    let mean = |k: usize| s.draws.iter().map(|t| t[k]).sum::<f64>() / s.len() as f64;
    println!(
        "BEL posterior mean ({:.3}, {:.3}); acceptance {:.3}; out-of-hull proposals {}; widenings {}",
        mean(0),
        mean(1),
        s.diagnostics.acceptance_rate,
        s.diagnostics.failures,
        s.diagnostics.widenings
    );
    Ok(())
}
