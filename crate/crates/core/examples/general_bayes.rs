//! Gibbs posterior on the first two raw moments with a quadratic loss.
//!
//! cargo run --release --example general_bayes

use tabayes::competitors::{gb_loss, gb_posterior, GbSpec};
use tabayes::harness::gen_meanvar;
use tabayes::posterior::ChainSettings;
use tabayes::prob::NigParams;
use tabayes::rng::RngHandle;

fn main() -> tabayes::error::Result<()> {
    let x = gen_meanvar(20, &mut RngHandle::new(8));
    let spec = GbSpec::from_data(&x)?;
    let [m1, m2] = spec.proposal_mean;
    println!("loss at the sample moments {:.4}, one unit of mu away {:.4}", gb_loss(&x, &spec, m1, m2), gb_loss(&x, &spec, m1 + 1.0, m2));

    let s = gb_posterior(&x, &NigParams::meanvar_default(), &ChainSettings::new(20_000, 2_000)?, &mut RngHandle::new(9))?;
    let mean = |k: usize| s.draws.iter().map(|t| t[k]).sum::<f64>() / s.len() as f64;
    println!("sample (mu, sigma2) = ({m1:.3}, {:.3})", m2 - m1 * m1);
    println!("GB posterior mean   = ({:.3}, {:.3}), acceptance {:.3}", mean(0), mean(1), s.diagnostics.acceptance_rate);
    Ok(())
}
