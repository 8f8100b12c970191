//! Dirichlet process prior and posterior draws, and the Bayesian bootstrap
//! they approach as the concentration goes to zero.
//!
//! cargo run --release --example dp_sampling

use tabayes::functionals::mean_var;
use tabayes::measure::{bayesian_bootstrap_draw, expected_stick_count, sample_dp_posterior, sample_dp_prior, DpSpec};
use tabayes::prob::DiscretizedNormal;
use tabayes::rng::RngHandle;
use tabayes::stats::ks_two_sample;

fn main() -> tabayes::error::Result<()> {
    let mut rng = RngHandle::new(3);
    let base = DiscretizedNormal::new(0.0, 100.0, 1e-5)?;
    let spec = DpSpec::with_default_truncation(0.5, base)?;
    println!("sticks needed for residual 1e-8 at phi = 0.5: {}", expected_stick_count(0.5, 1e-8));

    let f = sample_dp_prior(&spec, &mut rng);
    let (mu, s2) = mean_var(&f);
    println!("prior draw: {} atoms, mean {mu:.3}, variance {s2:.3}", f.len());

    let data = [1.2, 3.4, 0.7, 5.1, 2.2, 2.9];
    let f = sample_dp_posterior(&spec, &data, &mut rng);
    let data_mass: f64 = f.iter().filter(|(a, _)| data.contains(a)).map(|(_, w)| w).sum();
    println!("posterior draw: {} atoms, {:.3} of the mass on the data", f.len(), data_mass);

    let tiny = DpSpec::with_default_truncation(1e-6, base)?;
    let dp: Vec<f64> = (0..10_000).map(|_| mean_var(&sample_dp_posterior(&tiny, &data, &mut rng)).0).collect();
    let bb: Vec<f64> = (0..10_000)
        .map(|_| bayesian_bootstrap_draw(&data, &mut rng).map(|f| mean_var(&f).0))
        .collect::<Result<_, _>>()?;
    println!("KS between phi -> 0 posterior means and bootstrap means: {:.4}", ks_two_sample(&dp, &bb));
    Ok(())
}
