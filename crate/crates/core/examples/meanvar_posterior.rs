//! Joint posterior of the mean and variance of a skewed sample under all
//! four methods, with 95% HPD regions.
//!
//! cargo run --release --example meanvar_posterior

use tabayes::harness::config::{Experiment, ExperimentConfig};
use tabayes::harness::experiment::run_posterior;
use tabayes::harness::{gen_meanvar, hpd_1d, hpd_2d, Dataset};
use tabayes::posterior::Method;
use tabayes::rng::RngHandle;

fn main() -> tabayes::error::Result<()> {
    let config = ExperimentConfig::defaults(Experiment::Meanvar);
    let x = gen_meanvar(20, &mut RngHandle::new(11));
    let data = Dataset::Scalar(x);
    println!("truth: mu = 3.5, sigma2 = 10.75");
    for method in Method::ALL {
        let s = run_posterior(&config, method, &data)?;
        let mu = s.component(0);
        let s2 = s.component(1);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let joint = hpd_2d(&s.draws, 0.95, 200)?;
        println!(
            "{method:>4}: mean ({:.2}, {:.2})  mu HPD length {:.2}  sigma2 HPD length {:.2}  joint area {:.1}  acceptance {:.2}",
            mean(&mu),
            mean(&s2),
            hpd_1d(&mu, 0.95)?.size(),
            hpd_1d(&s2, 0.95)?.size(),
            joint.size(),
            s.diagnostics.acceptance_rate
        );
    }
    Ok(())
}
