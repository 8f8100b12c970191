//! The one-dimensional augmented posterior three ways: Metropolis-Hastings,
//! grid normalization of `p * q_post / q_prior`, and the normal approximation.
//!
//! cargo run --release --example grid_and_normal_approx

use nalgebra::{DMatrix, DVector};
use tabayes::functionals::FunctionalKind;
use tabayes::measure::DpSpec;
use tabayes::posterior::ChainSettings;
use tabayes::prior::NormalPrior;
use tabayes::prob::{sample_normal, DiscretizedNormal};
use tabayes::rng::RngHandle;
use tabayes::stats::{chain_mean_se, variance};
use tabayes::ta::{estimate_posterior_q, estimate_prior_q, normal_approx, ta_posterior_grid_1d, ta_posterior_mh, Grid1d, TaModelSpec};

fn main() -> tabayes::error::Result<()> {
    let dp = DpSpec::with_default_truncation(0.5, DiscretizedNormal::new(0.0, 100.0, 1e-5)?)?;
    let prior = NormalPrior::new(0.0, 1.0)?;
    let spec = TaModelSpec::new(dp, FunctionalKind::Mean, prior)?;
    let mut rng = RngHandle::new(12);
    let x: Vec<f64> = (0..30).map(|_| sample_normal(2.0, 4.0, &mut rng)).collect::<Result<_, _>>()?;
    let xbar = x.iter().sum::<f64>() / x.len() as f64;

    let q = estimate_prior_q(&spec, &mut rng)?.density;
    let mh = ta_posterior_mh(&spec, &x, &q, &ChainSettings::new(40_000, 2_000)?, &mut rng)?;
    let (m, se) = chain_mean_se(&mh.component(0));
    println!("MH:     mean {m:.4} (se {se:.4}), acceptance {:.2}", mh.diagnostics.acceptance_rate);

    let q_post = estimate_posterior_q(&spec, &x, 20_000, &mut rng)?;
    let grid = Grid1d::new(xbar - 4.0, xbar + 4.0, 2001)?;
    let g = ta_posterior_grid_1d(&spec, &q, &q_post, &grid, 40_000, &mut rng)?;
    let gm: f64 = (0..grid.points).map(|i| g.masses[i] * grid.point(i)).sum();
    println!("grid:   mean {gm:.4}");

    // Proposal posterior of the mean is close to Normal(xbar, s^2 / n); the
    // weight p/q is close to the prior since q is nearly flat here.
    let v = variance(&x) / x.len() as f64;
    let (tn, hn) = normal_approx(
        &DVector::from_element(1, xbar),
        &DMatrix::from_element(1, 1, 1.0 / v),
        &DVector::from_element(1, prior.mean),
        &DMatrix::from_element(1, 1, 1.0 / prior.variance),
    )?;
    println!("normal: mean {:.4}, sd {:.4}", tn[0], (1.0 / hn[(0, 0)]).sqrt());
    Ok(())
}
