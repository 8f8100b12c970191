use crate::error::{Error, Result};
use crate::functionals::{Functional, FunctionalKind};
use crate::measure::{bayesian_bootstrap_draw, Atom};
use crate::posterior::{ChainDiagnostics, Method, PosteriorSamples};
use crate::rng::RngHandle;

const MAX_RETRIES: usize = 20;

/// Functional values of `n_draws` Bayesian-bootstrap reweightings of `data`.
/// A draw whose functional fails is redrawn, at most 20 times in a row.
pub fn bb_posterior<A: Atom>(
    data: &[A],
    functional: &FunctionalKind,
    n_draws: usize,
    rng: &mut RngHandle,
) -> Result<PosteriorSamples>
where
    FunctionalKind: Functional<A>,
{
    if data.is_empty() {
        return Err(Error::EmptyInput("bootstrap data"));
    }
    let seed = rng.seed();
    let mut draws = Vec::with_capacity(n_draws);
    let mut failures = 0;
    for _ in 0..n_draws {
        let mut retries = 0;
        loop {
            let f = bayesian_bootstrap_draw(data, rng)?;
            match functional.evaluate(&f) {
                Ok(t) if t.is_finite() => {
                    draws.push(t);
                    break;
                }
                Ok(_) | Err(_) => {
                    failures += 1;
                    retries += 1;
                    if retries > MAX_RETRIES {
                        return Err(Error::ChainFailure(format!(
                            "functional failed on {retries} consecutive bootstrap draws"
                        )));
                    }
                }
            }
        }
    }
    Ok(PosteriorSamples {
        method: Method::Bb,
        seed,
        chain: None,
        accepted: vec![true; draws.len()],
        draws,
        diagnostics: ChainDiagnostics {
            acceptance_rate: 1.0,
            failures,
            ..Default::default()
        },
    })
}
