use crate::error::{Error, Result};
use crate::functionals::Theta;
use crate::posterior::{ChainDiagnostics, ChainSettings, Method, PosteriorSamples};
use crate::prior::LogDensity;
use crate::prob::{normal_ln_pdf, ln_gamma, sample_gamma, sample_normal, NigParams};
use crate::rng::RngHandle;

use super::el::profile_el;

const MAX_INITIAL_DRAWS: usize = 100;

/// Normal-inverse-gamma law on `(mu, sigma2)` with
/// `1/sigma2 ~ Gamma(alpha, beta)` and `mu | sigma2 ~ Normal(mu0, sigma2 / kappa)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigProposal {
    pub alpha: f64,
    pub beta: f64,
    pub mu0: f64,
    pub kappa: f64,
}

impl NigProposal {
    /// Conjugate posterior of a normal model under `prior` (which has
    /// `kappa = 1`), with shape and rate then multiplied by `scale`.
    pub fn conjugate(prior: &NigParams, data: &[f64], scale: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput("proposal data"));
        }
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        let n = data.len() as f64;
        let xbar = data.iter().sum::<f64>() / n;
        let ss = data.iter().map(|x| (x - xbar) * (x - xbar)).sum::<f64>();
        let kappa = 1.0 + n;
        let d = xbar - prior.mu0;
        Ok(Self {
            alpha: scale * (prior.alpha + 0.5 * n),
            beta: scale * (prior.beta + 0.5 * ss + 0.5 * n * d * d / kappa),
            mu0: (prior.mu0 + n * xbar) / kappa,
            kappa,
        })
    }

    /// Doubles the spread of both coordinates.
    pub fn widened(&self) -> Self {
        Self {
            alpha: 0.5 * self.alpha,
            beta: 0.5 * self.beta,
            mu0: self.mu0,
            kappa: 0.5 * self.kappa,
        }
    }

    pub fn log_density(&self, mu: f64, sigma2: f64) -> f64 {
        if !(sigma2 > 0.0) {
            return f64::NEG_INFINITY;
        }
        self.alpha * self.beta.ln() - ln_gamma(self.alpha) - (self.alpha + 1.0) * sigma2.ln() - self.beta / sigma2
            + normal_ln_pdf(mu, self.mu0, sigma2 / self.kappa)
    }

    pub fn sample(&self, rng: &mut RngHandle) -> Result<(f64, f64)> {
        let sigma2 = 1.0 / sample_gamma(self.alpha, self.beta, rng)?;
        let mu = sample_normal(self.mu0, sigma2 / self.kappa, rng)?;
        Ok((mu, sigma2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BelSettings {
    /// Multiplier on the conjugate posterior's shape and rate.
    pub proposal_scale: f64,
    /// Acceptance rate below which the proposal is widened and the chain rerun.
    pub min_acceptance: f64,
    pub max_widenings: usize,
}

impl Default for BelSettings {
    fn default() -> Self {
        Self {
            proposal_scale: 0.25,
            min_acceptance: 0.01,
            max_widenings: 3,
        }
    }
}

/// Bayesian empirical likelihood posterior of `(mu, sigma2)` under an NIG prior.
pub fn bel_posterior(
    data: &[f64],
    prior: &NigParams,
    chain: &ChainSettings,
    rng: &mut RngHandle,
) -> Result<PosteriorSamples> {
    let proposal = NigProposal::conjugate(prior, data, BelSettings::default().proposal_scale)?;
    bel_posterior_with(data, prior, proposal, &BelSettings::default(), chain, rng)
}

/// Independence MH targeting `R_n(mu, sigma2) * p(mu, sigma2)` from the
/// given NIG proposal. Proposals outside the convex hull have target 0 and
/// are rejected.
pub fn bel_posterior_with<P: LogDensity>(
    data: &[f64],
    prior: &P,
    proposal: NigProposal,
    settings: &BelSettings,
    chain: &ChainSettings,
    rng: &mut RngHandle,
) -> Result<PosteriorSamples> {
    if data.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: data.len() });
    }
    ChainSettings::new(chain.length, chain.burn_in)?;
    let seed = rng.seed();
    let log_target = |mu: f64, s2: f64| -> Result<f64> {
        let lp = prior.log_density(&Theta::pair(mu, s2));
        if lp == f64::NEG_INFINITY {
            return Ok(lp);
        }
        Ok(profile_el(data, mu, s2)?.log_r + lp)
    };

    let mut proposal = proposal;
    let mut widenings = 0;
    loop {
        let run = run_chain(&proposal, &log_target, chain, rng)?;
        let rate = run.as_ref().map(|r| r.acceptance_rate).unwrap_or(0.0);
        if rate >= settings.min_acceptance || widenings >= settings.max_widenings {
            let Some(run) = run else {
                return Err(Error::ChainFailure("no in-hull proposal found".into()));
            };
            if run.accepted_total == 0 {
                return Err(Error::ChainFailure("no proposal was accepted".into()));
            }
            return Ok(PosteriorSamples {
                method: Method::Bel,
                seed,
                chain: Some(*chain),
                draws: run.draws,
                accepted: run.accepted,
                diagnostics: ChainDiagnostics {
                    acceptance_rate: run.acceptance_rate,
                    failures: run.out_of_hull,
                    max_log_weight: 0.0,
                    widenings,
                },
            });
        }
        proposal = proposal.widened();
        widenings += 1;
    }
}

struct ChainRun {
    draws: Vec<Theta>,
    accepted: Vec<bool>,
    accepted_total: usize,
    acceptance_rate: f64,
    out_of_hull: usize,
}

fn run_chain(
    proposal: &NigProposal,
    log_target: &impl Fn(f64, f64) -> Result<f64>,
    chain: &ChainSettings,
    rng: &mut RngHandle,
) -> Result<Option<ChainRun>> {
    let mut state = None;
    for _ in 0..MAX_INITIAL_DRAWS {
        let (mu, s2) = proposal.sample(rng)?;
        let lt = log_target(mu, s2)?;
        if lt > f64::NEG_INFINITY {
            state = Some((mu, s2, lt - proposal.log_density(mu, s2)));
            break;
        }
    }
    let Some((mut mu, mut s2, mut lw)) = state else {
        return Ok(None);
    };
    let mut draws = Vec::with_capacity(chain.kept());
    let mut flags = Vec::with_capacity(chain.kept());
    let mut accepted_total = 0;
    let mut out_of_hull = 0;
    for step in 0..chain.length {
        let (m, v) = proposal.sample(rng)?;
        let lt = log_target(m, v)?;
        let mut moved = false;
        if lt == f64::NEG_INFINITY {
            out_of_hull += 1;
        } else {
            let lw_new = lt - proposal.log_density(m, v);
            let log_ratio = lw_new - lw;
            if log_ratio >= 0.0 || rng.uniform_open().ln() < log_ratio {
                mu = m;
                s2 = v;
                lw = lw_new;
                moved = true;
                accepted_total += 1;
            }
        }
        if step >= chain.burn_in {
            draws.push(Theta::pair(mu, s2));
            flags.push(moved);
        }
    }
    Ok(Some(ChainRun {
        draws,
        accepted: flags,
        accepted_total,
        acceptance_rate: accepted_total as f64 / chain.length as f64,
        out_of_hull,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::FlatPrior;
    use crate::stats::chain_mean_se;

    #[test]
    fn proposal_density_integrates_to_one() {
        let p = NigProposal { alpha: 3.0, beta: 2.0, mu0: 0.5, kappa: 4.0 };
        let (mut total, dm, dv) = (0.0, 0.01, 0.005);
        for i in 0..600 {
            let mu = -2.5 + (i as f64 + 0.5) * dm;
            for j in 0..2000 {
                let v = (j as f64 + 0.5) * dv;
                total += p.log_density(mu, v).exp() * dm * dv;
            }
        }
        assert!((total - 1.0).abs() < 2e-3, "{total}");
    }

    #[test]
    fn concentrates_on_sample_mean() {
        let mut rng = RngHandle::new(21);
        let data: Vec<f64> = (0..200).map(|_| sample_normal(0.0, 1.0, &mut rng).unwrap()).collect();
        let xbar = data.iter().sum::<f64>() / 200.0;
        let prior = NigParams::new(2.0, 2.0, 0.0).unwrap();
        let s = bel_posterior(&data, &prior, &ChainSettings::new(6000, 1000).unwrap(), &mut rng).unwrap();
        assert!(s.draws.iter().all(|t| t[1] > 0.0));
        let (m, se) = chain_mean_se(&s.component(0));
        // The prior pulls slightly toward 0; allow for that on top of Monte Carlo error.
        assert!((m - xbar).abs() < 3.0 * se + 0.01, "{m} vs {xbar} (se {se})");
    }

    #[test]
    fn rejects_out_of_hull_moves() {
        // A proposal that lives mostly outside the hull still only keeps in-hull states.
        let data = [0.0, 1.0, 2.0, 3.0];
        let prop = NigProposal { alpha: 2.0, beta: 2.0, mu0: 1.5, kappa: 0.05 };
        let flat = FlatPrior { dim: 2, positive_second: true };
        let s = bel_posterior_with(&data, &flat, prop, &BelSettings::default(), &ChainSettings::new(3000, 0).unwrap(), &mut RngHandle::new(2)).unwrap();
        for t in &s.draws {
            assert!(profile_el(&data, t[0], t[1]).unwrap().in_hull);
        }
        assert!(s.diagnostics.failures > 0);
    }

    #[test]
    fn too_few_points() {
        let prior = NigParams::meanvar_default();
        assert!(bel_posterior(&[1.0, 2.0], &prior, &ChainSettings::new(10, 1).unwrap(), &mut RngHandle::new(1)).is_err());
    }
}
