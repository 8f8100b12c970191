use crate::error::{Error, Result};
use crate::functionals::Theta;
use crate::posterior::{ChainDiagnostics, ChainSettings, Method, PosteriorSamples};
use crate::prior::{LogDensity, NigRawMoments};
use crate::prob::{sample_normal, NigParams};
use crate::rng::RngHandle;

const MAX_TRUNCATION_TRIES: usize = 10_000;

/// General Bayes on the first two raw moments `(mu, mu2')`.
///
/// Loss per observation is `l_i' C l_i` with `l_i = (x_i - mu, x_i^2 - mu2')`
/// and `C` half the inverse sample covariance of `(x, x^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbSpec {
    pub c: [[f64; 2]; 2],
    pub proposal_mean: [f64; 2],
    pub proposal_cov: [[f64; 2]; 2],
    chol: [f64; 3],
}

impl GbSpec {
    pub fn from_data(data: &[f64]) -> Result<Self> {
        let n = data.len();
        if n < 3 {
            return Err(Error::TooFewSamples { needed: 3, got: n });
        }
        let nf = n as f64;
        let m1 = data.iter().sum::<f64>() / nf;
        let m2 = data.iter().map(|x| x * x).sum::<f64>() / nf;
        let mut s = [0.0; 3];
        for x in data {
            let (a, b) = (x - m1, x * x - m2);
            s[0] += a * a;
            s[1] += a * b;
            s[2] += b * b;
        }
        s.iter_mut().for_each(|v| *v /= nf - 1.0);
        let det = s[0] * s[2] - s[1] * s[1];
        if !(det > 1e-12 * s[0] * s[2]) || !det.is_finite() {
            return Err(Error::SingularDesign("sample covariance of (x, x^2) is singular".into()));
        }
        let c = [[0.5 * s[2] / det, -0.5 * s[1] / det], [-0.5 * s[1] / det, 0.5 * s[0] / det]];
        let cov = [[s[0] / nf, s[1] / nf], [s[1] / nf, s[2] / nf]];
        let l11 = cov[0][0].sqrt();
        let l21 = cov[1][0] / l11;
        let l22 = (cov[1][1] - l21 * l21).max(0.0).sqrt();
        Ok(Self {
            c,
            proposal_mean: [m1, m2],
            proposal_cov: cov,
            chol: [l11, l21, l22],
        })
    }

    fn log_proposal(&self, m: [f64; 2]) -> f64 {
        let [l11, l21, l22] = self.chol;
        let z1 = (m[0] - self.proposal_mean[0]) / l11;
        let z2 = (m[1] - self.proposal_mean[1] - l21 * z1) / l22;
        -0.5 * (z1 * z1 + z2 * z2)
    }

    fn sample_proposal(&self, rng: &mut RngHandle) -> Result<[f64; 2]> {
        let [l11, l21, l22] = self.chol;
        for _ in 0..MAX_TRUNCATION_TRIES {
            let z1 = sample_normal(0.0, 1.0, rng)?;
            let z2 = sample_normal(0.0, 1.0, rng)?;
            let m = [self.proposal_mean[0] + l11 * z1, self.proposal_mean[1] + l21 * z1 + l22 * z2];
            if m[1] > m[0] * m[0] {
                return Ok(m);
            }
        }
        Err(Error::ChainFailure("proposal truncation region has negligible mass".into()))
    }
}

/// `sum_i l_i' C l_i` at `(mu, mu2')`.
pub fn gb_loss(data: &[f64], spec: &GbSpec, mu: f64, mu2: f64) -> f64 {
    let c = &spec.c;
    data.iter()
        .map(|x| {
            let (a, b) = (x - mu, x * x - mu2);
            c[0][0] * a * a + 2.0 * c[0][1] * a * b + c[1][1] * b * b
        })
        .sum()
}

/// Independence MH on `(mu, mu2')` targeting `exp(-loss) * p`, where the NIG
/// prior is carried to raw moments. Draws are returned as `(mu, sigma2)`.
pub fn gb_posterior(
    data: &[f64],
    prior: &NigParams,
    chain: &ChainSettings,
    rng: &mut RngHandle,
) -> Result<PosteriorSamples> {
    let spec = GbSpec::from_data(data)?;
    ChainSettings::new(chain.length, chain.burn_in)?;
    let seed = rng.seed();
    let prior = NigRawMoments(*prior);
    let log_w = |m: [f64; 2]| {
        -gb_loss(data, &spec, m[0], m[1]) + prior.log_density(&Theta::pair(m[0], m[1])) - spec.log_proposal(m)
    };
    let mut state = spec.sample_proposal(rng)?;
    let mut lw = log_w(state);
    let mut draws = Vec::with_capacity(chain.kept());
    let mut flags = Vec::with_capacity(chain.kept());
    let mut accepted = 0;
    for step in 0..chain.length {
        let cand = spec.sample_proposal(rng)?;
        let lw_new = log_w(cand);
        let log_ratio = lw_new - lw;
        let moved = lw_new > f64::NEG_INFINITY && (log_ratio >= 0.0 || rng.uniform_open().ln() < log_ratio);
        if moved {
            state = cand;
            lw = lw_new;
            accepted += 1;
        }
        if step >= chain.burn_in {
            draws.push(Theta::pair(state[0], state[1] - state[0] * state[0]));
            flags.push(moved);
        }
    }
    if accepted == 0 {
        return Err(Error::ChainFailure("no proposal was accepted".into()));
    }
    Ok(PosteriorSamples {
        method: Method::Gb,
        seed,
        chain: Some(*chain),
        draws,
        accepted: flags,
        diagnostics: ChainDiagnostics {
            acceptance_rate: accepted as f64 / chain.length as f64,
            ..Default::default()
        },
    })
}
