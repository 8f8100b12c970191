//! Elementary distributions, the normal-inverse-gamma prior and lattice
//! discretization of continuous base distributions.
//!
//! Gamma laws are parameterized by shape and *rate* throughout.

use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::RngHandle;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn normal_ln_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + variance.ln() + d * d / variance)
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn expit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Draw from Normal(mean, variance). A zero variance returns `mean`.
pub fn sample_normal(mean: f64, variance: f64, rng: &mut RngHandle) -> Result<f64> {
    if !(variance >= 0.0) || !variance.is_finite() || !mean.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "normal requires finite mean and variance >= 0, got ({mean}, {variance})"
        )));
    }
    if variance == 0.0 {
        return Ok(mean);
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(mean + variance.sqrt() * z)
}

/// Draw from Gamma(shape, rate); the mean is `shape / rate`.
pub fn sample_gamma(shape: f64, rate: f64, rng: &mut RngHandle) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gamma requires shape > 0 and rate > 0, got ({shape}, {rate})"
        )));
    }
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(g.sample(rng))
}

pub fn sample_bernoulli(p: f64, rng: &mut RngHandle) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "bernoulli probability must lie in [0, 1], got {p}"
        )));
    }
    if p == 0.0 {
        return Ok(false);
    }
    if p == 1.0 {
        return Ok(true);
    }
    Ok(rng.uniform_open() < p)
}

/// Draw from Beta(1, b), the stick-length law of stick-breaking.
pub fn sample_beta_one(b: f64, rng: &mut RngHandle) -> f64 {
    // Inverse CDF: 1 - (1 - x)^b = u.
    let u = rng.uniform_open();
    -(u.ln() / b).exp_m1()
}

/// Log of a Gamma(shape, 1) draw. Stays finite for shapes so small that the
/// draw itself underflows to zero.
pub fn sample_ln_gamma_unit(shape: f64, rng: &mut RngHandle) -> f64 {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("shape checked by caller");
        g.sample(rng).ln()
    } else {
        // G(a) = G(a + 1) * U^(1/a)
        let g = Gamma::new(shape + 1.0, 1.0).expect("shape checked by caller");
        let x: f64 = g.sample(rng);
        x.ln() + rng.uniform_open().ln() / shape
    }
}

/// Draw from Dirichlet(alpha).
pub fn sample_dirichlet(alpha: &[f64], rng: &mut RngHandle) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return Err(Error::EmptyInput("dirichlet concentration vector"));
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dirichlet concentrations must be positive and finite, got {a}"
        )));
    }
    let logs: Vec<f64> = alpha
        .iter()
        .map(|&a| sample_ln_gamma_unit(a, rng))
        .collect();
    Ok(normalize_log_weights(&logs))
}

/// Dirichlet(1, ..., 1) of length `n` via normalized unit exponentials.
pub fn sample_flat_dirichlet(n: usize, rng: &mut RngHandle) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyInput("dirichlet dimension"));
    }
    let mut w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    fix_simplex_sum(&mut w);
    Ok(w)
}

/// Softmax of log weights, with the sum pinned to one.
pub fn normalize_log_weights(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    fix_simplex_sum(&mut w);
    w
}

/// Push the rounding residue of a normalized vector onto its largest entry.
pub(crate) fn fix_simplex_sum(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    let (imax, _) = w
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
    w[imax] = (w[imax] + (1.0 - total)).max(0.0);
}

/// Normal-inverse-gamma prior on (mu, sigma2):
/// `1/sigma2 ~ Gamma(alpha, rate = beta)` and `mu | sigma2 ~ Normal(mu0, sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu0: f64,
}

impl NigParams {
    pub fn new(alpha: f64, beta: f64, mu0: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) || !mu0.is_finite() || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "NIG requires alpha > 0, beta > 0 and finite mu0, got ({alpha}, {beta}, {mu0})"
            )));
        }
        Ok(Self { alpha, beta, mu0 })
    }

    /// The subjective prior used for the mean/variance study.
    pub fn meanvar_default() -> Self {
        Self {
            alpha: 6.623,
            beta: 60.442,
            mu0: 3.5,
        }
    }

    /// Joint log density in (mu, sigma2). Returns `-inf` for `sigma2 <= 0`.
    pub fn log_density(&self, mu: f64, sigma2: f64) -> f64 {
        if !(sigma2 > 0.0) || !mu.is_finite() {
            return f64::NEG_INFINITY;
        }
        let ln_s = sigma2.ln();
        let d = mu - self.mu0;
        self.alpha * self.beta.ln() - ln_gamma(self.alpha) - (self.alpha + 1.0) * ln_s
            - self.beta / sigma2
            - 0.5 * (LN_2PI + ln_s)
            - d * d / (2.0 * sigma2)
    }

    /// Prior mean of sigma2; finite only when `alpha > 1`.
    pub fn sigma2_mean(&self) -> f64 {
        if self.alpha > 1.0 {
            self.beta / (self.alpha - 1.0)
        } else {
            f64::INFINITY
        }
    }

    pub fn sample(&self, rng: &mut RngHandle) -> (f64, f64) {
        let precision = sample_gamma(self.alpha, self.beta, rng).expect("validated params");
        let sigma2 = 1.0 / precision;
        let mu = sample_normal(self.mu0, sigma2, rng).expect("positive variance");
        (mu, sigma2)
    }
}

/// Nearest lattice point `i * h`, ties to even `i`.
pub fn discretize(x: f64, h: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("value to discretize"));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("bin width must be > 0, got {h}")));
    }
    Ok((x / h).round_ties_even() * h)
}

/// A normal distribution binned onto the lattice `{i * h}`: lattice point
/// `i * h` carries the normal mass of `[(2i - 1)h/2, (2i + 1)h/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizedNormal {
    pub mean: f64,
    pub variance: f64,
    pub bin_width: f64,
}

impl DiscretizedNormal {
    pub fn new(mean: f64, variance: f64, bin_width: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "base normal needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        if !(bin_width > 0.0) || !bin_width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bin width must be > 0, got {bin_width}"
            )));
        }
        Ok(Self {
            mean,
            variance,
            bin_width,
        })
    }

    pub fn sample(&self, rng: &mut RngHandle) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        let x = self.mean + self.variance.sqrt() * z;
        (x / self.bin_width).round_ties_even() * self.bin_width
    }

    /// Probability of lattice point `i * h`.
    pub fn point_mass(&self, i: i64) -> f64 {
        let sd = self.variance.sqrt();
        let h = self.bin_width;
        let lo = ((i as f64 - 0.5) * h - self.mean) / sd;
        let hi = ((i as f64 + 0.5) * h - self.mean) / sd;
        std_normal_cdf(hi) - std_normal_cdf(lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_degenerate_and_invalid() {
        let mut rng = RngHandle::new(1);
        assert_eq!(sample_normal(5.0, 0.0, &mut rng).unwrap(), 5.0);
        assert!(sample_normal(0.0, -1.0, &mut rng).is_err());
    }

    #[test]
    fn normal_mean_lln() {
        let mut rng = RngHandle::new(2);
        let n = 100_000;
        let m: f64 = (0..n).map(|_| sample_normal(3.5, 4.0, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((m - 3.5).abs() < 0.02, "{m}");
    }

    #[test]
    fn gamma_mean_shape_over_rate() {
        let mut rng = RngHandle::new(3);
        let n = 100_000;
        let m: f64 = (0..n)
            .map(|_| sample_gamma(6.623, 60.442, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((m - 0.1096).abs() < 0.002, "{m}");
        assert!(sample_gamma(-1.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn bernoulli_degenerate() {
        let mut rng = RngHandle::new(4);
        assert!(!sample_bernoulli(0.0, &mut rng).unwrap());
        assert!(sample_bernoulli(1.0, &mut rng).unwrap());
        assert!(sample_bernoulli(1.5, &mut rng).is_err());
    }

    #[test]
    fn dirichlet_cases() {
        let mut rng = RngHandle::new(5);
        assert_eq!(sample_dirichlet(&[1.0], &mut rng).unwrap(), vec![1.0]);
        assert!(sample_dirichlet(&[], &mut rng).is_err());
        assert!(sample_dirichlet(&[1.0, 0.0], &mut rng).is_err());
        for _ in 0..100 {
            let w = sample_dirichlet(&[1e6, 1e6], &mut rng).unwrap();
            assert!(w.iter().all(|x| *x > 0.499 && *x < 0.501), "{w:?}");
        }
        let n = 100_000;
        let mut acc = [0.0; 3];
        for _ in 0..n {
            let w = sample_dirichlet(&[1.0, 1.0, 1.0], &mut rng).unwrap();
            for (a, x) in acc.iter_mut().zip(&w) {
                *a += x;
            }
        }
        for a in acc {
            assert!((a / n as f64 - 1.0 / 3.0).abs() < 0.005);
        }
    }

    #[test]
    fn dirichlet_tiny_concentration_stays_on_simplex() {
        let mut rng = RngHandle::new(6);
        for _ in 0..1000 {
            let w = sample_dirichlet(&[1e-6, 1.0, 1.0], &mut rng).unwrap();
            let s: f64 = w.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|x| *x >= 0.0 && x.is_finite()));
        }
    }

    #[test]
    fn nig_prior_moments() {
        let nig = NigParams::meanvar_default();
        assert!((nig.sigma2_mean() - 10.749).abs() < 1e-3);
        let mut rng = RngHandle::new(7);
        let n = 100_000;
        let m: f64 = (0..n).map(|_| nig.sample(&mut rng).1).sum::<f64>() / n as f64;
        assert!((m - 10.749).abs() < 0.15, "{m}");
        assert_eq!(nig.log_density(1.0, 0.0), f64::NEG_INFINITY);
        assert!(NigParams::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn nig_density_integrates_to_one() {
        // Midpoint rule over mu in [-20, 30], sigma2 in (0, 120].
        let nig = NigParams::meanvar_default();
        let (nm, ns) = (1000, 2400);
        let dm = 50.0 / nm as f64;
        let ds = 120.0 / ns as f64;
        let mut total = 0.0;
        for i in 0..nm {
            let mu = -20.0 + (i as f64 + 0.5) * dm;
            for j in 0..ns {
                let s = (j as f64 + 0.5) * ds;
                total += nig.log_density(mu, s).exp();
            }
        }
        total *= dm * ds;
        assert!((total - 1.0).abs() < 0.01, "{total}");
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn discretize_examples() {
        assert_eq!(discretize(0.4, 1.0).unwrap(), 0.0);
        assert!((discretize(3.1415926, 1e-5).unwrap() - 3.14159).abs() < 1e-12);
        assert_eq!(discretize(0.5, 1.0).unwrap(), 0.0);
        assert_eq!(discretize(1.5, 1.0).unwrap(), 2.0);
        assert!(discretize(f64::NAN, 1.0).is_err());
        assert!(discretize(1.0, 0.0).is_err());
    }

    #[test]
    fn discretized_normal_matches_bin_masses() {
        let base = DiscretizedNormal::new(0.0, 1.0, 0.5).unwrap();
        let mut rng = RngHandle::new(8);
        let n = 200_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            let x = base.sample(&mut rng);
            *counts.entry((x / 0.5).round() as i64).or_insert(0usize) += 1;
        }
        for i in -3..=3 {
            let p = base.point_mass(i);
            let f = *counts.get(&i).unwrap_or(&0) as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((f - p).abs() < 4.0 * se, "bin {i}: {f} vs {p}");
        }
    }

    #[test]
    fn expit_is_stable() {
        assert_eq!(expit(0.0), 0.5);
        assert!(expit(800.0) <= 1.0 && expit(-800.0) >= 0.0);
        assert!((std_normal_cdf(1.959964) - 0.975).abs() < 1e-6);
    }
}
