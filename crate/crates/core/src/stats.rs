//! Small summary statistics shared by the samplers, the harness and tests.

/// Mean and standard error of the mean.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

/// Lag-`k` sample autocorrelation.
pub fn autocorrelation(v: &[f64], k: usize) -> f64 {
    let n = v.len();
    let m = v.iter().sum::<f64>() / n as f64;
    let c0: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    let ck: f64 = (0..n - k).map(|i| (v[i] - m) * (v[i + k] - m)).sum();
    ck / c0
}

/// Effective sample size of a stationary chain from the initial positive
/// sequence of autocorrelations.
pub fn effective_sample_size(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 4 {
        return n as f64;
    }
    let mut tau = 1.0;
    let max_lag = (n / 2).min(1000);
    let mut k = 1;
    while k + 1 < max_lag {
        let pair = autocorrelation(v, k) + autocorrelation(v, k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    n as f64 / tau
}

/// Monte Carlo standard error of a chain mean, accounting for autocorrelation.
pub fn chain_mean_se(v: &[f64]) -> (f64, f64) {
    let (m, _) = mean_se(v);
    let ess = effective_sample_size(v).max(1.0);
    (m, (variance(v) / ess).sqrt())
}

/// Kolmogorov-Smirnov distance between the empirical law of `v` and `cdf`.
pub fn ks_distance(v: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let w = vec![1.0 / v.len() as f64; v.len()];
    weighted_ks_distance(v, &w, cdf)
}

/// KS distance for a weighted empirical law (weights summing to one).
pub fn weighted_ks_distance(v: &[f64], weights: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut acc = 0.0;
    let mut d: f64 = 0.0;
    for i in idx {
        let f = cdf(v[i]);
        d = d.max((f - acc).abs());
        acc += weights[i];
        d = d.max((acc - f).abs());
    }
    d
}

/// Two-sample KS distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(|p, q| p.total_cmp(q));
    y.sort_by(|p, q| p.total_cmp(q));
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / x.len() as f64 - j as f64 / y.len() as f64).abs());
    }
    d
}

/// Asymptotic KS critical value `c(alpha) / sqrt(n_eff)`.
pub fn ks_critical(alpha: f64, n_eff: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / n_eff.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_exact_grid_is_small() {
        let n = 1000;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!(ks_distance(&v, |x| x.clamp(0.0, 1.0)) <= 0.5 / n as f64 + 1e-12);
        assert!(ks_two_sample(&v, &v) == 0.0);
    }

    #[test]
    fn autocorrelation_of_alternating_series() {
        let v: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((autocorrelation(&v, 1) + 0.99).abs() < 0.02);
    }

    #[test]
    fn critical_value() {
        assert!((ks_critical(0.05, 1.0) - 1.358).abs() < 1e-3);
    }
}
