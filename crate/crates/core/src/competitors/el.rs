//! Profile empirical likelihood for `(mu, sigma2)`.
//!
//! The constrained problem `max sum log(n w_i)` subject to
//! `sum w_i g_i = 0`, `g_i = (x_i - mu, (x_i - mu)^2 - sigma2)`, is solved in
//! its dual: minimize `-sum log*(1 + lambda' g_i)` over `lambda`, where
//! `log*` is `log` above `1/n` and its second-order Taylor extension below.
//! The extension makes the dual finite everywhere, so Newton's method can
//! start from `lambda = 0` without a feasibility search. When 0 lies outside
//! the convex hull of the `g_i` the dual is unbounded below and the solve
//! either diverges, ends with some `1 + lambda' g_i < 1/n`, or stalls at a
//! huge `lambda` whose implied weights do not sum to one; all are reported
//! as `log R = -inf`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ElSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElSolveResult {
    /// `log prod(n w_i)`; zero at the sample moments, `-inf` outside the hull.
    pub log_r: f64,
    pub lambda: [f64; 2],
    pub in_hull: bool,
    pub iterations: usize,
}

impl ElSolveResult {
    fn outside(lambda: [f64; 2], iterations: usize) -> Self {
        Self {
            log_r: f64::NEG_INFINITY,
            lambda,
            in_hull: false,
            iterations,
        }
    }
}

/// `log*` and its first two derivatives.
#[inline]
fn log_star(z: f64, eps: f64) -> (f64, f64, f64) {
    if z >= eps {
        (z.ln(), 1.0 / z, -1.0 / (z * z))
    } else {
        let r = z / eps;
        (
            eps.ln() - 1.5 + 2.0 * r - 0.5 * r * r,
            (2.0 - r) / eps,
            -1.0 / (eps * eps),
        )
    }
}

pub fn profile_el(data: &[f64], mu: f64, sigma2: f64) -> Result<ElSolveResult> {
    profile_el_with(data, mu, sigma2, &ElSettings::default())
}

pub fn profile_el_with(data: &[f64], mu: f64, sigma2: f64, settings: &ElSettings) -> Result<ElSolveResult> {
    let n = data.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    if !mu.is_finite() || !sigma2.is_finite() {
        return Err(Error::NonFinite("empirical likelihood parameter"));
    }
    let g: Vec<[f64; 2]> = data
        .iter()
        .map(|x| {
            let d = x - mu;
            [d, d * d - sigma2]
        })
        .collect();
    // Each constraint needs values of both signs for a positive-weight solution.
    for k in 0..2 {
        let (lo, hi) = g
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[k]), hi.max(v[k])));
        if !(lo < 0.0 && hi > 0.0) {
            return Ok(ElSolveResult::outside([0.0, 0.0], 0));
        }
    }

    let nf = n as f64;
    // The solution is invariant to rescaling each constraint, so scale both
    // to unit root mean square; the gradient tolerance is then unitless.
    let mut g = g;
    let mut rms = [0.0; 2];
    for k in 0..2 {
        rms[k] = (g.iter().map(|v| v[k] * v[k]).sum::<f64>() / nf).sqrt();
        g.iter_mut().for_each(|v| v[k] /= rms[k]);
    }
    let unscale = |l: [f64; 2]| [l[0] / rms[0], l[1] / rms[1]];
    let eps = 1.0 / nf;
    let objective = |lam: [f64; 2]| -> f64 {
        -g.iter()
            .map(|v| log_star(1.0 + lam[0] * v[0] + lam[1] * v[1], eps).0)
            .sum::<f64>()
            / nf
    };

    let mut lam = [0.0_f64; 2];
    let mut f = objective(lam);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < settings.max_iterations {
        // Gradient and Hessian of the mean dual objective.
        let mut grad = [0.0; 2];
        let mut h = [0.0; 3];
        for v in &g {
            let z = 1.0 + lam[0] * v[0] + lam[1] * v[1];
            let (_, d1, d2) = log_star(z, eps);
            grad[0] -= d1 * v[0];
            grad[1] -= d1 * v[1];
            h[0] -= d2 * v[0] * v[0];
            h[1] -= d2 * v[0] * v[1];
            h[2] -= d2 * v[1] * v[1];
        }
        grad[0] /= nf;
        grad[1] /= nf;
        h.iter_mut().for_each(|x| *x /= nf);
        if grad[0].hypot(grad[1]) < settings.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let det = h[0] * h[2] - h[1] * h[1];
        if !(det > 0.0) {
            return Ok(ElSolveResult::outside(unscale(lam), iterations));
        }
        let step = [
            -(h[2] * grad[0] - h[1] * grad[1]) / det,
            -(h[0] * grad[1] - h[1] * grad[0]) / det,
        ];
        let slope = grad[0] * step[0] + grad[1] * step[1];
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand = [lam[0] + t * step[0], lam[1] + t * step[1]];
            let fc = objective(cand);
            if fc <= f + 1e-4 * t * slope {
                lam = cand;
                f = fc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved || !lam[0].is_finite() || !lam[1].is_finite() {
            break;
        }
    }
    if !converged {
        return Ok(ElSolveResult::outside(unscale(lam), iterations));
    }
    let mut log_r = 0.0;
    let mut mass = 0.0;
    for v in &g {
        let z = 1.0 + lam[0] * v[0] + lam[1] * v[1];
        // Implied weights 1 / (n z) must not exceed one.
        if z < eps * (1.0 - 1e-8) {
            return Ok(ElSolveResult::outside(unscale(lam), iterations));
        }
        log_r -= z.ln();
        mass += eps / z;
    }
    // Off the hull the dual drifts to a huge lambda where the gradient is
    // small too; the implied weights then no longer sum to one.
    if (mass - 1.0).abs() > 1e-6 {
        return Ok(ElSolveResult::outside(unscale(lam), iterations));
    }
    Ok(ElSolveResult {
        log_r: log_r.min(0.0),
        lambda: unscale(lam),
        in_hull: true,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::sample_normal;
    use crate::rng::RngHandle;

    #[test]
    fn sample_moments_give_zero() {
        let x = [1.0, 2.5, 3.0, 7.0, -1.0];
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / n;
        let r = profile_el(&x, m, v).unwrap();
        assert!(r.in_hull);
        assert!(r.log_r.abs() < 1e-12);
        assert!(r.lambda[0].abs() < 1e-9 && r.lambda[1].abs() < 1e-9);
    }

    #[test]
    fn mean_outside_range_is_outside_hull() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let r = profile_el(&x, 5.0, 1.0).unwrap();
        assert!(!r.in_hull && r.log_r == f64::NEG_INFINITY);
        let r = profile_el(&x, 2.5, 100.0).unwrap();
        assert!(!r.in_hull);
    }

    #[test]
    fn needs_three_points() {
        assert!(profile_el(&[1.0, 2.0], 1.5, 0.25).is_err());
    }

    #[test]
    fn log_r_never_positive() {
        let mut rng = RngHandle::new(9);
        let x: Vec<f64> = (0..25).map(|_| sample_normal(0.0, 1.0, &mut rng).unwrap()).collect();
        for i in 0..30 {
            for j in 0..30 {
                let mu = -1.0 + i as f64 / 15.0;
                let s2 = 0.2 + j as f64 / 10.0;
                let r = profile_el(&x, mu, s2).unwrap();
                assert!(r.log_r <= 0.0);
                assert_eq!(r.in_hull, r.log_r > f64::NEG_INFINITY);
            }
        }
    }
}
