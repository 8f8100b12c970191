//! Target functionals evaluated on discrete measures.
//!
//! The AIPW functional embeds two weighted estimating-equation solves: a
//! least-squares line on the observed (`c = 1`) sub-measure and a logistic
//! regression of `c` on `x` over the whole measure.

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, MarPoint};
use crate::prob::expit;

/// A functional value in one or two dimensions.
#[derive(Clone, Copy, PartialEq)]
pub struct Theta {
    values: [f64; 2],
    dim: usize,
}

impl Theta {
    pub fn scalar(x: f64) -> Self {
        Self {
            values: [x, 0.0],
            dim: 1,
        }
    }

    pub fn pair(a: f64, b: f64) -> Self {
        Self {
            values: [a, b],
            dim: 2,
        }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        match v {
            [a] => Ok(Self::scalar(*a)),
            [a, b] => Ok(Self::pair(*a, *b)),
            _ => Err(Error::InvalidParameter(format!(
                "theta must have dimension 1 or 2, got {}",
                v.len()
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }

    /// The single coordinate `k` as a one-dimensional value.
    pub fn margin(&self, k: usize) -> Theta {
        Theta::scalar(self[k])
    }
}

impl Index<usize> for Theta {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        assert!(i < self.dim, "theta index {i} out of range for dimension {}", self.dim);
        &self.values[i]
    }
}

impl fmt::Debug for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Theta{:?}", self.as_slice())
    }
}

/// Newton solver settings for the AIPW functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AipwSettings {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Bound on `|psi0 + psi1 x|` over the atoms.
    pub linear_predictor_cap: f64,
    pub propensity_floor: f64,
}

impl Default for AipwSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-9,
            linear_predictor_cap: 30.0,
            propensity_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalKind {
    Mean,
    Variance,
    /// (mu, sigma2)
    MeanVar,
    /// (mu, second raw moment)
    RawMoments2,
    Aipw(AipwSettings),
}

impl FunctionalKind {
    pub fn dim(&self) -> usize {
        match self {
            FunctionalKind::Mean | FunctionalKind::Variance | FunctionalKind::Aipw(_) => 1,
            FunctionalKind::MeanVar | FunctionalKind::RawMoments2 => 2,
        }
    }

    pub fn aipw() -> Self {
        FunctionalKind::Aipw(AipwSettings::default())
    }
}

/// Evaluation of a functional on measures with atoms of type `A`.
pub trait Functional<A> {
    fn evaluate(&self, f: &DiscreteMeasure<A>) -> Result<Theta>;
}

impl Functional<f64> for FunctionalKind {
    fn evaluate(&self, f: &DiscreteMeasure<f64>) -> Result<Theta> {
        match self {
            FunctionalKind::Mean => Ok(Theta::scalar(mean_var(f).0)),
            FunctionalKind::Variance => Ok(Theta::scalar(mean_var(f).1)),
            FunctionalKind::MeanVar => {
                let (m, v) = mean_var(f);
                Ok(Theta::pair(m, v))
            }
            FunctionalKind::RawMoments2 => {
                let (m, m2) = raw_moments2(f);
                Ok(Theta::pair(m, m2))
            }
            FunctionalKind::Aipw(_) => Err(Error::Unsupported(
                "AIPW needs (x, c, cy) observations".into(),
            )),
        }
    }
}

impl Functional<MarPoint> for FunctionalKind {
    fn evaluate(&self, f: &DiscreteMeasure<MarPoint>) -> Result<Theta> {
        match self {
            FunctionalKind::Aipw(settings) => Ok(Theta::scalar(aipw(f, settings)?.value)),
            other => Err(Error::Unsupported(format!(
                "{other:?} is defined for scalar observations only"
            ))),
        }
    }
}

/// Mean and variance `(sum w x, sum w (x - mu)^2)`.
pub fn mean_var(f: &DiscreteMeasure<f64>) -> (f64, f64) {
    let mu: f64 = f.iter().map(|(x, w)| w * x).sum();
    let var: f64 = f.iter().map(|(x, w)| w * (x - mu) * (x - mu)).sum();
    (mu, var.max(0.0))
}

/// First and second raw moments `(sum w x, sum w x^2)`.
pub fn raw_moments2(f: &DiscreteMeasure<f64>) -> (f64, f64) {
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (x, w) in f.iter() {
        m1 += w * x;
        m2 += w * x * x;
    }
    (m1, m2.max(m1 * m1))
}

/// Fitted line or logistic curve `intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    pub intercept: f64,
    pub slope: f64,
    pub converged: bool,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl RegressionFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Weighted logistic score `sum w (1, x) (c - expit(psi0 + psi1 x))`.
pub fn logistic_score(f: &DiscreteMeasure<MarPoint>, psi0: f64, psi1: f64) -> [f64; 2] {
    let mut s = [0.0; 2];
    for (a, w) in f.iter() {
        let r = if a.c { 1.0 } else { 0.0 } - expit(psi0 + psi1 * a.x);
        s[0] += w * r;
        s[1] += w * r * a.x;
    }
    s
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Solve the weighted logistic score equation for `(psi0, psi1)` by Newton's
/// method with step halving.
///
/// With no observed atoms there is nothing to fit and an error is returned.
/// When the score has no finite root (separation, including the case where
/// every atom is observed) the coefficients are scaled so that the largest
/// `|psi0 + psi1 x|` over the atoms equals the cap, and `converged` is false.
pub fn fit_weighted_logistic(f: &DiscreteMeasure<MarPoint>, settings: &AipwSettings) -> Result<RegressionFit> {
    let observed: f64 = f.iter().filter(|(a, _)| a.c).map(|(_, w)| w).sum();
    if observed <= 0.0 {
        return Err(Error::Degenerate("no observed responses in the measure".into()));
    }
    let cap = settings.linear_predictor_cap;
    if observed >= 1.0 || f.iter().all(|(a, w)| a.c || w == 0.0) {
        // Every atom observed: the intercept runs off to +infinity.
        let psi0 = cap;
        let s = logistic_score(f, psi0, 0.0);
        return Ok(RegressionFit {
            intercept: psi0,
            slope: 0.0,
            converged: false,
            residual_norm: norm2(s),
            iterations: 0,
        });
    }

    if x_spread(f) == 0.0 {
        return Err(Error::SingularDesign("all atoms share one covariate value".into()));
    }

    let eta_max = |p0: f64, p1: f64| {
        f.atoms()
            .iter()
            .fold(0.0_f64, |m, a| m.max((p0 + p1 * a.x).abs()))
    };
    let clamp = |p0: f64, p1: f64| {
        let m = eta_max(p0, p1);
        if m > cap {
            (p0 * cap / m, p1 * cap / m)
        } else {
            (p0, p1)
        }
    };

    // Start at the intercept-only solution.
    let p = observed.clamp(1e-12, 1.0 - 1e-12);
    let mut psi = [(p / (1.0 - p)).ln(), 0.0];
    let mut score = logistic_score(f, psi[0], psi[1]);
    let mut snorm = norm2(score);
    let mut iterations = 0;
    while iterations < settings.max_iterations {
        if snorm < settings.tolerance {
            return Ok(RegressionFit {
                intercept: psi[0],
                slope: psi[1],
                converged: true,
                residual_norm: snorm,
                iterations,
            });
        }
        iterations += 1;
        // Fisher information.
        let (mut i00, mut i01, mut i11) = (0.0, 0.0, 0.0);
        for (a, w) in f.iter() {
            let pr = expit(psi[0] + psi[1] * a.x);
            let v = w * pr * (1.0 - pr);
            i00 += v;
            i01 += v * a.x;
            i11 += v * a.x * a.x;
        }
        let det = i00 * i11 - i01 * i01;
        let scale = i00 * i11;
        if !(scale > 0.0) || !(det > 1e-14 * scale) {
            // Information has collapsed: fitted probabilities are saturated.
            let (p0, p1) = clamp(psi[0], psi[1]);
            return Ok(RegressionFit {
                intercept: p0,
                slope: p1,
                converged: false,
                residual_norm: norm2(logistic_score(f, p0, p1)),
                iterations,
            });
        }
        let step = [
            (i11 * score[0] - i01 * score[1]) / det,
            (i00 * score[1] - i01 * score[0]) / det,
        ];
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = [psi[0] + t * step[0], psi[1] + t * step[1]];
            let s = logistic_score(f, cand[0], cand[1]);
            let n = norm2(s);
            if n < snorm {
                psi = cand;
                score = s;
                snorm = n;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        if eta_max(psi[0], psi[1]) > cap {
            let (p0, p1) = clamp(psi[0], psi[1]);
            return Ok(RegressionFit {
                intercept: p0,
                slope: p1,
                converged: false,
                residual_norm: norm2(logistic_score(f, p0, p1)),
                iterations,
            });
        }
    }
    let converged = snorm < settings.tolerance;
    let (p0, p1) = if converged { (psi[0], psi[1]) } else { clamp(psi[0], psi[1]) };
    Ok(RegressionFit {
        intercept: p0,
        slope: p1,
        converged,
        residual_norm: norm2(logistic_score(f, p0, p1)),
        iterations,
    })
}

fn x_spread(f: &DiscreteMeasure<MarPoint>) -> f64 {
    let (lo, hi) = f
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, _)| (lo.min(a.x), hi.max(a.x)));
    hi - lo
}

/// Weighted least-squares line of `y` on `x` over the observed atoms, with
/// weights renormalized on that subset.
pub fn fit_weighted_linear(f: &DiscreteMeasure<MarPoint>) -> Result<RegressionFit> {
    let obs: Vec<(&MarPoint, f64)> = f.iter().filter(|(a, w)| a.c && *w > 0.0).collect();
    if obs.len() < 2 {
        return Err(Error::SingularDesign(format!(
            "need at least two observed atoms, got {}",
            obs.len()
        )));
    }
    let total: f64 = obs.iter().map(|(_, w)| w).sum();
    let xbar: f64 = obs.iter().map(|(a, w)| w * a.x).sum::<f64>() / total;
    let ybar: f64 = obs.iter().map(|(a, w)| w * a.cy).sum::<f64>() / total;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut scale = 0.0_f64;
    for (a, w) in &obs {
        let dx = a.x - xbar;
        sxx += w / total * dx * dx;
        sxy += w / total * dx * (a.cy - ybar);
        scale = scale.max(a.x.abs());
    }
    if !(sxx > 1e-24 * (1.0 + scale * scale)) {
        return Err(Error::SingularDesign("observed covariates are identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let mut r = [0.0; 2];
    for (a, w) in &obs {
        let e = a.cy - intercept - slope * a.x;
        r[0] += w / total * e;
        r[1] += w / total * e * (a.x - xbar);
    }
    Ok(RegressionFit {
        intercept,
        slope,
        converged: true,
        residual_norm: norm2(r),
        iterations: 1,
    })
}

/// AIPW value together with the fits that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AipwEstimate {
    pub value: f64,
    pub outcome: RegressionFit,
    pub propensity: RegressionFit,
    /// Number of observed atoms whose propensity was raised to the floor.
    pub floored: usize,
}

/// `E_F[ zeta(X) + C (Y - zeta(X)) / p(X) ]` with `zeta` and `p` fitted under `F`.
pub fn aipw(f: &DiscreteMeasure<MarPoint>, settings: &AipwSettings) -> Result<AipwEstimate> {
    let outcome = fit_weighted_linear(f)?;
    let propensity = fit_weighted_logistic(f, settings)?;
    let mut floored = 0;
    let mut value = 0.0;
    for (a, w) in f.iter() {
        let zeta = outcome.predict(a.x);
        let mut term = zeta;
        if a.c {
            let mut p = expit(propensity.predict(a.x));
            if p < settings.propensity_floor {
                p = settings.propensity_floor;
                floored += 1;
            }
            term += (a.cy - zeta) / p;
        }
        value += w * term;
    }
    Ok(AipwEstimate {
        value,
        outcome,
        propensity,
        floored,
    })
}
