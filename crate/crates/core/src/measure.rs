//! Finitely supported random probability measures.
//!
//! Dirichlet process draws use truncated stick-breaking: sticks
//! `Beta(1, concentration)` are broken until the accumulated weight reaches
//! `1 - truncation`, and the weights are then renormalized. Posterior draws
//! use the conjugate split
//!
//! ```text
//! F | data = V * P + (1 - V) * sum_i W_i delta(x_i),
//!     (V, W_1, ..., W_n) ~ Dirichlet(phi, 1, ..., 1),  P ~ DP(phi, G0)
//! ```
//!
//! which has the same law as a stick-breaking draw from
//! `DP(phi + n, (phi G0 + sum_i delta(x_i)) / (phi + n))` but costs `O(n)`
//! instead of `O((phi + n) log(1 / truncation))` per draw. The literal
//! stick-breaking sampler is kept as [`sample_dp_posterior_stick_breaking`].

use crate::error::{Error, Result};
use crate::prob::{
    fix_simplex_sum, normalize_log_weights, sample_beta_one, sample_flat_dirichlet,
    sample_ln_gamma_unit, DiscretizedNormal,
};
use crate::rng::RngHandle;

const WEIGHT_SUM_TOL: f64 = 1e-10;

/// Types that can serve as atoms of a measure.
pub trait Atom: Clone + std::fmt::Debug + Send + Sync {
    fn is_finite(&self) -> bool;
}

impl Atom for f64 {
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// One record of a missing-at-random study: covariate `x`, response
/// indicator `c`, and `cy = c * y` (zero whenever the response is missing).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarPoint {
    pub x: f64,
    pub c: bool,
    pub cy: f64,
}

impl MarPoint {
    pub fn observed(x: f64, y: f64) -> Self {
        Self { x, c: true, cy: y }
    }

    pub fn missing(x: f64) -> Self {
        Self {
            x,
            c: false,
            cy: 0.0,
        }
    }
}

impl Atom for MarPoint {
    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.cy.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<A> {
    atoms: Vec<A>,
    weights: Vec<f64>,
}

impl<A: Atom> DiscreteMeasure<A> {
    /// Build a measure; weights must be nonnegative and sum to one within 1e-10.
    pub fn new(atoms: Vec<A>, weights: Vec<f64>) -> Result<Self> {
        Self::check_shape(&atoms, &weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "weights must sum to 1, got {total}"
            )));
        }
        Ok(Self { atoms, weights })
    }

    /// Build a measure from nonnegative weights with positive total.
    pub fn from_unnormalized(atoms: Vec<A>, mut weights: Vec<f64>) -> Result<Self> {
        Self::check_shape(&atoms, &weights)?;
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "total weight must be positive and finite, got {total}"
            )));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        fix_simplex_sum(&mut weights);
        Ok(Self { atoms, weights })
    }

    /// Equal weights on the given atoms (the empirical distribution).
    pub fn empirical(atoms: Vec<A>) -> Result<Self> {
        let n = atoms.len();
        Self::from_unnormalized(atoms, vec![1.0; n])
    }

    pub fn point_mass(atom: A) -> Result<Self> {
        Self::new(vec![atom], vec![1.0])
    }

    fn check_shape(atoms: &[A], weights: &[f64]) -> Result<()> {
        if atoms.is_empty() {
            return Err(Error::EmptyInput("measure atoms"));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("weights must be finite and >= 0".into()));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("measure atom"));
        }
        Ok(())
    }

    pub fn atoms(&self) -> &[A] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&A, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }
}

/// A base distribution for a Dirichlet process.
pub trait BaseMeasure: Send + Sync {
    type Atom: Atom;
    fn sample(&self, rng: &mut RngHandle) -> Self::Atom;
}

impl BaseMeasure for DiscretizedNormal {
    type Atom = f64;
    fn sample(&self, rng: &mut RngHandle) -> f64 {
        DiscretizedNormal::sample(self, rng)
    }
}

/// Product base on (x, c, cy): `x` from a discretized normal, `c` Bernoulli,
/// `cy` from a discretized normal when `c = 1` and exactly 0 otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarBase {
    pub x: DiscretizedNormal,
    pub p_observed: f64,
    pub cy: DiscretizedNormal,
}

impl MarBase {
    pub fn new(x: DiscretizedNormal, p_observed: f64, cy: DiscretizedNormal) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_observed) {
            return Err(Error::InvalidParameter(format!(
                "observation probability must be in [0, 1], got {p_observed}"
            )));
        }
        Ok(Self { x, p_observed, cy })
    }

    /// x ~ N(10, 1), c ~ Bernoulli(0.2), cy | c=1 ~ N(0, 50^2), lattice 1e-4.
    pub fn mar_default() -> Self {
        let h = 1e-4;
        Self {
            x: DiscretizedNormal::new(10.0, 1.0, h).expect("valid"),
            p_observed: 0.2,
            cy: DiscretizedNormal::new(0.0, 2500.0, h).expect("valid"),
        }
    }
}

impl BaseMeasure for MarBase {
    type Atom = MarPoint;
    fn sample(&self, rng: &mut RngHandle) -> MarPoint {
        let x = self.x.sample(rng);
        if rng.uniform_open() < self.p_observed {
            MarPoint {
                x,
                c: true,
                cy: self.cy.sample(rng),
            }
        } else {
            MarPoint::missing(x)
        }
    }
}

/// Dirichlet process specification.
#[derive(Debug, Clone, PartialEq)]
pub struct DpSpec<B> {
    pub concentration: f64,
    pub base: B,
    pub truncation: f64,
}

impl<B: BaseMeasure> DpSpec<B> {
    pub fn new(concentration: f64, base: B, truncation: f64) -> Result<Self> {
        if !(concentration > 0.0) || !concentration.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "concentration must be > 0, got {concentration}"
            )));
        }
        if !(truncation > 0.0 && truncation <= 0.01) {
            return Err(Error::InvalidParameter(format!(
                "truncation must lie in (0, 0.01], got {truncation}"
            )));
        }
        Ok(Self {
            concentration,
            base,
            truncation,
        })
    }

    pub fn with_default_truncation(concentration: f64, base: B) -> Result<Self> {
        Self::new(concentration, base, 1e-8)
    }
}

/// Stick weights from `Beta(1, concentration)` breaks, stopped once the
/// accumulated weight reaches `1 - truncation`. Returns the raw (not yet
/// renormalized) weights and their total.
pub fn stick_weights(concentration: f64, truncation: f64, rng: &mut RngHandle) -> (Vec<f64>, f64) {
    let mut weights = Vec::new();
    let mut remaining = 1.0_f64;
    while 1.0 - remaining < 1.0 - truncation {
        let v = sample_beta_one(concentration, rng);
        weights.push(remaining * v);
        remaining *= 1.0 - v;
    }
    let total = weights.iter().sum();
    (weights, total)
}

/// Smallest stick count `K` with `(phi / (phi + 1))^K < truncation`, the
/// count at which the expected residual mass drops below the truncation.
pub fn expected_stick_count(concentration: f64, truncation: f64) -> usize {
    let r = concentration / (concentration + 1.0);
    (truncation.ln() / r.ln()).ceil() as usize
}

/// Draw `F ~ DP(concentration, base)`.
pub fn sample_dp_prior<B: BaseMeasure>(spec: &DpSpec<B>, rng: &mut RngHandle) -> DiscreteMeasure<B::Atom> {
    let (mut weights, total) = stick_weights(spec.concentration, spec.truncation, rng);
    let atoms: Vec<B::Atom> = (0..weights.len()).map(|_| spec.base.sample(rng)).collect();
    weights.iter_mut().for_each(|w| *w /= total);
    fix_simplex_sum(&mut weights);
    DiscreteMeasure { atoms, weights }
}

/// Draw `F ~ DP(phi + n, (phi G0 + sum delta(x_i)) / (phi + n))` via the
/// conjugate split. An empty data set reduces to [`sample_dp_prior`].
pub fn sample_dp_posterior<B: BaseMeasure>(
    spec: &DpSpec<B>,
    data: &[B::Atom],
    rng: &mut RngHandle,
) -> DiscreteMeasure<B::Atom> {
    if data.is_empty() {
        return sample_dp_prior(spec, rng);
    }
    let n = data.len();
    // (V, W_1..W_n) ~ Dirichlet(phi, 1, ..., 1), drawn in log space so tiny phi is safe.
    let ln_prior_part = sample_ln_gamma_unit(spec.concentration, rng);
    let exps = sample_flat_dirichlet(n, rng).expect("n > 0");
    // exps is normalized; rescale by an independent Gamma(n) total.
    let ln_data_total = sample_ln_gamma_unit(n as f64, rng);
    let split = normalize_log_weights(&[ln_prior_part, ln_data_total]);
    let (v, rest) = (split[0], split[1]);

    let prior = sample_dp_prior(spec, rng);
    let mut atoms = Vec::with_capacity(n + prior.len());
    let mut weights = Vec::with_capacity(n + prior.len());
    atoms.extend_from_slice(data);
    weights.extend(exps.iter().map(|w| w * rest));
    atoms.extend(prior.atoms);
    weights.extend(prior.weights.iter().map(|w| w * v));
    fix_simplex_sum(&mut weights);
    DiscreteMeasure { atoms, weights }
}

/// Literal truncated stick-breaking draw from the DP posterior: concentration
/// `phi + n`, each atom from the base with probability `phi / (phi + n)` and
/// otherwise a uniformly chosen datum.
pub fn sample_dp_posterior_stick_breaking<B: BaseMeasure>(
    spec: &DpSpec<B>,
    data: &[B::Atom],
    rng: &mut RngHandle,
) -> DiscreteMeasure<B::Atom> {
    if data.is_empty() {
        return sample_dp_prior(spec, rng);
    }
    let n = data.len();
    let total_conc = spec.concentration + n as f64;
    let p_base = spec.concentration / total_conc;
    let (mut weights, total) = stick_weights(total_conc, spec.truncation, rng);
    let atoms: Vec<B::Atom> = (0..weights.len())
        .map(|_| {
            if rng.uniform_open() < p_base {
                spec.base.sample(rng)
            } else {
                data[rng.index(n)].clone()
            }
        })
        .collect();
    weights.iter_mut().for_each(|w| *w /= total);
    fix_simplex_sum(&mut weights);
    DiscreteMeasure { atoms, weights }
}

/// Bayesian bootstrap: the data as atoms with `Dirichlet(1, ..., 1)` weights.
pub fn bayesian_bootstrap_draw<A: Atom>(data: &[A], rng: &mut RngHandle) -> Result<DiscreteMeasure<A>> {
    if data.is_empty() {
        return Err(Error::EmptyInput("bayesian bootstrap data"));
    }
    let weights = sample_flat_dirichlet(data.len(), rng)?;
    Ok(DiscreteMeasure {
        atoms: data.to_vec(),
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(f: &DiscreteMeasure<f64>) -> f64 {
        f.iter().map(|(x, w)| x * w).sum()
    }

    fn check_invariants<A: Atom>(f: &DiscreteMeasure<A>) {
        let s: f64 = f.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-10, "sum {s}");
        assert!(f.weights().iter().all(|w| *w >= 0.0));
        assert!(f.atoms().iter().all(|a| a.is_finite()));
        assert!(!f.is_empty());
    }

    fn normal_spec() -> DpSpec<DiscretizedNormal> {
        DpSpec::with_default_truncation(0.5, DiscretizedNormal::new(0.0, 100.0, 1e-5).unwrap()).unwrap()
    }

    #[test]
    fn measure_validation() {
        assert!(DiscreteMeasure::<f64>::new(vec![], vec![]).is_err());
        assert!(DiscreteMeasure::new(vec![1.0, 2.0], vec![0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::new(vec![f64::NAN], vec![1.0]).is_err());
        assert!(DiscreteMeasure::new(vec![1.0, 2.0], vec![1.5, -0.5]).is_err());
        assert!(DiscreteMeasure::from_unnormalized(vec![1.0], vec![0.0]).is_err());
        let f = DiscreteMeasure::from_unnormalized(vec![1.0, 2.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(f.weights(), &[0.25, 0.75]);
    }

    #[test]
    fn spec_validation() {
        let base = DiscretizedNormal::new(0.0, 1.0, 1e-5).unwrap();
        assert!(DpSpec::new(0.0, base, 1e-8).is_err());
        assert!(DpSpec::new(1.0, base, 0.5).is_err());
        assert!(DpSpec::new(1.0, base, 0.01).is_ok());
    }

    #[test]
    fn expected_sticks_for_default_settings() {
        assert_eq!(expected_stick_count(0.5, 1e-8), 17);
    }

    #[test]
    fn truncation_mass_bound() {
        let mut rng = RngHandle::new(11);
        for _ in 0..2000 {
            let (_, total) = stick_weights(0.5, 1e-8, &mut rng);
            assert!(total >= 1.0 - 1e-8);
        }
        let (w, total) = stick_weights(20.5, 1e-4, &mut rng);
        assert!(total >= 1.0 - 1e-4 && w.len() > 10);
    }

    #[test]
    fn prior_draws_are_valid_and_centered() {
        let spec = normal_spec();
        let mut rng = RngHandle::new(12);
        let n = 10_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let f = sample_dp_prior(&spec, &mut rng);
            check_invariants(&f);
            acc += mean(&f);
        }
        // Var of the mean functional is 100 / 1.5, so SE ~ 0.08.
        assert!((acc / n as f64).abs() < 0.5);
    }

    #[test]
    fn posterior_with_empty_data_is_prior() {
        let spec = normal_spec();
        let a = sample_dp_posterior(&spec, &[], &mut RngHandle::new(5));
        let b = sample_dp_prior(&spec, &mut RngHandle::new(5));
        assert_eq!(a, b);
    }

    #[test]
    fn posterior_draws_valid_and_keep_data_atoms() {
        let spec = normal_spec();
        let data: Vec<f64> = (0..20).map(|i| i as f64 * 0.37).collect();
        let mut rng = RngHandle::new(13);
        for _ in 0..200 {
            let f = sample_dp_posterior(&spec, &data, &mut rng);
            check_invariants(&f);
            assert_eq!(&f.atoms()[..20], data.as_slice());
            let g = sample_dp_posterior_stick_breaking(&spec, &data, &mut rng);
            check_invariants(&g);
        }
    }

    #[test]
    fn mar_base_zeroes_missing_responses() {
        let spec = DpSpec::with_default_truncation(0.5, MarBase::mar_default()).unwrap();
        let mut rng = RngHandle::new(14);
        for _ in 0..500 {
            let f = sample_dp_prior(&spec, &mut rng);
            check_invariants(&f);
            for a in f.atoms() {
                if !a.c {
                    assert_eq!(a.cy, 0.0);
                }
            }
        }
    }

    #[test]
    fn bootstrap_basic_contracts() {
        let mut rng = RngHandle::new(15);
        assert!(bayesian_bootstrap_draw::<f64>(&[], &mut rng).is_err());
        let f = bayesian_bootstrap_draw(&[4.2], &mut rng).unwrap();
        assert_eq!(f.weights(), &[1.0]);
        let data = [1.0, 2.0, 3.0, 4.0];
        let reps = 20_000;
        let mut acc = [0.0; 4];
        for _ in 0..reps {
            let f = bayesian_bootstrap_draw(&data, &mut rng).unwrap();
            check_invariants(&f);
            for (a, w) in acc.iter_mut().zip(f.weights()) {
                *a += w;
            }
        }
        for a in acc {
            assert!((a / reps as f64 - 0.25).abs() < 0.01);
        }
    }
}
