//! Theta-augmented posterior sampling.
//!
//! The augmented model reweights a Dirichlet process proposal model by
//! `m(theta) = p(theta) / q(theta)`, where `p` is the subjective prior on the
//! functional and `q` the density the proposal induces on it. The posterior
//! of `theta` is then proportional to `m(theta) * q(theta | data)`, so an
//! independence Metropolis-Hastings chain that proposes `F' ~ Pi(. | data)`
//! accepts with probability `min(1, m(theta') / m(theta))`. Only `theta`
//! values are ever stored.
//!
//! `q` has no closed form here; it is replaced by a kernel estimate fitted to
//! functional values of prior draws.

use nalgebra::{DMatrix, DVector};

use crate::density::{BandwidthRule, Coordinates, DensityModel};
use crate::error::{Error, Result};
use crate::functionals::{Functional, FunctionalKind, Theta};
use crate::measure::{sample_dp_posterior, sample_dp_prior, BaseMeasure, DpSpec};
use crate::posterior::{ChainDiagnostics, ChainSettings, Method, PosteriorSamples};
use crate::prior::LogDensity;
use crate::rng::RngHandle;

/// Initial-state attempts before a chain gives up.
const MAX_INITIAL_DRAWS: usize = 100;

/// Which coordinates the weighting function acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightingMode {
    /// `m = p(theta) / q(theta)` on the full vector.
    Joint,
    /// `m = p_k(theta_k) / q_k(theta_k)` on coordinate `k` only; the other
    /// coordinates keep the law the proposal model gives them given `theta_k`.
    SingleMargin(usize),
}

pub struct TaModelSpec<B, P> {
    pub proposal: DpSpec<B>,
    pub functional: FunctionalKind,
    pub prior: P,
    pub weighting: WeightingMode,
    pub prior_draws_for_q: usize,
    pub coordinates: Coordinates,
    pub bandwidth: BandwidthRule,
}

impl<B, P> TaModelSpec<B, P>
where
    B: BaseMeasure,
    P: LogDensity,
    FunctionalKind: Functional<B::Atom>,
{
    /// Spec with joint weighting, 5e4 prior draws for `q`, Silverman
    /// bandwidths, and `(mu, log sigma2)` coordinates for two-dimensional
    /// functionals.
    pub fn new(proposal: DpSpec<B>, functional: FunctionalKind, prior: P) -> Result<Self> {
        let coordinates = if functional.dim() == 2 {
            Coordinates::LogSecond
        } else {
            Coordinates::Identity
        };
        let spec = Self {
            proposal,
            functional,
            prior,
            weighting: WeightingMode::Joint,
            prior_draws_for_q: 50_000,
            coordinates,
            bandwidth: BandwidthRule::Silverman,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let weighted_dim = match self.weighting {
            WeightingMode::Joint => self.functional.dim(),
            WeightingMode::SingleMargin(k) => {
                if k >= self.functional.dim() {
                    return Err(Error::InvalidParameter(format!(
                        "margin {k} out of range for a {}-dimensional functional",
                        self.functional.dim()
                    )));
                }
                1
            }
        };
        if self.prior.dim() != weighted_dim {
            return Err(Error::InvalidParameter(format!(
                "prior has dimension {}, weighting acts on {weighted_dim}",
                self.prior.dim()
            )));
        }
        if weighted_dim == 1 && self.coordinates == Coordinates::LogSecond {
            return Err(Error::InvalidParameter(
                "log-second coordinates need a two-dimensional weighting".into(),
            ));
        }
        Ok(())
    }

    /// The part of `theta` the weighting function sees.
    pub fn weighted_part(&self, theta: &Theta) -> Theta {
        match self.weighting {
            WeightingMode::Joint => *theta,
            WeightingMode::SingleMargin(k) => theta.margin(k),
        }
    }

    /// `log p - log q` at `theta`; `-inf` where the prior vanishes.
    pub fn log_weight(&self, q_prior: &DensityModel, theta: &Theta) -> f64 {
        let t = self.weighted_part(theta);
        let lp = self.prior.log_density(&t);
        if lp == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let lq = LogDensity::log_density(q_prior, &t);
        if lq == f64::NEG_INFINITY {
            // q estimated as zero where p is positive; treat as a finite huge weight.
            return f64::MAX.ln();
        }
        lp - lq
    }

    fn functional_of_prior_draw(&self, rng: &mut RngHandle) -> Result<Theta> {
        let f = sample_dp_prior(&self.proposal, rng);
        self.functional.evaluate(&f)
    }
}

/// Kernel estimate of the proposal-induced prior density of the functional.
#[derive(Debug, Clone)]
pub struct PriorQ {
    pub density: DensityModel,
    /// Weighted-part values of the usable prior draws.
    pub draws: Vec<Theta>,
    /// Draws whose functional could not be evaluated.
    pub unusable: usize,
}

/// Fit `q` by KDE over functional values of `prior_draws_for_q` independent
/// draws `F ~ DP(phi, G0)`. Draws whose functional fails are discarded and
/// counted; more than half failing is an error. The estimate is tabulated,
/// since a chain evaluates it once per step.
pub fn estimate_prior_q<B, P>(spec: &TaModelSpec<B, P>, rng: &mut RngHandle) -> Result<PriorQ>
where
    B: BaseMeasure,
    P: LogDensity,
    FunctionalKind: Functional<B::Atom>,
{
    spec.validate()?;
    let total = spec.prior_draws_for_q;
    let mut draws = Vec::with_capacity(total);
    let mut unusable = 0;
    for _ in 0..total {
        match spec.functional_of_prior_draw(rng) {
            Ok(t) if t.is_finite() && in_domain(spec.coordinates, &spec.weighted_part(&t)) => {
                draws.push(spec.weighted_part(&t))
            }
            _ => unusable += 1,
        }
    }
    if 2 * unusable > total {
        return Err(Error::TooManyUnusable { unusable, total });
    }
    let mut density = DensityModel::fit(&draws, spec.bandwidth, spec.coordinates)?;
    density.tabulate(if density.dim() == 1 { 8192 } else { 2048 })?;
    Ok(PriorQ {
        density,
        draws,
        unusable,
    })
}

fn in_domain(coords: Coordinates, t: &Theta) -> bool {
    match coords {
        Coordinates::Identity => true,
        Coordinates::LogSecond => t[1] > 0.0,
    }
}

/// Self-normalized importance weights `p / q` for prior functional draws.
/// Under these weights the draws represent the augmented model's prior.
pub fn prior_reweighting<B, P>(spec: &TaModelSpec<B, P>, q_prior: &DensityModel, draws: &[Theta]) -> Vec<f64>
where
    B: BaseMeasure,
    P: LogDensity,
    FunctionalKind: Functional<B::Atom>,
{
    let logs: Vec<f64> = draws.iter().map(|t| spec.log_weight(q_prior, t)).collect();
    crate::prob::normalize_log_weights(&logs)
}

/// Independence Metropolis-Hastings over `theta` with proposals
/// `F' ~ DP posterior` and acceptance ratio `m(theta') / m(theta)`.
///
/// A proposal whose functional cannot be evaluated is a rejected step. The
/// initial state is redrawn up to 100 times. A chain that never accepts is
/// reported as an error.
pub fn ta_posterior_mh<B, P>(
    spec: &TaModelSpec<B, P>,
    data: &[B::Atom],
    q_prior: &DensityModel,
    chain: &ChainSettings,
    rng: &mut RngHandle,
) -> Result<PosteriorSamples>
where
    B: BaseMeasure,
    P: LogDensity,
    FunctionalKind: Functional<B::Atom>,
{
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("posterior data"));
    }
    ChainSettings::new(chain.length, chain.burn_in)?;
    let seed = rng.seed();

    let mut current = None;
    for _ in 0..MAX_INITIAL_DRAWS {
        let f = sample_dp_posterior(&spec.proposal, data, rng);
        if let Ok(t) = spec.functional.evaluate(&f) {
            let lw = spec.log_weight(q_prior, &t);
            if t.is_finite() && lw > f64::NEG_INFINITY {
                current = Some((t, lw));
                break;
            }
        }
    }
    let (mut theta, mut lw) = current.ok_or_else(|| {
        Error::ChainFailure(format!(
            "no usable initial state in {MAX_INITIAL_DRAWS} posterior draws"
        ))
    })?;

    let mut draws = Vec::with_capacity(chain.kept());
    let mut accepted_flags = Vec::with_capacity(chain.kept());
    let mut accepted = 0usize;
    let mut failures = 0usize;
    let mut max_log_weight = lw;
    for step in 0..chain.length {
        let f = sample_dp_posterior(&spec.proposal, data, rng);
        let mut moved = false;
        match spec.functional.evaluate(&f) {
            Ok(t) if t.is_finite() => {
                let lw_new = spec.log_weight(q_prior, &t);
                max_log_weight = max_log_weight.max(lw_new);
                let log_ratio = lw_new - lw;
                if log_ratio >= 0.0 || rng.uniform_open().ln() < log_ratio {
                    theta = t;
                    lw = lw_new;
                    moved = true;
                    accepted += 1;
                }
            }
            _ => failures += 1,
        }
        if step >= chain.burn_in {
            draws.push(theta);
            accepted_flags.push(moved);
        }
    }
    if accepted == 0 {
        return Err(Error::ChainFailure("no proposal was accepted".into()));
    }
    Ok(PosteriorSamples {
        method: Method::Tab,
        seed,
        chain: Some(*chain),
        draws,
        accepted: accepted_flags,
        diagnostics: ChainDiagnostics {
            acceptance_rate: accepted as f64 / chain.length as f64,
            failures,
            max_log_weight,
            widenings: 0,
        },
    })
}

/// Kernel estimate of the proposal posterior density of the (weighted part
/// of the) functional, from `draws` independent posterior measures.
pub fn estimate_posterior_q<B, P>(
    spec: &TaModelSpec<B, P>,
    data: &[B::Atom],
    draws: usize,
    rng: &mut RngHandle,
) -> Result<DensityModel>
where
    B: BaseMeasure,
    P: LogDensity,
    FunctionalKind: Functional<B::Atom>,
{
    let mut vals = Vec::with_capacity(draws);
    let mut unusable = 0;
    for _ in 0..draws {
        let f = sample_dp_posterior(&spec.proposal, data, rng);
        match spec.functional.evaluate(&f) {
            Ok(t) if t.is_finite() => vals.push(spec.weighted_part(&t)),
            _ => unusable += 1,
        }
    }
    if 2 * unusable > draws {
        return Err(Error::TooManyUnusable {
            unusable,
            total: draws,
        });
    }
    DensityModel::fit(&vals, spec.bandwidth, spec.coordinates)
}

/// Evenly spaced grid of cell centers on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1d {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid1d {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(hi > lo) || points < 50 || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid needs lo < hi and at least 50 points, got [{lo}, {hi}] x {points}"
            )));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step()
    }
}

/// Grid posterior: normalized cell masses plus inverse-CDF samples.
#[derive(Debug, Clone)]
pub struct GridPosterior {
    pub grid: Grid1d,
    pub masses: Vec<f64>,
    pub samples: PosteriorSamples,
}

/// Sample the one-dimensional augmented posterior `p * q_post / q_prior` by
/// normalizing it on a grid and inverting the cumulative masses. Each cell
/// spans one grid step around its center. Fails when more than 1% of the
/// mass sits in the outer 2% of cells on either end.
pub fn ta_posterior_grid_1d<B, P>(
    spec: &TaModelSpec<B, P>,
    q_prior: &DensityModel,
    q_post: &DensityModel,
    grid: &Grid1d,
    n_samples: usize,
    rng: &mut RngHandle,
) -> Result<GridPosterior>
where
    B: BaseMeasure,
    P: LogDensity,
    FunctionalKind: Functional<B::Atom>,
{
    spec.validate()?;
    if spec.prior.dim() != 1 || q_post.dim() != 1 {
        return Err(Error::InvalidParameter("grid sampling needs a one-dimensional weighting".into()));
    }
    let logs: Vec<f64> = (0..grid.points)
        .map(|i| {
            let t = Theta::scalar(grid.point(i));
            spec.log_weight(q_prior, &t) + LogDensity::log_density(q_post, &t)
        })
        .collect();
    if logs.iter().all(|l| *l == f64::NEG_INFINITY) {
        return Err(Error::Degenerate("posterior vanishes on the whole grid".into()));
    }
    let masses = crate::prob::normalize_log_weights(&logs);
    let edge = (grid.points / 50).max(1);
    let boundary: f64 = masses[..edge].iter().sum::<f64>() + masses[grid.points - edge..].iter().sum::<f64>();
    if boundary > 0.01 {
        return Err(Error::GridTooNarrow {
            boundary_mass: boundary,
        });
    }
    let mut cdf = Vec::with_capacity(masses.len());
    let mut acc = 0.0;
    for m in &masses {
        acc += m;
        cdf.push(acc);
    }
    let step = grid.step();
    let seed = rng.seed();
    let draws: Vec<Theta> = (0..n_samples)
        .map(|_| {
            let u = rng.uniform_open() * acc;
            let i = cdf.partition_point(|c| *c < u).min(grid.points - 1);
            Theta::scalar(grid.point(i) + (rng.uniform_open() - 0.5) * step)
        })
        .collect();
    Ok(GridPosterior {
        grid: *grid,
        masses,
        samples: PosteriorSamples {
            method: Method::Tab,
            seed,
            chain: None,
            accepted: vec![true; draws.len()],
            draws,
            diagnostics: ChainDiagnostics {
                acceptance_rate: 1.0,
                ..Default::default()
            },
        },
    })
}

/// Normal approximation to the augmented posterior from quadratic
/// expansions: with the proposal posterior peaked at `t_qn` with precision
/// `sigma_n_inv`, and `log m` peaked at `t0` with curvature `h0`, the
/// posterior is approximately Normal with precision `H_n = h0 + sigma_n_inv`
/// and mean `t_n = H_n^-1 (h0 t0 + sigma_n_inv t_qn)`.
pub fn normal_approx(
    t_qn: &DVector<f64>,
    sigma_n_inv: &DMatrix<f64>,
    t0: &DVector<f64>,
    h0: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let d = t_qn.len();
    if sigma_n_inv.shape() != (d, d) || h0.shape() != (d, d) || t0.len() != d {
        return Err(Error::InvalidParameter("dimension mismatch".into()));
    }
    let sym = |m: &DMatrix<f64>| (m - m.transpose()).amax() <= 1e-12 * (1.0 + m.amax());
    if !sym(sigma_n_inv) || sigma_n_inv.clone().cholesky().is_none() {
        return Err(Error::InvalidParameter("sigma_n_inv must be symmetric positive definite".into()));
    }
    if !sym(h0) {
        return Err(Error::InvalidParameter("h0 must be symmetric".into()));
    }
    let min_eig = h0.clone().symmetric_eigen().eigenvalues.min();
    if min_eig < -1e-12 * (1.0 + h0.amax()) {
        return Err(Error::InvalidParameter("h0 must be positive semidefinite".into()));
    }
    let h_n = h0 + sigma_n_inv;
    let chol = h_n
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("H_n is not positive definite".into()))?;
    let rhs = h0 * t0 + sigma_n_inv * t_qn;
    Ok((chol.solve(&rhs), h_n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::NormalPrior;
    use crate::prob::DiscretizedNormal;

    fn mean_spec(draws: usize) -> TaModelSpec<DiscretizedNormal, NormalPrior> {
        let base = DiscretizedNormal::new(0.0, 100.0, 1e-5).unwrap();
        let dp = DpSpec::with_default_truncation(0.5, base).unwrap();
        let mut s = TaModelSpec::new(dp, FunctionalKind::Mean, NormalPrior::new(0.0, 10.0).unwrap()).unwrap();
        s.prior_draws_for_q = draws;
        s
    }

    #[test]
    fn prior_q_centered_at_base_mean() {
        let spec = mean_spec(20_000);
        let q = estimate_prior_q(&spec, &mut RngHandle::new(1)).unwrap();
        let m = q.draws.iter().map(|t| t[0]).sum::<f64>() / q.draws.len() as f64;
        assert!(m.abs() < 0.5, "{m}");
        assert_eq!(q.unusable, 0);
    }

    #[test]
    fn too_few_prior_draws() {
        let spec = mean_spec(5);
        assert!(matches!(
            estimate_prior_q(&spec, &mut RngHandle::new(1)),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let base = DiscretizedNormal::new(0.0, 100.0, 1e-5).unwrap();
        let dp = DpSpec::with_default_truncation(0.5, base).unwrap();
        assert!(TaModelSpec::new(dp.clone(), FunctionalKind::MeanVar, NormalPrior::new(0.0, 1.0).unwrap()).is_err());
        let mut s = TaModelSpec::new(dp, FunctionalKind::Mean, NormalPrior::new(0.0, 1.0).unwrap()).unwrap();
        s.weighting = WeightingMode::SingleMargin(1);
        assert!(s.validate().is_err());
    }

    #[test]
    fn chain_settings_checked() {
        assert!(ChainSettings::new(100, 100).is_err());
    }

    #[test]
    fn normal_approx_identities() {
        let t_qn = DVector::from_vec(vec![1.0, 2.0]);
        let s_inv = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let t0 = DVector::from_vec(vec![-1.0, 4.0]);
        let zero = DMatrix::zeros(2, 2);
        let (t, h) = normal_approx(&t_qn, &s_inv, &t0, &zero).unwrap();
        assert!((t - &t_qn).amax() < 1e-12);
        assert_eq!(h, s_inv);

        let h0 = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let (t, _) = normal_approx(&t_qn, &s_inv, &t_qn, &h0).unwrap();
        assert!((t - &t_qn).amax() < 1e-12);

        let big = DMatrix::identity(2, 2) * 1e6;
        let (t, _) = normal_approx(&t_qn, &big, &t0, &DMatrix::identity(2, 2)).unwrap();
        assert!((t - &t_qn).norm() < 1e-5 * (&t0 - &t_qn).norm());

        let not_spd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(normal_approx(&t_qn, &not_spd, &t0, &zero).is_err());
        assert!(normal_approx(&t_qn, &s_inv, &t0, &(-DMatrix::identity(2, 2))).is_err());
    }
}
