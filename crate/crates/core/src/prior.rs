//! Log densities on the functional's value space.

use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::functionals::Theta;
use crate::prob::{normal_ln_pdf, NigParams};

/// A (possibly unnormalized) log density over one- or two-dimensional values.
pub trait LogDensity: Send + Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, theta: &Theta) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalPrior {
    pub mean: f64,
    pub variance: f64,
}

impl NormalPrior {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !mean.is_finite() || !variance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "normal prior needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        crate::prob::std_normal_cdf((x - self.mean) / self.variance.sqrt())
    }
}

impl LogDensity for NormalPrior {
    fn dim(&self) -> usize {
        1
    }
    fn log_density(&self, theta: &Theta) -> f64 {
        normal_ln_pdf(theta[0], self.mean, self.variance)
    }
}

/// NIG prior as a density on `(mu, sigma2)`.
impl LogDensity for NigParams {
    fn dim(&self) -> usize {
        2
    }
    fn log_density(&self, theta: &Theta) -> f64 {
        NigParams::log_density(self, theta[0], theta[1])
    }
}

/// NIG prior carried to `(mu, mu2')` with `sigma2 = mu2' - mu^2`; the map
/// is triangular with unit Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigRawMoments(pub NigParams);

impl LogDensity for NigRawMoments {
    fn dim(&self) -> usize {
        2
    }
    fn log_density(&self, theta: &Theta) -> f64 {
        self.0.log_density(theta[0], theta[1] - theta[0] * theta[0])
    }
}

/// Improper flat density. With `positive_second`, the second coordinate is
/// restricted to positive values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatPrior {
    pub dim: usize,
    pub positive_second: bool,
}

impl LogDensity for FlatPrior {
    fn dim(&self) -> usize {
        self.dim
    }
    fn log_density(&self, theta: &Theta) -> f64 {
        if self.positive_second && self.dim == 2 && !(theta[1] > 0.0) {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    }
}

impl LogDensity for DensityModel {
    fn dim(&self) -> usize {
        DensityModel::dim(self)
    }
    fn log_density(&self, theta: &Theta) -> f64 {
        DensityModel::log_density(self, theta).unwrap_or(f64::NEG_INFINITY)
    }
}

impl<T: LogDensity + ?Sized> LogDensity for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, theta: &Theta) -> f64 {
        (**self).log_density(theta)
    }
}
