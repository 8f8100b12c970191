//! Highest posterior density regions from Monte Carlo draws.

use crate::density::robust_scale;
use crate::error::{Error, Result};
use crate::functionals::Theta;

pub const MIN_HPD_1D_SAMPLES: usize = 100;
pub const MIN_HPD_2D_SAMPLES: usize = 500;
pub const DEFAULT_GRID_RESOLUTION: usize = 200;

#[derive(Debug, Clone)]
pub enum HpdRegion {
    Interval { lo: f64, hi: f64, level: f64 },
    Grid(HpdGrid),
}

/// Cells of a rectangular grid whose estimated density clears a threshold.
#[derive(Debug, Clone)]
pub struct HpdGrid {
    pub level: f64,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub resolution: usize,
    pub mask: Vec<bool>,
    pub area: f64,
    /// Density threshold; a point is inside when its estimated density reaches it.
    pub threshold: f64,
    /// Kernel bandwidth per coordinate.
    pub bandwidth: [f64; 2],
    /// Estimated density at cell centers, row-major in the first coordinate.
    values: Vec<f64>,
}

impl HpdGrid {
    fn step(&self) -> [f64; 2] {
        let r = self.resolution as f64;
        [(self.hi[0] - self.lo[0]) / r, (self.hi[1] - self.lo[1]) / r]
    }

    /// Bilinear interpolation between cell centers; zero outside the grid.
    pub fn density_at(&self, a: f64, b: f64) -> f64 {
        if !(a >= self.lo[0] && a <= self.hi[0] && b >= self.lo[1] && b <= self.hi[1]) {
            return 0.0;
        }
        let step = self.step();
        let r = self.resolution;
        let locate = |v: f64, k: usize| {
            let u = ((v - self.lo[k]) / step[k] - 0.5).clamp(0.0, (r - 1) as f64);
            let i = (u.floor() as usize).min(r - 2);
            (i, u - i as f64)
        };
        let (i, fa) = locate(a, 0);
        let (j, fb) = locate(b, 1);
        let v = |i: usize, j: usize| self.values[i * r + j];
        (1.0 - fa) * ((1.0 - fb) * v(i, j) + fb * v(i, j + 1)) + fa * ((1.0 - fb) * v(i + 1, j) + fb * v(i + 1, j + 1))
    }
}

impl HpdRegion {
    pub fn level(&self) -> f64 {
        match self {
            HpdRegion::Interval { level, .. } => *level,
            HpdRegion::Grid(g) => g.level,
        }
    }

    /// Interval length or region area.
    pub fn size(&self) -> f64 {
        match self {
            HpdRegion::Interval { lo, hi, .. } => hi - lo,
            HpdRegion::Grid(g) => g.area,
        }
    }

    pub fn contains(&self, theta: &Theta) -> bool {
        match self {
            HpdRegion::Interval { lo, hi, .. } => theta.dim() == 1 && *lo <= theta[0] && theta[0] <= *hi,
            HpdRegion::Grid(g) => theta.dim() == 2 && g.density_at(theta[0], theta[1]) >= g.threshold,
        }
    }
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("HPD level must be in (0, 1), got {level}")));
    }
    Ok(())
}

/// Shortest window of sorted draws holding `ceil(level * M)` of them.
pub fn hpd_1d(samples: &[f64], level: f64) -> Result<HpdRegion> {
    check_level(level)?;
    if samples.len() < MIN_HPD_1D_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_HPD_1D_SAMPLES,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("HPD sample"));
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let m = s.len();
    let k = ((level * m as f64).ceil() as usize).clamp(1, m);
    let (mut lo, mut hi) = (s[0], s[k - 1]);
    for i in 1..=m - k {
        if s[i + k - 1] - s[i] < hi - lo {
            lo = s[i];
            hi = s[i + k - 1];
        }
    }
    Ok(HpdRegion::Interval { lo, hi, level })
}

/// Gaussian kernel density HPD region for two-dimensional draws.
///
/// Bandwidths follow Silverman's rule per coordinate. The estimate is
/// computed on a `resolution x resolution` grid spanning the draws plus
/// three bandwidths on each side, by linear binning followed by a separable
/// kernel convolution. The threshold is the `(1 - level)` quantile of the
/// estimated density at the draws.
pub fn hpd_2d(samples: &[Theta], level: f64, resolution: usize) -> Result<HpdRegion> {
    check_level(level)?;
    if samples.len() < MIN_HPD_2D_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_HPD_2D_SAMPLES,
            got: samples.len(),
        });
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter("grid resolution must be at least 2".into()));
    }
    if samples.iter().any(|t| t.dim() != 2 || !t.is_finite()) {
        return Err(Error::InvalidParameter("hpd_2d needs finite two-dimensional draws".into()));
    }
    let n = samples.len();
    let factor = (n as f64).powf(-1.0 / 6.0);
    let mut bandwidth = [0.0; 2];
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for k in 0..2 {
        let col: Vec<f64> = samples.iter().map(|t| t[k]).collect();
        bandwidth[k] = robust_scale(&col) * factor;
        if !(bandwidth[k] > 0.0) {
            return Err(Error::Degenerate("draws have no spread in a coordinate".into()));
        }
        let (min, max) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
        lo[k] = min - 3.0 * bandwidth[k];
        hi[k] = max + 3.0 * bandwidth[k];
    }
    let r = resolution;
    let step = [(hi[0] - lo[0]) / r as f64, (hi[1] - lo[1]) / r as f64];

    // Linear binning onto cell centers.
    let mut counts = vec![0.0; r * r];
    let bin = |v: f64, k: usize| {
        let u = ((v - lo[k]) / step[k] - 0.5).clamp(0.0, (r - 1) as f64);
        let i = (u.floor() as usize).min(r - 2);
        (i, u - i as f64)
    };
    for t in samples {
        let (i, fa) = bin(t[0], 0);
        let (j, fb) = bin(t[1], 1);
        counts[i * r + j] += (1.0 - fa) * (1.0 - fb);
        counts[i * r + j + 1] += (1.0 - fa) * fb;
        counts[(i + 1) * r + j] += fa * (1.0 - fb);
        counts[(i + 1) * r + j + 1] += fa * fb;
    }

    let kernel = |k: usize| -> Vec<f64> {
        let reach = ((5.0 * bandwidth[k] / step[k]).ceil() as usize).min(r - 1);
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * bandwidth[k]);
        (0..=reach)
            .map(|d| {
                let z = d as f64 * step[k] / bandwidth[k];
                norm * (-0.5 * z * z).exp()
            })
            .collect()
    };
    let (k0, k1) = (kernel(0), kernel(1));
    // Convolve along the second coordinate, then the first.
    let mut tmp = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            let c = counts[i * r + j];
            if c == 0.0 {
                continue;
            }
            let row = &mut tmp[i * r..(i + 1) * r];
            for (d, w) in k1.iter().enumerate() {
                if j + d < r {
                    row[j + d] += c * w;
                }
                if d > 0 && j >= d {
                    row[j - d] += c * w;
                }
            }
        }
    }
    let mut values = vec![0.0; r * r];
    for i in 0..r {
        for (d, w) in k0.iter().enumerate() {
            let scale = w / n as f64;
            let mut add = |target: usize| {
                for j in 0..r {
                    values[target * r + j] += scale * tmp[i * r + j];
                }
            };
            if i + d < r {
                add(i + d);
            }
            if d > 0 && i >= d {
                add(i - d);
            }
        }
    }

    let mut grid = HpdGrid {
        level,
        lo,
        hi,
        resolution,
        mask: Vec::new(),
        area: 0.0,
        threshold: 0.0,
        bandwidth,
        values,
    };
    let mut at_draws: Vec<f64> = samples.iter().map(|t| grid.density_at(t[0], t[1])).collect();
    at_draws.sort_by(|a, b| a.total_cmp(b));
    let idx = (((1.0 - level) * n as f64).floor() as usize).min(n - 1);
    grid.threshold = at_draws[idx];
    grid.mask = grid.values.iter().map(|v| *v >= grid.threshold).collect();
    grid.area = grid.mask.iter().filter(|m| **m).count() as f64 * step[0] * step[1];
    Ok(HpdRegion::Grid(grid))
}
