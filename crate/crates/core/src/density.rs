//! Gaussian kernel density estimation in one or two dimensions.
//!
//! Samples are stored whitened by the bandwidth (`z = L^-1 x` with
//! `H = L L^T`) and sorted by their first whitened coordinate. A query sums
//! only the kernels within `d_min + 9` whitened units of the query in the
//! first coordinate, where `d_min` is the distance to the nearest sample;
//! every dropped term is below `exp(-40)` times the nearest kernel, so the
//! truncation is invisible at double precision while keeping tail queries
//! finite and cheap.

use crate::error::{Error, Result};
use crate::functionals::Theta;
use crate::prob::LN_2PI;

pub const MIN_KDE_SAMPLES: usize = 10;
const WINDOW_MARGIN: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Scalar(f64),
    /// Symmetric positive-definite 2x2 kernel covariance.
    Matrix([[f64; 2]; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthRule {
    /// `0.9 min(sd, IQR / 1.34) N^(-1/5)` per coordinate (`N^(-1/6)` in 2D).
    Silverman,
    /// Normal-reference diagonal: `sd_j (4 / ((d + 2) N))^(1 / (d + 4))`.
    PluginDiagonal,
    Explicit(Bandwidth),
}

/// Coordinates in which the kernel estimate lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coordinates {
    #[default]
    Identity,
    /// Fit on `(theta_1, ln theta_2)`; densities in the original coordinates
    /// carry the Jacobian `1 / theta_2`.
    LogSecond,
}

impl Coordinates {
    fn forward(&self, t: &[f64]) -> Option<[f64; 2]> {
        match (self, t) {
            (_, [a]) => Some([*a, 0.0]),
            (Coordinates::Identity, [a, b]) => Some([*a, *b]),
            (Coordinates::LogSecond, [a, b]) => {
                if *b > 0.0 {
                    Some([*a, b.ln()])
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn log_jacobian(&self, t: &[f64]) -> f64 {
        match (self, t) {
            (Coordinates::LogSecond, [_, b]) => -b.ln(),
            _ => 0.0,
        }
    }
}

/// A fitted Gaussian KDE.
#[derive(Debug, Clone)]
pub struct DensityModel {
    dim: usize,
    coords: Coordinates,
    bandwidth: Bandwidth,
    /// Lower-triangular factor of the bandwidth matrix (`[l11, l21, l22]`).
    chol: [f64; 3],
    /// Whitened samples sorted by the first coordinate.
    z: Vec<[f64; 2]>,
    log_norm: f64,
    table: Option<KernelTable>,
}

/// Kernel sums `sum_i exp(-|g - z_i|^2 / 2)` on a regular grid in whitened
/// coordinates, from linear binning and a separable convolution.
#[derive(Debug, Clone)]
struct KernelTable {
    lo: [f64; 2],
    step: [f64; 2],
    cells: [usize; 2],
    /// Per-coordinate range where lookups are trusted; kernels of draws
    /// beyond the grid cannot reach it.
    valid: [[f64; 2]; 2],
    values: Vec<f64>,
}

/// Kernel reach (whitened units) used when building a table. Terms beyond it
/// are below `exp(-32)`.
const TABLE_REACH: f64 = 8.0;
/// Tabulated sums below this fall back to the exact evaluation, so tail
/// values never rest on truncated kernels.
const TABLE_FLOOR: f64 = 1e-2;
/// Finest grid spacing (whitened units); binning and interpolation then
/// move log densities by well under 0.01.
const TABLE_STEP: f64 = 0.05;
/// Lookups are served between these sample quantiles of each coordinate.
const TABLE_QUANTILE: f64 = 0.01;

impl KernelTable {
    fn build(z: &[[f64; 2]], dim: usize, max_cells: usize) -> Self {
        let mut lo = [0.0; 2];
        let mut valid = [[0.0; 2]; 2];
        let mut step = [1.0; 2];
        let mut cells = [1usize; 2];
        for k in 0..dim {
            let mut v: Vec<f64> = z.iter().map(|p| p[k]).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            let (qlo, qhi) = (quantile_sorted(&v, TABLE_QUANTILE), quantile_sorted(&v, 1.0 - TABLE_QUANTILE));
            valid[k] = [qlo, qhi];
            lo[k] = qlo - TABLE_REACH;
            let span = qhi - qlo + 2.0 * TABLE_REACH;
            step[k] = (span / (max_cells - 1) as f64).max(TABLE_STEP);
            cells[k] = (span / step[k]).ceil() as usize + 1;
        }
        let [nx, ny] = cells;
        let mut counts = vec![0.0; nx * ny];
        let locate = |v: f64, k: usize| {
            let u = ((v - lo[k]) / step[k]).clamp(0.0, (cells[k] - 1) as f64);
            let i = (u.floor() as usize).min(cells[k].saturating_sub(2));
            (i, u - i as f64)
        };
        let on_grid = |p: &[f64; 2]| {
            (0..dim).all(|k| p[k] >= lo[k] && p[k] <= lo[k] + (cells[k] - 1) as f64 * step[k])
        };
        for p in z.iter().filter(|p| on_grid(p)) {
            let (i, fa) = locate(p[0], 0);
            if dim == 1 {
                counts[i] += 1.0 - fa;
                counts[i + 1] += fa;
            } else {
                let (j, fb) = locate(p[1], 1);
                counts[i * ny + j] += (1.0 - fa) * (1.0 - fb);
                counts[i * ny + j + 1] += (1.0 - fa) * fb;
                counts[(i + 1) * ny + j] += fa * (1.0 - fb);
                counts[(i + 1) * ny + j + 1] += fa * fb;
            }
        }
        let kernel = |k: usize| -> Vec<f64> {
            let reach = (TABLE_REACH / step[k]).ceil() as usize;
            (0..=reach)
                .map(|d| {
                    let u = d as f64 * step[k];
                    (-0.5 * u * u).exp()
                })
                .collect()
        };
        // Convolve along the second axis (rows are contiguous), then the first.
        let mut tmp = if dim == 1 {
            counts
        } else {
            let k1 = kernel(1);
            let mut tmp = vec![0.0; nx * ny];
            for i in 0..nx {
                for j in 0..ny {
                    let c = counts[i * ny + j];
                    if c == 0.0 {
                        continue;
                    }
                    let row = &mut tmp[i * ny..(i + 1) * ny];
                    let lo_j = j.saturating_sub(k1.len() - 1);
                    let hi_j = (j + k1.len() - 1).min(ny - 1);
                    for (jj, slot) in row.iter_mut().enumerate().take(hi_j + 1).skip(lo_j) {
                        *slot += c * k1[jj.abs_diff(j)];
                    }
                }
            }
            tmp
        };
        let k0 = kernel(0);
        let mut values = vec![0.0; nx * ny];
        for i in 0..nx {
            let src = &tmp[i * ny..(i + 1) * ny];
            if src.iter().all(|v| *v == 0.0) {
                continue;
            }
            let lo_i = i.saturating_sub(k0.len() - 1);
            let hi_i = (i + k0.len() - 1).min(nx - 1);
            for t in lo_i..=hi_i {
                let w = k0[t.abs_diff(i)];
                for (dst, v) in values[t * ny..(t + 1) * ny].iter_mut().zip(src) {
                    *dst += w * v;
                }
            }
        }
        tmp.clear();
        Self { lo, step, cells, valid, values }
    }

    /// Interpolated kernel sum, or `None` outside the trusted range.
    fn lookup(&self, q: &[f64; 2], dim: usize) -> Option<f64> {
        if (0..dim).any(|k| !(q[k] >= self.valid[k][0] && q[k] <= self.valid[k][1])) {
            return None;
        }
        let [nx, ny] = self.cells;
        let ua = ((q[0] - self.lo[0]) / self.step[0]).min((nx - 1) as f64);
        let i = (ua.floor() as usize).min(nx - 2);
        let fa = ua - i as f64;
        if dim == 1 {
            return Some((1.0 - fa) * self.values[i] + fa * self.values[i + 1]);
        }
        let ub = ((q[1] - self.lo[1]) / self.step[1]).min((ny - 1) as f64);
        let j = (ub.floor() as usize).min(ny - 2);
        let fb = ub - j as f64;
        let v = |i: usize, j: usize| self.values[i * ny + j];
        Some((1.0 - fa) * ((1.0 - fb) * v(i, j) + fb * v(i, j + 1)) + fa * ((1.0 - fb) * v(i + 1, j) + fb * v(i + 1, j + 1)))
    }
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

fn sd_and_iqr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    (sd, quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25))
}

pub(crate) fn robust_scale(v: &[f64]) -> f64 {
    let (sd, iqr) = sd_and_iqr(v);
    let r = iqr / 1.34;
    if r > 0.0 {
        sd.min(r)
    } else {
        sd
    }
}

impl DensityModel {
    /// Fit a KDE to `samples` (all of the same dimension, 1 or 2) expressed
    /// in `coords`.
    pub fn fit(samples: &[Theta], rule: BandwidthRule, coords: Coordinates) -> Result<Self> {
        if samples.len() < MIN_KDE_SAMPLES {
            return Err(Error::TooFewSamples {
                needed: MIN_KDE_SAMPLES,
                got: samples.len(),
            });
        }
        let dim = samples[0].dim();
        if samples.iter().any(|s| s.dim() != dim) {
            return Err(Error::InvalidParameter("samples of mixed dimension".into()));
        }
        if dim == 1 && coords == Coordinates::LogSecond {
            return Err(Error::InvalidParameter("log-second coordinates need 2D samples".into()));
        }
        let mut pts = Vec::with_capacity(samples.len());
        for s in samples {
            if !s.is_finite() {
                return Err(Error::NonFinite("KDE sample"));
            }
            pts.push(
                coords
                    .forward(s.as_slice())
                    .ok_or_else(|| Error::InvalidParameter("sample outside coordinate domain".into()))?,
            );
        }
        let n = pts.len() as f64;
        let cols: Vec<Vec<f64>> = (0..dim).map(|j| pts.iter().map(|p| p[j]).collect()).collect();
        for c in &cols {
            let (sd, _) = sd_and_iqr(c);
            if !(sd > 0.0) {
                return Err(Error::Degenerate("zero sample variance in a coordinate".into()));
            }
        }
        let bandwidth = match rule {
            BandwidthRule::Explicit(b) => b,
            BandwidthRule::Silverman => {
                if dim == 1 {
                    Bandwidth::Scalar(0.9 * robust_scale(&cols[0]) * n.powf(-0.2))
                } else {
                    let f = n.powf(-1.0 / 6.0);
                    let (a, b) = (robust_scale(&cols[0]) * f, robust_scale(&cols[1]) * f);
                    Bandwidth::Matrix([[a * a, 0.0], [0.0, b * b]])
                }
            }
            BandwidthRule::PluginDiagonal => {
                let d = dim as f64;
                let f = (4.0 / ((d + 2.0) * n)).powf(1.0 / (d + 4.0));
                if dim == 1 {
                    Bandwidth::Scalar(sd_and_iqr(&cols[0]).0 * f)
                } else {
                    let (a, b) = (sd_and_iqr(&cols[0]).0 * f, sd_and_iqr(&cols[1]).0 * f);
                    Bandwidth::Matrix([[a * a, 0.0], [0.0, b * b]])
                }
            }
        };
        Self::from_points(dim, coords, bandwidth, pts)
    }

    /// Convenience for one-dimensional samples.
    pub fn fit_1d(samples: &[f64], rule: BandwidthRule) -> Result<Self> {
        let t: Vec<Theta> = samples.iter().map(|&x| Theta::scalar(x)).collect();
        Self::fit(&t, rule, Coordinates::Identity)
    }

    fn from_points(dim: usize, coords: Coordinates, bandwidth: Bandwidth, pts: Vec<[f64; 2]>) -> Result<Self> {
        let chol = match (dim, bandwidth) {
            (1, Bandwidth::Scalar(h)) => {
                if !(h > 0.0) || !h.is_finite() {
                    return Err(Error::InvalidParameter(format!("bandwidth must be > 0, got {h}")));
                }
                [h, 0.0, 1.0]
            }
            (2, Bandwidth::Matrix(m)) => {
                if (m[0][1] - m[1][0]).abs() > 1e-12 * (m[0][0].abs() + m[1][1].abs()) {
                    return Err(Error::InvalidParameter("bandwidth matrix must be symmetric".into()));
                }
                let l11 = m[0][0].sqrt();
                if !(m[0][0] > 0.0) {
                    return Err(Error::InvalidParameter("bandwidth matrix must be positive definite".into()));
                }
                let l21 = m[1][0] / l11;
                let r = m[1][1] - l21 * l21;
                if !(r > 0.0) || !r.is_finite() {
                    return Err(Error::InvalidParameter("bandwidth matrix must be positive definite".into()));
                }
                [l11, l21, r.sqrt()]
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "bandwidth kind does not match sample dimension".into(),
                ))
            }
        };
        let mut model = Self {
            dim,
            coords,
            bandwidth,
            chol,
            z: Vec::new(),
            log_norm: 0.0,
            table: None,
        };
        let mut z: Vec<[f64; 2]> = pts.iter().map(|p| model.whiten(p)).collect();
        z.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let log_det = match dim {
            1 => chol[0].ln(),
            _ => chol[0].ln() + chol[2].ln(),
        };
        model.log_norm = -(z.len() as f64).ln() - log_det - 0.5 * dim as f64 * LN_2PI;
        model.z = z;
        Ok(model)
    }

    fn whiten(&self, p: &[f64; 2]) -> [f64; 2] {
        let [l11, l21, l22] = self.chol;
        if self.dim == 1 {
            [p[0] / l11, 0.0]
        } else {
            let z0 = p[0] / l11;
            [z0, (p[1] - l21 * z0) / l22]
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    pub fn coordinates(&self) -> Coordinates {
        self.coords
    }

    pub fn sample_count(&self) -> usize {
        self.z.len()
    }

    /// Bandwidth standard deviation along each fitted coordinate.
    pub fn bandwidth_scales(&self) -> [f64; 2] {
        match self.bandwidth {
            Bandwidth::Scalar(h) => [h, 0.0],
            Bandwidth::Matrix(m) => [m[0][0].sqrt(), m[1][1].sqrt()],
        }
    }

    /// Log density at `point` in the original coordinates. Points outside
    /// the coordinate domain (e.g. a nonpositive variance under
    /// [`Coordinates::LogSecond`]) have density zero.
    pub fn log_density(&self, point: &Theta) -> Result<f64> {
        if point.dim() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "point has dimension {}, model has {}",
                point.dim(),
                self.dim
            )));
        }
        if !point.is_finite() {
            return Err(Error::NonFinite("density query point"));
        }
        let Some(p) = self.coords.forward(point.as_slice()) else {
            return Ok(f64::NEG_INFINITY);
        };
        Ok(self.log_density_fitted(&p) + self.coords.log_jacobian(point.as_slice()))
    }

    /// Precompute kernel sums on a grid of at most `max_cells` points per
    /// dimension (spacing no finer than a twentieth of a bandwidth) so that later
    /// queries in the bulk of the samples cost O(1). Queries outside the
    /// central 98% of each coordinate, or where the density is far below
    /// the peak of a single kernel, still use the exact sum.
    pub fn tabulate(&mut self, max_cells: usize) -> Result<()> {
        if max_cells < 16 {
            return Err(Error::InvalidParameter(format!("table needs at least 16 cells, got {max_cells}")));
        }
        self.table = Some(KernelTable::build(&self.z, self.dim, max_cells));
        Ok(())
    }

    pub fn is_tabulated(&self) -> bool {
        self.table.is_some()
    }

    /// Log density in the fitted coordinates.
    pub fn log_density_fitted(&self, p: &[f64; 2]) -> f64 {
        let q = self.whiten(p);
        if let Some(s) = self.table.as_ref().and_then(|t| t.lookup(&q, self.dim)) {
            if s > TABLE_FLOOR {
                return self.log_norm + s.ln();
            }
        }
        self.log_density_exact(&q)
    }

    fn log_density_exact(&self, q: &[f64; 2]) -> f64 {
        let z = &self.z;
        let start = z.partition_point(|s| s[0] < q[0]);
        let d2 = |s: &[f64; 2]| {
            let a = s[0] - q[0];
            let b = s[1] - q[1];
            a * a + b * b
        };
        // Nearest neighbour by scanning outward in the sorted order.
        let mut best = f64::INFINITY;
        let mut i = start;
        while i < z.len() {
            let gap = z[i][0] - q[0];
            if gap * gap > best {
                break;
            }
            best = best.min(d2(&z[i]));
            i += 1;
        }
        let mut i = start;
        while i > 0 {
            i -= 1;
            let gap = q[0] - z[i][0];
            if gap * gap > best {
                break;
            }
            best = best.min(d2(&z[i]));
        }
        let reach = best.sqrt() + WINDOW_MARGIN;
        let lo = z.partition_point(|s| s[0] < q[0] - reach);
        let hi = z.partition_point(|s| s[0] <= q[0] + reach);
        // Shift by the nearest kernel so the sum never underflows.
        // Kernels beyond `reach` in the second coordinate are skipped too.
        let reach2 = reach * reach;
        let sum: f64 = z[lo..hi]
            .iter()
            .filter_map(|s| {
                let d = d2(s);
                (d <= reach2).then(|| (-0.5 * (d - best)).exp())
            })
            .sum();
        self.log_norm - 0.5 * best + sum.ln()
    }

    pub fn density(&self, point: &Theta) -> Result<f64> {
        Ok(self.log_density(point)?.exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::sample_normal;
    use crate::rng::RngHandle;

    fn normal_draws(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngHandle::new(seed);
        (0..n).map(|_| sample_normal(0.0, 1.0, &mut rng).unwrap()).collect()
    }

    /// Full-sum reference evaluation, no window.
    fn brute_log_density_1d(samples: &[f64], h: f64, x: f64) -> f64 {
        let n = samples.len() as f64;
        let s: f64 = samples
            .iter()
            .map(|xi| (-0.5 * ((x - xi) / h).powi(2)).exp())
            .sum();
        (s / (n * h * (2.0 * std::f64::consts::PI).sqrt())).ln()
    }

    #[test]
    fn standard_normal_peak() {
        let x = normal_draws(10_000, 1);
        let m = DensityModel::fit_1d(&x, BandwidthRule::Silverman).unwrap();
        let d = m.density(&Theta::scalar(0.0)).unwrap();
        assert!((d - 0.3989).abs() < 0.02, "{d}");
    }

    #[test]
    fn window_matches_full_sum() {
        let x = normal_draws(2000, 2);
        let m = DensityModel::fit_1d(&x, BandwidthRule::Silverman).unwrap();
        let Bandwidth::Scalar(h) = m.bandwidth() else { panic!() };
        for q in [-3.0, -0.5, 0.0, 0.7, 2.5, 5.0] {
            let a = m.log_density(&Theta::scalar(q)).unwrap();
            let b = brute_log_density_1d(&x, h, q);
            assert!((a - b).abs() < 1e-12, "{q}: {a} vs {b}");
        }
    }

    #[test]
    fn integrates_to_one_1d() {
        let x = normal_draws(3000, 3);
        let m = DensityModel::fit_1d(&x, BandwidthRule::Silverman).unwrap();
        let (lo, hi, k) = (-6.0, 6.0, 4000);
        let dx = (hi - lo) / k as f64;
        let total: f64 = (0..k)
            .map(|i| m.density(&Theta::scalar(lo + (i as f64 + 0.5) * dx)).unwrap())
            .sum::<f64>()
            * dx;
        assert!((total - 1.0).abs() < 0.01, "{total}");
    }

    #[test]
    fn integrates_to_one_2d() {
        let mut rng = RngHandle::new(4);
        let pts: Vec<Theta> = (0..2000)
            .map(|_| {
                let a = sample_normal(0.0, 1.0, &mut rng).unwrap();
                let b = sample_normal(0.5 * a, 4.0, &mut rng).unwrap();
                Theta::pair(a, b)
            })
            .collect();
        let m = DensityModel::fit(&pts, BandwidthRule::PluginDiagonal, Coordinates::Identity).unwrap();
        let k = 300;
        let (da, db) = (12.0 / k as f64, 26.0 / k as f64);
        let mut total = 0.0;
        for i in 0..k {
            for j in 0..k {
                let t = Theta::pair(-6.0 + (i as f64 + 0.5) * da, -13.0 + (j as f64 + 0.5) * db);
                total += m.density(&t).unwrap();
            }
        }
        total *= da * db;
        assert!((total - 1.0).abs() < 0.01, "{total}");
    }

    #[test]
    fn degenerate_and_small_inputs() {
        assert!(DensityModel::fit_1d(&[1.0; 50], BandwidthRule::Silverman).is_err());
        assert!(matches!(
            DensityModel::fit_1d(&[1.0, 2.0, 3.0], BandwidthRule::Silverman),
            Err(Error::TooFewSamples { .. })
        ));
        let x = normal_draws(100, 5);
        let m = DensityModel::fit_1d(&x, BandwidthRule::Silverman).unwrap();
        assert!(m.log_density(&Theta::scalar(f64::NAN)).is_err());
        assert!(m.log_density(&Theta::pair(0.0, 0.0)).is_err());
    }

    #[test]
    fn symmetric_samples_symmetric_density() {
        let half = normal_draws(500, 6);
        let x: Vec<f64> = half.iter().flat_map(|v| [*v, -*v]).collect();
        let m = DensityModel::fit_1d(&x, BandwidthRule::Explicit(Bandwidth::Scalar(0.3))).unwrap();
        for a in [0.1, 0.9, 2.3, 4.0] {
            let l = m.log_density(&Theta::scalar(a)).unwrap();
            let r = m.log_density(&Theta::scalar(-a)).unwrap();
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn far_tail_is_finite() {
        let x = normal_draws(1000, 7);
        let m = DensityModel::fit_1d(&x, BandwidthRule::Silverman).unwrap();
        let l = m.log_density(&Theta::scalar(50.0)).unwrap();
        assert!(l.is_finite() && l < -1000.0, "{l}");
    }

    #[test]
    fn mode_near_mean_for_single_cluster() {
        let x: Vec<f64> = normal_draws(5000, 8).iter().map(|v| v + 3.0).collect();
        let m = DensityModel::fit_1d(&x, BandwidthRule::Silverman).unwrap();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let step = 0.05;
        let (best, _) = (0..200)
            .map(|i| 3.0 - 5.0 + i as f64 * step)
            .map(|g| (g, m.log_density(&Theta::scalar(g)).unwrap()))
            .fold((0.0, f64::NEG_INFINITY), |acc, (g, l)| if l > acc.1 { (g, l) } else { acc });
        // The KDE mode of a sampled normal wanders a little from the sample mean.
        assert!((best - mean).abs() <= 2.0 * step + 0.1, "{best} vs {mean}");
    }

    #[test]
    fn log_second_coordinates_apply_jacobian() {
        let mut rng = RngHandle::new(9);
        let pts: Vec<Theta> = (0..1000)
            .map(|_| {
                let a = sample_normal(0.0, 1.0, &mut rng).unwrap();
                let b = sample_normal(0.0, 0.25, &mut rng).unwrap().exp();
                Theta::pair(a, b)
            })
            .collect();
        let m = DensityModel::fit(&pts, BandwidthRule::Silverman, Coordinates::LogSecond).unwrap();
        let t = Theta::pair(0.2, 1.5);
        let direct = m.log_density(&t).unwrap();
        let fitted = m.log_density_fitted(&[0.2, 1.5f64.ln()]);
        assert!((direct - (fitted - 1.5f64.ln())).abs() < 1e-12);
        assert_eq!(m.log_density(&Theta::pair(0.0, 0.0)).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn table_matches_exact_sum() {
        let mut rng = RngHandle::new(12);
        // Heavy-ish tails and correlation, like functional draws.
        let pts: Vec<Theta> = (0..20_000)
            .map(|_| {
                let a = sample_normal(0.0, 1.0, &mut rng).unwrap();
                let s = if rng.uniform_open() < 0.1 { 6.0 } else { 1.0 };
                Theta::pair(a * s, 0.5 * a + sample_normal(0.0, 1.0, &mut rng).unwrap())
            })
            .collect();
        let exact = DensityModel::fit(&pts, BandwidthRule::Silverman, Coordinates::Identity).unwrap();
        let mut tab = exact.clone();
        tab.tabulate(4096).unwrap();
        let xs: Vec<f64> = pts.iter().map(|t| t[0]).collect();
        let exact1 = DensityModel::fit_1d(&xs, BandwidthRule::Silverman).unwrap();
        let mut tab1 = exact1.clone();
        tab1.tabulate(4096).unwrap();
        for _ in 0..2000 {
            let q = Theta::pair(sample_normal(0.0, 25.0, &mut rng).unwrap(), sample_normal(0.0, 4.0, &mut rng).unwrap());
            let (a, b) = (exact.log_density(&q).unwrap(), tab.log_density(&q).unwrap());
            assert!((a - b).abs() < 5e-3, "{q:?}: {a} vs {b}");
            let q1 = Theta::scalar(q[0]);
            let (a, b) = (exact1.log_density(&q1).unwrap(), tab1.log_density(&q1).unwrap());
            assert!((a - b).abs() < 5e-3, "{q1:?}: {a} vs {b}");
        }
        assert!(tab.log_density(&Theta::pair(1e4, 0.0)).unwrap() < -1e6);
    }
}
