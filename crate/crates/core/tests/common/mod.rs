//! Reference computations shared by the oracle tests and the acceptance run.
#![allow(dead_code)]

use nalgebra::{Matrix3x4, Vector3, Vector4};
use tabayes::competitors::profile_el;
use tabayes::functionals::{aipw, fit_weighted_linear, fit_weighted_logistic, logistic_score, AipwSettings};
use tabayes::measure::{DiscreteMeasure, MarPoint};
use tabayes::prob::sample_normal;
use tabayes::rng::RngHandle;

/// Maximize `sum log(n w_i)` over the feasible line of weights for n = 4.
///
/// The constraints `sum w = 1`, `sum w g = 0` leave a one-dimensional
/// affine set `w0 + t v`; the objective is concave in `t` and is maximized
/// by a scan followed by golden-section refinement.
pub fn brute_force_el(x: &[f64; 4], mu: f64, s2: f64) -> f64 {
    let a = Matrix3x4::from_fn(|r, c| {
        let d = x[c] - mu;
        match r {
            0 => 1.0,
            1 => d,
            _ => d * d - s2,
        }
    });
    let svd = a.svd(true, true);
    let w0: Vector4<f64> = svd.solve(&Vector3::new(1.0, 0.0, 0.0), 1e-14).unwrap();
    // Orthonormal basis of the row space.
    let vt = a.transpose().svd(true, false).u.unwrap();
    let mut v = Vector4::zeros();
    // Project unit vectors off the row space to get the null direction.
    for k in 0..4 {
        let mut e = Vector4::zeros();
        e[k] = 1.0;
        for j in 0..3 {
            let col: Vector4<f64> = vt.column(j).into();
            e -= col * col.dot(&e);
        }
        if e.norm() > v.norm() {
            v = e;
        }
    }
    v /= v.norm();
    // Feasible interval for t keeping every weight positive.
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..4 {
        if v[i] > 0.0 {
            lo = lo.max(-w0[i] / v[i]);
        } else if v[i] < 0.0 {
            hi = hi.min(-w0[i] / v[i]);
        }
    }
    assert!(lo < hi, "no positive feasible weights");
    let f = |t: f64| (0..4).map(|i| (4.0 * (w0[i] + t * v[i])).ln()).sum::<f64>();
    let m = 20_000;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 1..m {
        let t = lo + (hi - lo) * k as f64 / m as f64;
        let val = f(t);
        if val > best.0 {
            best = (val, t);
        }
    }
    let step = (hi - lo) / m as f64;
    let (mut a_, mut b_) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b_ - g * (b_ - a_);
        let d = a_ + g * (b_ - a_);
        if f(c) > f(d) {
            b_ = d;
        } else {
            a_ = c;
        }
    }
    f(0.5 * (a_ + b_))
}

/// Largest `|log R - oracle|` over `cases` random in-hull points at n = 4.
pub fn el_n4_max_error(cases: usize, seed: u64) -> f64 {
    let mut rng = RngHandle::new(seed);
    let mut worst = 0.0_f64;
    let mut checked = 0;
    while checked < cases {
        let x = [(); 4].map(|_| sample_normal(0.0, 1.0, &mut rng).unwrap());
        let m = x.iter().sum::<f64>() / 4.0;
        let v = x.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / 4.0;
        let mu = m + 0.3 * v.sqrt() * (2.0 * rng.uniform_open() - 1.0);
        let s2 = v * (0.6 + 0.8 * rng.uniform_open());
        let r = profile_el(&x, mu, s2).unwrap();
        if !r.in_hull {
            continue;
        }
        worst = worst.max((r.log_r - brute_force_el(&x, mu, s2)).abs());
        checked += 1;
    }
    worst
}

pub fn six_atoms() -> DiscreteMeasure<MarPoint> {
    DiscreteMeasure::new(
        vec![
            MarPoint::observed(-1.2, 0.7),
            MarPoint::missing(-0.4),
            MarPoint::observed(0.3, 2.1),
            MarPoint::observed(0.9, 1.4),
            MarPoint::missing(1.6),
            MarPoint::observed(2.2, 3.9),
        ],
        vec![0.1, 0.25, 0.15, 0.2, 0.12, 0.18],
    )
    .unwrap()
}

/// Plain Newton on the logistic score, run to machine precision.
pub fn logistic_oracle(atoms: &[(f64, bool, f64)]) -> (f64, f64) {
    let (mut a, mut b) = (0.0_f64, 0.0_f64);
    for _ in 0..200 {
        let (mut s0, mut s1, mut i00, mut i01, mut i11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x, c, w) in atoms {
            let p = 1.0 / (1.0 + (-(a + b * x)).exp());
            let r = if c { 1.0 } else { 0.0 } - p;
            s0 += w * r;
            s1 += w * r * x;
            let v = w * p * (1.0 - p);
            i00 += v;
            i01 += v * x;
            i11 += v * x * x;
        }
        let det = i00 * i11 - i01 * i01;
        a += (i11 * s0 - i01 * s1) / det;
        b += (i00 * s1 - i01 * s0) / det;
    }
    (a, b)
}

/// AIPW on a fixed six-atom measure, evaluated term by term from
/// independently fitted regressions.
pub fn aipw_line_by_line(f: &DiscreteMeasure<MarPoint>) -> f64 {
    let rows: Vec<(f64, bool, f64, f64)> = f.iter().map(|(a, w)| (a.x, a.c, a.cy, w)).collect();
    let (mut sw, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, c, y, w) in &rows {
        if c {
            sw += w;
            sx += w * x;
            sxx += w * x * x;
            sy += w * y;
            sxy += w * x * y;
        }
    }
    let det = sw * sxx - sx * sx;
    let b0 = (sxx * sy - sx * sxy) / det;
    let b1 = (sw * sxy - sx * sy) / det;
    let logit: Vec<(f64, bool, f64)> = rows.iter().map(|&(x, c, _, w)| (x, c, w)).collect();
    let (p0, p1) = logistic_oracle(&logit);
    let mut total = 0.0;
    for &(x, c, y, w) in &rows {
        let zeta = b0 + b1 * x;
        let p = 1.0 / (1.0 + (-(p0 + p1 * x)).exp());
        let cf = if c { 1.0 } else { 0.0 };
        total += w * (zeta + cf * (y - zeta) / p);
    }
    total
}

pub fn aipw_oracle_error() -> f64 {
    let f = six_atoms();
    (aipw(&f, &AipwSettings::default()).unwrap().value - aipw_line_by_line(&f)).abs()
}

/// Sum with Neumaier compensation.
fn compensated(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0_f64, 0.0_f64);
    for t in terms {
        let u = s + t;
        c += if s.abs() >= t.abs() { (s - u) + t } else { (t - u) + s };
        s = u;
    }
    s + c
}

fn random_mar_measure(rng: &mut RngHandle, n: usize, logistic: bool) -> DiscreteMeasure<MarPoint> {
    let atoms: Vec<MarPoint> = (0..n)
        .map(|_| {
            if logistic {
                let x = sample_normal(0.0, 1.0, rng).unwrap();
                let p = 1.0 / (1.0 + (-(0.3 + 0.8 * x)).exp());
                if rng.uniform_open() < p { MarPoint::observed(x, x) } else { MarPoint::missing(x) }
            } else {
                let x = sample_normal(1.0, 4.0, rng).unwrap();
                if rng.uniform_open() < 0.7 {
                    MarPoint::observed(x, 2.0 - 0.5 * x + sample_normal(0.0, 1.0, rng).unwrap())
                } else {
                    MarPoint::missing(x)
                }
            }
        })
        .collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.uniform_open()).collect();
    DiscreteMeasure::from_unnormalized(atoms, weights).unwrap()
}

/// Largest coefficient gap between the weighted line fit and normal
/// equations solved with compensated sums, over `reps` random instances.
pub fn linear_max_error(reps: usize, seed: u64) -> f64 {
    let mut rng = RngHandle::new(seed);
    let mut worst = 0.0_f64;
    for _ in 0..reps {
        let f = random_mar_measure(&mut rng, 30, false);
        let obs: Vec<(f64, f64, f64)> = f.iter().filter(|(a, _)| a.c).map(|(a, w)| (a.x, a.cy, w)).collect();
        let sw = compensated(obs.iter().map(|o| o.2));
        let sx = compensated(obs.iter().map(|o| o.2 * o.0));
        let sxx = compensated(obs.iter().map(|o| o.2 * o.0 * o.0));
        let sy = compensated(obs.iter().map(|o| o.2 * o.1));
        let sxy = compensated(obs.iter().map(|o| o.2 * o.0 * o.1));
        let det = sw * sxx - sx * sx;
        let b0 = (sxx * sy - sx * sxy) / det;
        let b1 = (sw * sxy - sx * sy) / det;
        let fit = fit_weighted_linear(&f).unwrap();
        worst = worst.max((fit.intercept - b0).abs()).max((fit.slope - b1).abs());
    }
    worst
}

/// Largest score norm at the returned logistic fit, and largest coefficient
/// gap to the reference Newton solve, over `reps` random instances.
pub fn logistic_max_error(reps: usize, seed: u64) -> (f64, f64) {
    let mut rng = RngHandle::new(seed);
    let (mut res, mut gap) = (0.0_f64, 0.0_f64);
    for _ in 0..reps {
        let f = random_mar_measure(&mut rng, 40, true);
        let fit = fit_weighted_logistic(&f, &AipwSettings::default()).unwrap();
        let s = logistic_score(&f, fit.intercept, fit.slope);
        res = res.max(if fit.converged { s[0].hypot(s[1]) } else { f64::INFINITY });
        let rows: Vec<(f64, bool, f64)> = f.iter().map(|(a, w)| (a.x, a.c, w)).collect();
        let (a, b) = logistic_oracle(&rows);
        gap = gap.max((fit.intercept - a).abs()).max((fit.slope - b).abs());
    }
    (res, gap)
}
