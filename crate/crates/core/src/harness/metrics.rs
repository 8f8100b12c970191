//! Frequentist summaries of posteriors over replicated datasets.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::functionals::Theta;
use crate::harness::hpd::HpdRegion;
use crate::posterior::Method;

pub const METRICS_HEADER: [&str; 13] = [
    "method", "model", "n", "replicates", "excluded", "cp", "cp_se", "size", "size_se", "abs_bias", "bias_se", "risk",
    "risk_se",
];

/// What one posterior contributes to the metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateSummary {
    pub covered: bool,
    pub size: f64,
    pub posterior_mean: Theta,
    /// Posterior mean of the squared distance to the truth.
    pub risk: f64,
}

pub fn summarize(draws: &[Theta], region: &HpdRegion, theta0: &Theta) -> Result<ReplicateSummary> {
    if draws.is_empty() {
        return Err(Error::EmptyInput("posterior draws"));
    }
    let d = theta0.dim();
    if draws.iter().any(|t| t.dim() != d) {
        return Err(Error::InvalidParameter("draws and truth differ in dimension".into()));
    }
    let m = draws.len() as f64;
    let mut mean = [0.0; 2];
    let mut risk = 0.0;
    for t in draws {
        for k in 0..d {
            mean[k] += t[k];
            let e = t[k] - theta0[k];
            risk += e * e;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    risk /= m;
    Ok(ReplicateSummary {
        covered: region.contains(theta0),
        size: region.size(),
        posterior_mean: Theta::from_slice(&mean[..d])?,
        risk,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub method: Method,
    pub model: String,
    pub n: usize,
    /// Replicates that produced a posterior.
    pub replicates: usize,
    /// Replicates dropped because the method failed on them.
    pub excluded: usize,
    pub cp: f64,
    pub cp_se: f64,
    pub size: f64,
    pub size_se: f64,
    pub abs_bias: f64,
    pub bias_se: f64,
    pub risk: f64,
    pub risk_se: f64,
}

fn mean_and_se(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let m = v.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (m, 0.0);
    }
    let var = v.map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Coverage, mean region size, absolute bias of the posterior mean and mean
/// quadratic risk, with Monte Carlo standard errors. For two-dimensional
/// targets bias and risk use the Euclidean norm.
pub fn compute_metrics(
    method: Method,
    model: &str,
    n: usize,
    summaries: &[ReplicateSummary],
    excluded: usize,
    theta0: &Theta,
) -> Result<MetricsRow> {
    if summaries.is_empty() {
        return Err(Error::EmptyInput("replicate summaries"));
    }
    let r = summaries.len() as f64;
    let cp = summaries.iter().filter(|s| s.covered).count() as f64 / r;
    let (size, size_se) = mean_and_se(summaries.iter().map(|s| s.size));
    let (risk, risk_se) = mean_and_se(summaries.iter().map(|s| s.risk));
    let d = theta0.dim();
    let mut offset = [0.0; 2];
    for k in 0..d {
        offset[k] = mean_and_se(summaries.iter().map(|s| s.posterior_mean[k])).0 - theta0[k];
    }
    let abs_bias = offset[..d].iter().map(|e| e * e).sum::<f64>().sqrt();
    // Standard error of the bias along its own direction (coordinate-wise if zero).
    let bias_se = if abs_bias > 0.0 {
        let dir: Vec<f64> = offset[..d].iter().map(|e| e / abs_bias).collect();
        mean_and_se(summaries.iter().map(|s| (0..d).map(|k| dir[k] * s.posterior_mean[k]).sum::<f64>())).1
    } else {
        (0..d)
            .map(|k| mean_and_se(summaries.iter().map(|s| s.posterior_mean[k])).1.powi(2))
            .sum::<f64>()
            .sqrt()
    };
    Ok(MetricsRow {
        method,
        model: model.to_string(),
        n,
        replicates: summaries.len(),
        excluded,
        cp,
        cp_se: (cp * (1.0 - cp) / r).sqrt(),
        size,
        size_se,
        abs_bias,
        bias_se,
        risk,
        risk_se,
    })
}

impl MetricsRow {
    /// Row for a method that failed on every replicate.
    pub fn all_excluded(method: Method, model: &str, n: usize, excluded: usize) -> Self {
        Self {
            method,
            model: model.to_string(),
            n,
            replicates: 0,
            excluded,
            cp: f64::NAN,
            cp_se: f64::NAN,
            size: f64::NAN,
            size_se: f64::NAN,
            abs_bias: f64::NAN,
            bias_se: f64::NAN,
            risk: f64::NAN,
            risk_se: f64::NAN,
        }
    }

    /// One-sided 95% lower confidence bound on coverage. Exact when every
    /// replicate covers (`0.05^(1/R)`), normal approximation otherwise.
    pub fn cp_lower_bound_95(&self) -> f64 {
        if self.cp >= 1.0 {
            return 0.05_f64.powf(1.0 / self.replicates as f64);
        }
        (self.cp - 1.644_853_626_951_472_2 * self.cp_se).max(0.0)
    }

    fn record(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.6}");
        vec![
            self.method.to_string(),
            self.model.clone(),
            self.n.to_string(),
            self.replicates.to_string(),
            self.excluded.to_string(),
            f(self.cp),
            f(self.cp_se),
            f(self.size),
            f(self.size_se),
            f(self.abs_bias),
            f(self.bias_se),
            f(self.risk),
            f(self.risk_se),
        ]
    }
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(METRICS_HEADER)?;
    for r in rows {
        out.write_record(r.record())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(r: R) -> Result<Vec<MetricsRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_HEADER {
        return Err(Error::Parse(format!("unexpected metrics header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> { rec[i].parse::<f64>().map_err(|e| Error::Parse(format!("{}: {e}", &rec[i]))) };
        let u = |i: usize| -> Result<usize> { rec[i].parse::<usize>().map_err(|e| Error::Parse(format!("{}: {e}", &rec[i]))) };
        rows.push(MetricsRow {
            method: rec[0].parse()?,
            model: rec[1].to_string(),
            n: u(2)?,
            replicates: u(3)?,
            excluded: u(4)?,
            cp: f(5)?,
            cp_se: f(6)?,
            size: f(7)?,
            size_se: f(8)?,
            abs_bias: f(9)?,
            bias_se: f(10)?,
            risk: f(11)?,
            risk_se: f(12)?,
        });
    }
    Ok(rows)
}
