//! Replicated simulation studies.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::competitors::{bb_posterior, bel_posterior, gb_posterior};
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::functionals::{FunctionalKind, Theta};
use crate::harness::config::{Experiment, ExperimentConfig};
use crate::harness::data::{gen_mar, gen_meanvar, Dataset, MAR_TRUE_MEAN, MEANVAR_TRUE_MEAN, MEANVAR_TRUE_VARIANCE};
use crate::harness::hpd::{hpd_1d, hpd_2d, HpdRegion};
use crate::harness::metrics::{compute_metrics, summarize, write_metrics_csv, MetricsRow, ReplicateSummary};
use crate::measure::{DpSpec, MarBase};
use crate::posterior::{Method, PosteriorSamples};
use crate::prior::NormalPrior;
use crate::prob::{DiscretizedNormal, NigParams};
use crate::rng::RngHandle;
use crate::ta::{estimate_prior_q, ta_posterior_mh, TaModelSpec};

/// Stream index reserved for the proposal-induced prior density.
const PRIOR_Q_STREAM: u64 = u64::MAX;

/// A quantity the metrics are computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    /// Value written to the `model` column, e.g. `meanvar-sigma2`.
    pub name: String,
    /// Coordinates of the posterior draw that make up the target.
    pub coordinates: Vec<usize>,
    pub truth: Theta,
}

impl Target {
    pub fn project(&self, t: &Theta) -> Theta {
        match self.coordinates.as_slice() {
            [k] => Theta::scalar(t[*k]),
            _ => *t,
        }
    }
}

pub fn targets(experiment: Experiment) -> Vec<Target> {
    match experiment {
        Experiment::Meanvar => vec![
            Target {
                name: "meanvar-joint".into(),
                coordinates: vec![0, 1],
                truth: Theta::pair(MEANVAR_TRUE_MEAN, MEANVAR_TRUE_VARIANCE),
            },
            Target {
                name: "meanvar-mu".into(),
                coordinates: vec![0],
                truth: Theta::scalar(MEANVAR_TRUE_MEAN),
            },
            Target {
                name: "meanvar-sigma2".into(),
                coordinates: vec![1],
                truth: Theta::scalar(MEANVAR_TRUE_VARIANCE),
            },
        ],
        Experiment::Mar(m) => vec![Target {
            name: m.to_string(),
            coordinates: vec![0],
            truth: Theta::scalar(MAR_TRUE_MEAN),
        }],
    }
}

/// Everything that does not depend on the dataset: proposal models and,
/// when the augmented method is requested, the estimated prior density of
/// the functional under the proposal.
pub enum Prepared {
    Meanvar {
        spec: TaModelSpec<DiscretizedNormal, NigParams>,
        q_prior: Option<DensityModel>,
    },
    Mar {
        spec: TaModelSpec<MarBase, NormalPrior>,
        q_prior: Option<DensityModel>,
    },
}

pub fn prepare(config: &ExperimentConfig, rng: &mut RngHandle) -> Result<Prepared> {
    config.validate()?;
    let want_q = config.methods.contains(&Method::Tab);
    Ok(match config.experiment {
        Experiment::Meanvar => {
            let dp = DpSpec::with_default_truncation(config.concentration, config.scalar_base()?)?;
            let mut spec = TaModelSpec::new(dp, FunctionalKind::MeanVar, config.nig)?;
            spec.prior_draws_for_q = config.prior_q_draws;
            let q_prior = want_q.then(|| estimate_prior_q(&spec, rng)).transpose()?.map(|q| q.density);
            Prepared::Meanvar { spec, q_prior }
        }
        Experiment::Mar(_) => {
            let dp = DpSpec::with_default_truncation(config.concentration, config.mar_base()?)?;
            let mut spec = TaModelSpec::new(dp, FunctionalKind::aipw(), config.mar_prior)?;
            spec.prior_draws_for_q = config.prior_q_draws;
            let q_prior = want_q.then(|| estimate_prior_q(&spec, rng)).transpose()?.map(|q| q.density);
            Prepared::Mar { spec, q_prior }
        }
    })
}

fn need_q(q: &Option<DensityModel>) -> Result<&DensityModel> {
    q.as_ref()
        .ok_or_else(|| Error::InvalidParameter("prepared without the augmented method".into()))
}

/// Posterior of `method` on one dataset.
pub fn run_method(
    prepared: &Prepared,
    config: &ExperimentConfig,
    method: Method,
    data: &Dataset,
    rng: &mut RngHandle,
) -> Result<PosteriorSamples> {
    let chain = &config.chain;
    match (prepared, data) {
        (Prepared::Meanvar { spec, q_prior }, Dataset::Scalar(x)) => match method {
            Method::Tab => ta_posterior_mh(spec, x, need_q(q_prior)?, chain, rng),
            Method::Bb => bb_posterior(x, &FunctionalKind::MeanVar, chain.kept(), rng),
            Method::Bel => bel_posterior(x, &config.nig, chain, rng),
            Method::Gb => gb_posterior(x, &config.nig, chain, rng),
        },
        (Prepared::Mar { spec, q_prior }, Dataset::Mar(d)) => match method {
            Method::Tab => ta_posterior_mh(spec, d, need_q(q_prior)?, chain, rng),
            Method::Bb => bb_posterior(d, &FunctionalKind::aipw(), chain.kept(), rng),
            other => Err(Error::Unsupported(format!("{other} needs scalar observations"))),
        },
        _ => Err(Error::InvalidParameter("dataset does not match the experiment".into())),
    }
}

/// Draws `config.n` observations for `config.experiment`.
pub fn generate(experiment: Experiment, n: usize, rng: &mut RngHandle) -> Dataset {
    match experiment {
        Experiment::Meanvar => Dataset::Scalar(gen_meanvar(n, rng)),
        Experiment::Mar(m) => Dataset::Mar(gen_mar(m, n, rng)),
    }
}

pub fn region_for(draws: &[Theta], level: f64, resolution: usize) -> Result<HpdRegion> {
    match draws.first().map(Theta::dim) {
        Some(1) => hpd_1d(&draws.iter().map(|t| t[0]).collect::<Vec<_>>(), level),
        Some(_) => hpd_2d(draws, level, resolution),
        None => Err(Error::EmptyInput("posterior draws")),
    }
}

/// One method on one replicate, for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub method: Method,
    pub target: String,
    pub outcome: std::result::Result<ReplicateSummary, String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<MetricsRow>,
    pub records: Vec<ReplicateRecord>,
}

impl ExperimentOutput {
    pub fn row(&self, method: Method, target: &str) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.method == method && r.model == target)
    }
}

/// Stream for `method` within a replicate; independent of which other
/// methods run.
fn method_stream(method: Method) -> u64 {
    1 + Method::ALL.iter().position(|m| *m == method).expect("listed") as u64
}

fn run_replicate(
    prepared: &Prepared,
    config: &ExperimentConfig,
    targets: &[Target],
    replicate: usize,
    rep_rng: &RngHandle,
) -> Vec<ReplicateRecord> {
    let data = generate(config.experiment, config.n, &mut rep_rng.child(0));
    let mut out = Vec::new();
    for &method in &config.methods {
        let mut rng = rep_rng.child(method_stream(method));
        let samples = run_method(prepared, config, method, &data, &mut rng);
        if let (Ok(s), Some(dir), true) = (&samples, &config.out, config.save_samples) {
            if let Err(e) = save_samples(dir, replicate, s) {
                eprintln!("warning: could not save samples for replicate {replicate}: {e}");
            }
        }
        for target in targets {
            let outcome = samples.as_ref().map_err(|e| e.to_string()).and_then(|s| {
                let draws: Vec<Theta> = s.draws.iter().map(|t| target.project(t)).collect();
                let region = region_for(&draws, config.hpd_level, config.grid_resolution).map_err(|e| e.to_string())?;
                summarize(&draws, &region, &target.truth).map_err(|e| e.to_string())
            });
            out.push(ReplicateRecord {
                replicate,
                method,
                target: target.name.clone(),
                outcome,
            });
        }
    }
    out
}

fn save_samples(dir: &Path, replicate: usize, s: &PosteriorSamples) -> Result<()> {
    let d = dir.join("samples");
    fs::create_dir_all(&d)?;
    let f = fs::File::create(d.join(format!("rep{replicate:04}_{}.csv", s.method)))?;
    s.write_csv(BufWriter::new(f))
}

/// Run every replicate (in parallel, each with its own derived random
/// stream), then aggregate in replicate order. Failures of a method on a
/// replicate are recorded and excluded from that method's metrics. When
/// `config.out` is set, outputs are written there.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let master = RngHandle::new(config.seed);
    let prepared = prepare(config, &mut master.child(PRIOR_Q_STREAM))?;
    let targets = targets(config.experiment);
    let per_rep: Vec<Vec<ReplicateRecord>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(&prepared, config, &targets, r, &master.child(r as u64)))
        .collect();
    let records: Vec<ReplicateRecord> = per_rep.into_iter().flatten().collect();

    let mut rows = Vec::new();
    for target in &targets {
        for &method in &config.methods {
            let mine: Vec<&ReplicateRecord> = records
                .iter()
                .filter(|r| r.method == method && r.target == target.name)
                .collect();
            let ok: Vec<ReplicateSummary> = mine.iter().filter_map(|r| r.outcome.as_ref().ok().copied()).collect();
            let excluded = mine.len() - ok.len();
            rows.push(if ok.is_empty() {
                MetricsRow::all_excluded(method, &target.name, config.n, excluded)
            } else {
                compute_metrics(method, &target.name, config.n, &ok, excluded, &target.truth)?
            });
        }
    }
    let output = ExperimentOutput { rows, records };
    if let Some(dir) = &config.out {
        write_outputs(dir, config, &output)?;
    }
    Ok(output)
}

/// `metrics.csv`, `replicates.csv` and `config.txt` under `dir`.
pub fn write_outputs(dir: &Path, config: &ExperimentConfig, output: &ExperimentOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_metrics_csv(&output.rows, BufWriter::new(fs::File::create(dir.join("metrics.csv"))?))?;
    write_records_csv(&output.records, BufWriter::new(fs::File::create(dir.join("replicates.csv"))?))?;
    fs::write(dir.join("config.txt"), config.to_text())?;
    Ok(())
}

pub fn write_records_csv<W: Write>(records: &[ReplicateRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["replicate", "method", "model", "status", "covered", "size", "mean_1", "mean_2", "risk"])?;
    for r in records {
        let mut rec = vec![r.replicate.to_string(), r.method.to_string(), r.target.clone()];
        match &r.outcome {
            Ok(s) => {
                let m = s.posterior_mean.as_slice();
                rec.extend([
                    "ok".to_string(),
                    u8::from(s.covered).to_string(),
                    format!("{:.6}", s.size),
                    format!("{:.6}", m[0]),
                    m.get(1).map(|v| format!("{v:.6}")).unwrap_or_default(),
                    format!("{:.6}", s.risk),
                ]);
            }
            Err(e) => rec.extend([format!("error: {e}"), String::new(), String::new(), String::new(), String::new(), String::new()]),
        }
        out.write_record(rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Posterior for a single dataset under `config`, with the method's
/// random stream derived from `config.seed`.
pub fn run_posterior(config: &ExperimentConfig, method: Method, data: &Dataset) -> Result<PosteriorSamples> {
    let mut c = config.clone();
    c.methods = vec![method];
    c.validate()?;
    let master = RngHandle::new(c.seed);
    let prepared = prepare(&c, &mut master.child(PRIOR_Q_STREAM))?;
    run_method(&prepared, &c, method, data, &mut master.child(method_stream(method)))
}
