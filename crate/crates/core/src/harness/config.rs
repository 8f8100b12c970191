//! Experiment configuration and its flat `key = value` text form.
//!
//! ```text
//! # lines starting with '#' are comments
//! experiment = meanvar
//! methods = tab,bb,bel,gb
//! n = 20
//! replicates = 100
//! chain_length = 20000
//! seed = 7
//! ```
//!
//! Keys not given take the defaults for the chosen experiment. `burn_in`
//! defaults to a tenth of `chain_length`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::data::MarModel;
use crate::harness::hpd::DEFAULT_GRID_RESOLUTION;
use crate::posterior::{ChainSettings, Method};
use crate::prior::NormalPrior;
use crate::prob::{DiscretizedNormal, NigParams};
use crate::measure::MarBase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    /// Mean and variance of skewed scalar data.
    Meanvar,
    /// Mean outcome under missingness at random.
    Mar(MarModel),
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Experiment::Meanvar => f.write_str("meanvar"),
            Experiment::Mar(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "meanvar" => Ok(Experiment::Meanvar),
            other => other.parse().map(Experiment::Mar),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub methods: Vec<Method>,
    pub n: usize,
    pub replicates: usize,
    pub chain: ChainSettings,
    /// Dirichlet process concentration of the proposal model.
    pub concentration: f64,
    /// Lattice width of the discretized base measure.
    pub bin_width: f64,
    /// Scalar base measure `N(base_mean, base_variance)` (meanvar).
    pub base_mean: f64,
    pub base_variance: f64,
    /// Base measure for `(x, c, cy)` (MAR): `x ~ N(mar_x_mean, mar_x_variance)`,
    /// `c ~ Bernoulli(mar_p_observed)`, `cy | c = 1 ~ N(0, mar_cy_variance)`.
    pub mar_x_mean: f64,
    pub mar_x_variance: f64,
    pub mar_p_observed: f64,
    pub mar_cy_variance: f64,
    /// Subjective NIG prior on `(mu, sigma2)` (meanvar).
    pub nig: NigParams,
    /// Subjective normal prior on the AIPW mean (MAR).
    pub mar_prior: NormalPrior,
    /// Prior draws used to estimate the proposal-induced density.
    pub prior_q_draws: usize,
    pub hpd_level: f64,
    pub grid_resolution: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Also write every posterior's draws (large).
    pub save_samples: bool,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let (methods, n, bin_width) = match experiment {
            Experiment::Meanvar => (Method::ALL.to_vec(), 20, 1e-5),
            Experiment::Mar(_) => (vec![Method::Tab], 500, 1e-4),
        };
        Self {
            experiment,
            methods,
            n,
            replicates: 100,
            chain: ChainSettings { length: 20_000, burn_in: 2_000 },
            concentration: 0.5,
            bin_width,
            base_mean: 0.0,
            base_variance: 100.0,
            mar_x_mean: 10.0,
            mar_x_variance: 1.0,
            mar_p_observed: 0.2,
            mar_cy_variance: 2500.0,
            nig: NigParams::meanvar_default(),
            mar_prior: NormalPrior { mean: 6.0, variance: 50.0 },
            prior_q_draws: 50_000,
            hpd_level: 0.95,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            seed: 1,
            out: None,
            save_samples: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.replicates < 1 {
            return bad("replicates must be at least 1".into());
        }
        if self.n < 3 {
            return bad(format!("n must be at least 3, got {}", self.n));
        }
        if !(self.hpd_level > 0.0 && self.hpd_level < 1.0) {
            return bad(format!("hpd_level must be in (0, 1), got {}", self.hpd_level));
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if let Experiment::Mar(_) = self.experiment {
            if let Some(m) = self.methods.iter().find(|m| matches!(m, Method::Bel | Method::Gb)) {
                return bad(format!("method {m} is only defined for the meanvar experiment"));
            }
        }
        ChainSettings::new(self.chain.length, self.chain.burn_in)?;
        if self.chain.kept() < crate::harness::hpd::MIN_HPD_2D_SAMPLES {
            return bad("chain keeps too few draws for an HPD region".into());
        }
        if !(self.concentration > 0.0) {
            return bad(format!("concentration must be positive, got {}", self.concentration));
        }
        if self.prior_q_draws < crate::density::MIN_KDE_SAMPLES {
            return bad("prior_q_draws too small".into());
        }
        if self.grid_resolution < 2 {
            return bad("grid_resolution must be at least 2".into());
        }
        self.scalar_base()?;
        self.mar_base()?;
        NigParams::new(self.nig.alpha, self.nig.beta, self.nig.mu0)?;
        NormalPrior::new(self.mar_prior.mean, self.mar_prior.variance)?;
        Ok(())
    }

    pub fn scalar_base(&self) -> Result<DiscretizedNormal> {
        DiscretizedNormal::new(self.base_mean, self.base_variance, self.bin_width)
    }

    pub fn mar_base(&self) -> Result<MarBase> {
        MarBase::new(
            DiscretizedNormal::new(self.mar_x_mean, self.mar_x_variance, self.bin_width)?,
            self.mar_p_observed,
            DiscretizedNormal::new(0.0, self.mar_cy_variance, self.bin_width)?,
        )
    }

    /// Parse the flat text form. Unknown keys are an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected 'key = value'", i + 1)))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key '{}'", i + 1, k.trim())));
            }
        }
        let experiment = match map.remove("experiment") {
            Some(e) => e.parse()?,
            None => Experiment::Meanvar,
        };
        let mut c = Self::defaults(experiment);
        c.apply(map)?;
        c.validate()?;
        Ok(c)
    }

    /// Set keys from `map` onto `self`.
    pub fn apply(&mut self, map: BTreeMap<String, String>) -> Result<()> {
        fn num<T: FromStr>(k: &str, v: &str) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| Error::Parse(format!("{k} = '{v}': {e}")))
        }
        let mut burn_in = None;
        for (k, v) in &map {
            let v = v.as_str();
            match k.as_str() {
                "experiment" => self.experiment = v.parse()?,
                "methods" => {
                    self.methods = v
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?
                }
                "n" => self.n = num(k, v)?,
                "replicates" => self.replicates = num(k, v)?,
                "chain_length" => self.chain.length = num(k, v)?,
                "burn_in" => burn_in = Some(num(k, v)?),
                "concentration" => self.concentration = num(k, v)?,
                "bin_width" => self.bin_width = num(k, v)?,
                "base_mean" => self.base_mean = num(k, v)?,
                "base_variance" => self.base_variance = num(k, v)?,
                "mar_x_mean" => self.mar_x_mean = num(k, v)?,
                "mar_x_variance" => self.mar_x_variance = num(k, v)?,
                "mar_p_observed" => self.mar_p_observed = num(k, v)?,
                "mar_cy_variance" => self.mar_cy_variance = num(k, v)?,
                "prior_alpha" => self.nig.alpha = num(k, v)?,
                "prior_beta" => self.nig.beta = num(k, v)?,
                "prior_mu0" => self.nig.mu0 = num(k, v)?,
                "prior_mean" => self.mar_prior.mean = num(k, v)?,
                "prior_variance" => self.mar_prior.variance = num(k, v)?,
                "prior_q_draws" => self.prior_q_draws = num(k, v)?,
                "hpd_level" => self.hpd_level = num(k, v)?,
                "grid_resolution" => self.grid_resolution = num(k, v)?,
                "seed" => self.seed = num(k, v)?,
                "out" => self.out = Some(PathBuf::from(v)),
                "save_samples" => self.save_samples = num(k, v)?,
                other => return Err(Error::Parse(format!("unknown config key '{other}'"))),
            }
        }
        self.chain.burn_in = burn_in.unwrap_or(self.chain.length / 10);
        Ok(())
    }

    /// Text form accepted by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let methods: Vec<&str> = self.methods.iter().map(Method::as_str).collect();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("experiment", self.experiment.to_string());
        kv("methods", methods.join(","));
        kv("n", self.n.to_string());
        kv("replicates", self.replicates.to_string());
        kv("chain_length", self.chain.length.to_string());
        kv("burn_in", self.chain.burn_in.to_string());
        kv("concentration", format!("{:?}", self.concentration));
        kv("bin_width", format!("{:?}", self.bin_width));
        kv("base_mean", format!("{:?}", self.base_mean));
        kv("base_variance", format!("{:?}", self.base_variance));
        kv("mar_x_mean", format!("{:?}", self.mar_x_mean));
        kv("mar_x_variance", format!("{:?}", self.mar_x_variance));
        kv("mar_p_observed", format!("{:?}", self.mar_p_observed));
        kv("mar_cy_variance", format!("{:?}", self.mar_cy_variance));
        kv("prior_alpha", format!("{:?}", self.nig.alpha));
        kv("prior_beta", format!("{:?}", self.nig.beta));
        kv("prior_mu0", format!("{:?}", self.nig.mu0));
        kv("prior_mean", format!("{:?}", self.mar_prior.mean));
        kv("prior_variance", format!("{:?}", self.mar_prior.variance));
        kv("prior_q_draws", self.prior_q_draws.to_string());
        kv("hpd_level", format!("{:?}", self.hpd_level));
        kv("grid_resolution", self.grid_resolution.to_string());
        kv("seed", self.seed.to_string());
        if let Some(o) = &self.out {
            kv("out", o.display().to_string());
        }
        kv("save_samples", self.save_samples.to_string());
        s
    }
}
