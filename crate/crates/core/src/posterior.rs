//! Posterior draws with provenance, and their CSV form.
//!
//! ```text
//! # method=tab seed=17 length=20000 burn_in=2000 acceptance_rate=0.412 failures=0
//! draw_index,theta_1,theta_2,accepted
//! 0,3.41,10.9,1
//! ```

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::functionals::Theta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Theta-augmented Bayes.
    Tab,
    /// Bayesian bootstrap.
    Bb,
    /// Bayesian empirical likelihood.
    Bel,
    /// General (Gibbs-posterior) Bayes.
    Gb,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Tab, Method::Bb, Method::Bel, Method::Gb];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Tab => "tab",
            Method::Bb => "bb",
            Method::Bel => "bel",
            Method::Gb => "gb",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tab" => Ok(Method::Tab),
            "bb" => Ok(Method::Bb),
            "bel" => Ok(Method::Bel),
            "gb" => Ok(Method::Gb),
            other => Err(Error::Parse(format!("unknown method '{other}'"))),
        }
    }
}

/// Markov chain length and burn-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSettings {
    pub length: usize,
    pub burn_in: usize,
}

impl ChainSettings {
    pub fn new(length: usize, burn_in: usize) -> Result<Self> {
        if length <= burn_in {
            return Err(Error::InvalidParameter(format!(
                "chain length {length} must exceed burn-in {burn_in}"
            )));
        }
        Ok(Self { length, burn_in })
    }

    /// Burn-in of one tenth of the chain.
    pub fn with_length(length: usize) -> Result<Self> {
        Self::new(length, length / 10)
    }

    pub fn kept(&self) -> usize {
        self.length - self.burn_in
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChainDiagnostics {
    /// Fraction of proposals accepted over the whole chain (1 for i.i.d. samplers).
    pub acceptance_rate: f64,
    /// Proposals whose functional could not be evaluated.
    pub failures: usize,
    /// Largest log weight `log p - log q` met on a proposal (TAB only).
    pub max_log_weight: f64,
    /// Proposal widenings performed before the final chain (BEL only).
    pub widenings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub method: Method,
    pub seed: u64,
    pub chain: Option<ChainSettings>,
    pub draws: Vec<Theta>,
    pub accepted: Vec<bool>,
    pub diagnostics: ChainDiagnostics,
}

impl PosteriorSamples {
    pub fn dim(&self) -> usize {
        self.draws.first().map(|t| t.dim()).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Values of coordinate `k` across draws.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|t| t[k]).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let (length, burn_in) = self
            .chain
            .map(|c| (c.length, c.burn_in))
            .unwrap_or((self.draws.len(), 0));
        writeln!(
            w,
            "# method={} seed={} length={} burn_in={} acceptance_rate={} failures={}",
            self.method,
            self.seed,
            length,
            burn_in,
            self.diagnostics.acceptance_rate,
            self.diagnostics.failures
        )?;
        if self.dim() == 2 {
            writeln!(w, "draw_index,theta_1,theta_2,accepted")?;
        } else {
            writeln!(w, "draw_index,theta_1,accepted")?;
        }
        for (i, (t, a)) in self.draws.iter().zip(&self.accepted).enumerate() {
            let vals: Vec<String> = t.as_slice().iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{i},{},{}", vals.join(","), u8::from(*a))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or(Error::EmptyInput("posterior csv"))??;
        let meta = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing metadata line".into()))?;
        let field = |key: &str| -> Result<String> {
            meta.split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .map(str::to_string)
                .ok_or_else(|| Error::Parse(format!("metadata lacks '{key}'")))
        };
        let parse_num = |key: &str| -> Result<f64> {
            field(key)?.parse::<f64>().map_err(|e| Error::Parse(format!("{key}: {e}")))
        };
        let method: Method = field("method")?.parse()?;
        let seed = field("seed")?.parse::<u64>().map_err(|e| Error::Parse(e.to_string()))?;
        let length = parse_num("length")? as usize;
        let burn_in = parse_num("burn_in")? as usize;
        let acceptance_rate = parse_num("acceptance_rate")?;
        let failures = parse_num("failures")? as usize;
        let columns = lines.next().ok_or(Error::EmptyInput("posterior csv header"))??;
        let dim = columns.split(',').filter(|c| c.starts_with("theta_")).count();
        let mut draws = Vec::new();
        let mut accepted = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != dim + 2 {
                return Err(Error::Parse(format!("bad row '{line}'")));
            }
            let vals: Vec<f64> = parts[1..=dim]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(e.to_string())))
                .collect::<Result<_>>()?;
            draws.push(Theta::from_slice(&vals)?);
            accepted.push(parts[dim + 1].trim() == "1");
        }
        let chain = if length > burn_in && burn_in > 0 {
            Some(ChainSettings { length, burn_in })
        } else {
            None
        };
        Ok(Self {
            method,
            seed,
            chain,
            draws,
            accepted,
            diagnostics: ChainDiagnostics {
                acceptance_rate,
                failures,
                ..Default::default()
            },
        })
    }
}
