//! Data-generating mechanisms and dataset CSV files.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measure::MarPoint;
use crate::prob::{expit, sample_bernoulli, sample_normal, std_normal_cdf};
use crate::rng::RngHandle;

pub const MEANVAR_TRUE_MEAN: f64 = 3.5;
pub const MEANVAR_TRUE_VARIANCE: f64 = 10.75;
pub const MAR_TRUE_MEAN: f64 = 6.0;

/// Skewed scalar data: `X = -6 Z + T`, `T ~ N(5, 4)`, `Z ~ Bernoulli(0.25)`.
pub fn gen_meanvar(n: usize, rng: &mut RngHandle) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z = sample_bernoulli(0.25, rng).expect("valid probability");
            let t = sample_normal(5.0, 4.0, rng).expect("valid variance");
            t - if z { 6.0 } else { 0.0 }
        })
        .collect()
}

/// Missing-at-random mechanisms. `X ~ N(10, 100)`, `e ~ N(0, 4)`; the
/// outcome mean is linear (1, 3) or quadratic (2, 4) in `X`, and the
/// observation probability is logistic (1, 2) or probit (3, 4) in `(X - 10) / 10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MarModel {
    One = 1,
    Two = 2,
    Three = 3,
    Four = 4,
}

impl MarModel {
    pub const ALL: [MarModel; 4] = [MarModel::One, MarModel::Two, MarModel::Three, MarModel::Four];

    pub fn new(id: u8) -> Result<Self> {
        match id {
            1 => Ok(MarModel::One),
            2 => Ok(MarModel::Two),
            3 => Ok(MarModel::Three),
            4 => Ok(MarModel::Four),
            _ => Err(Error::InvalidParameter(format!("MAR model id must be 1-4, got {id}"))),
        }
    }

    pub fn id(&self) -> u8 {
        *self as u8
    }

    pub fn outcome_mean(&self, x: f64) -> f64 {
        match self {
            MarModel::One | MarModel::Three => 1.0 + 0.5 * x,
            MarModel::Two | MarModel::Four => 0.006 * (x * x + 40.0 * x + 400.0),
        }
    }

    pub fn observation_probability(&self, x: f64) -> f64 {
        let u = (x - 10.0) / 10.0;
        match self {
            MarModel::One | MarModel::Two => expit(u),
            MarModel::Three | MarModel::Four => std_normal_cdf(u),
        }
    }
}

/// Triples `(x, c, c * y)` from `model`.
pub fn gen_mar(model: MarModel, n: usize, rng: &mut RngHandle) -> Vec<MarPoint> {
    (0..n)
        .map(|_| {
            let x = sample_normal(10.0, 100.0, rng).expect("valid variance");
            let y = model.outcome_mean(x) + sample_normal(0.0, 4.0, rng).expect("valid variance");
            if sample_bernoulli(model.observation_probability(x), rng).expect("probability in [0, 1]") {
                MarPoint::observed(x, y)
            } else {
                MarPoint::missing(x)
            }
        })
        .collect()
}

/// A dataset as read from or written to CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    /// Header `x`.
    Scalar(Vec<f64>),
    /// Header `x,c,cy`.
    Mar(Vec<MarPoint>),
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Scalar(v) => v.len(),
            Dataset::Mar(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        match self {
            Dataset::Scalar(v) => {
                out.write_record(["x"])?;
                for x in v {
                    out.write_record([format!("{x:?}")])?;
                }
            }
            Dataset::Mar(v) => {
                out.write_record(["x", "c", "cy"])?;
                for p in v {
                    out.write_record([format!("{:?}", p.x), u8::from(p.c).to_string(), format!("{:?}", p.cy)])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let num = |s: &str, line: usize| -> Result<f64> {
            let v = s.parse::<f64>().map_err(|e| Error::Parse(format!("line {line}: '{s}': {e}")))?;
            if !v.is_finite() {
                return Err(Error::NonFinite("dataset value"));
            }
            Ok(v)
        };
        match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
            ["x"] => {
                let mut v = Vec::new();
                for (i, rec) in rdr.records().enumerate() {
                    v.push(num(&rec?[0], i + 2)?);
                }
                Ok(Dataset::Scalar(v))
            }
            ["x", "c", "cy"] => {
                let mut v = Vec::new();
                for (i, rec) in rdr.records().enumerate() {
                    let rec = rec?;
                    let line = i + 2;
                    let x = num(&rec[0], line)?;
                    let cy = num(&rec[2], line)?;
                    let p = match &rec[1] {
                        "1" => MarPoint::observed(x, cy),
                        "0" if cy == 0.0 => MarPoint::missing(x),
                        "0" => return Err(Error::Parse(format!("line {line}: cy must be 0 when c = 0"))),
                        other => return Err(Error::Parse(format!("line {line}: c must be 0 or 1, got '{other}'"))),
                    };
                    v.push(p);
                }
                Ok(Dataset::Mar(v))
            }
            other => Err(Error::Parse(format!("unrecognised dataset header {other:?}; expected 'x' or 'x,c,cy'"))),
        }
    }
}

impl fmt::Display for MarModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mar-{}", self.id())
    }
}

impl FromStr for MarModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let id = s
            .trim()
            .strip_prefix("mar-")
            .and_then(|d| d.parse::<u8>().ok())
            .ok_or_else(|| Error::Parse(format!("unknown MAR model '{s}'")))?;
        MarModel::new(id)
    }
}
