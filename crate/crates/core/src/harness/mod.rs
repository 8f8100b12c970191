//! Simulation studies: data generation, HPD regions, metrics and the
//! replicate driver.

pub mod config;
pub mod data;
pub mod experiment;
pub mod hpd;
pub mod metrics;
pub mod report;

pub use config::{Experiment, ExperimentConfig};
pub use data::{gen_mar, gen_meanvar, Dataset, MarModel};
pub use experiment::{run_experiment, run_posterior, ExperimentOutput, Target};
pub use hpd::{hpd_1d, hpd_2d, HpdRegion};
pub use metrics::{compute_metrics, summarize, MetricsRow, ReplicateSummary};
