use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tabayes::error::{Error, Result};
use tabayes::harness::config::{Experiment, ExperimentConfig};
use tabayes::harness::experiment::{run_experiment, run_posterior};
use tabayes::harness::report::{load_metrics, render, ReportFormat};
use tabayes::harness::Dataset;
use tabayes::posterior::Method;

#[derive(Parser)]
#[command(name = "tabayes", version, about = "Theta-augmented Bayesian inference and simulation studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replicated simulation study and write metrics.
    Simulate {
        /// meanvar, or mar-1 .. mar-4
        #[arg(long)]
        experiment: Option<Experiment>,
        /// key = value file; flags given here override it
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        replicates: Option<usize>,
        /// Comma-separated subset of tab,bb,bel,gb
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        #[arg(long)]
        chain_length: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; metrics are printed when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write each replicate's posterior draws under <out>/samples
        #[arg(long)]
        save_samples: bool,
    },
    /// Posterior draws for one dataset.
    Posterior {
        #[arg(long)]
        method: Method,
        /// CSV with header `x` (meanvar) or `x,c,cy` (MAR)
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Draws CSV; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the metrics of a finished run.
    Report {
        /// Run directory or metrics.csv
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
    },
}

fn read_config(path: &PathBuf) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            experiment,
            config,
            n,
            replicates,
            methods,
            chain_length,
            burn_in,
            seed,
            out,
            save_samples,
        } => {
            let mut c = match (&config, experiment) {
                (Some(p), _) => read_config(p)?,
                (None, Some(e)) => ExperimentConfig::defaults(e),
                (None, None) => {
                    return Err(Error::InvalidParameter("give --experiment or --config".into()));
                }
            };
            if let Some(e) = experiment {
                c.experiment = e;
            }
            if let Some(m) = methods {
                c.methods = m;
            }
            if let Some(v) = n {
                c.n = v;
            }
            if let Some(v) = replicates {
                c.replicates = v;
            }
            if let Some(v) = chain_length {
                c.chain.length = v;
                c.chain.burn_in = v / 10;
            }
            if let Some(v) = burn_in {
                c.chain.burn_in = v;
            }
            if let Some(v) = seed {
                c.seed = v;
            }
            if out.is_some() {
                c.out = out;
            }
            c.save_samples |= save_samples;
            c.validate()?;
            let output = run_experiment(&c)?;
            match &c.out {
                Some(dir) => eprintln!("wrote {}", dir.display()),
                None => print!("{}", render(&output.rows, ReportFormat::Markdown)?),
            }
            Ok(())
        }
        Command::Posterior { method, data, config, out } => {
            let file = fs::File::open(&data).map_err(|e| Error::Io(format!("{}: {e}", data.display())))?;
            let dataset = Dataset::read_csv(file)?;
            let c = match &config {
                Some(p) => read_config(p)?,
                None => match dataset {
                    Dataset::Scalar(_) => ExperimentConfig::defaults(Experiment::Meanvar),
                    Dataset::Mar(_) => ExperimentConfig::defaults("mar-1".parse()?),
                },
            };
            let samples = run_posterior(&c, method, &dataset)?;
            match out {
                Some(p) => samples.write_csv(BufWriter::new(fs::File::create(&p)?))?,
                None => samples.write_csv(BufWriter::new(io::stdout().lock()))?,
            }
            Ok(())
        }
        Command::Report { input, format } => {
            let rows = load_metrics(&input)?;
            let mut stdout = io::stdout().lock();
            stdout.write_all(render(&rows, format)?.as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
