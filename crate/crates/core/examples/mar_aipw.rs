//! Mean of a response missing at random, as the AIPW functional of the
//! joint law of (x, c, c*y).
//!
//! cargo run --release --example mar_aipw

use tabayes::functionals::{aipw, AipwSettings};
use tabayes::harness::config::{Experiment, ExperimentConfig};
use tabayes::harness::experiment::run_posterior;
use tabayes::harness::{gen_mar, hpd_1d, Dataset, MarModel};
use tabayes::measure::DiscreteMeasure;
use tabayes::posterior::{ChainSettings, Method};
use tabayes::rng::RngHandle;

fn main() -> tabayes::error::Result<()> {
    let model = MarModel::new(1)?;
    let data = gen_mar(model, 500, &mut RngHandle::new(5));
    let observed: Vec<f64> = data.iter().filter(|p| p.c).map(|p| p.cy).collect();
    let naive = observed.iter().sum::<f64>() / observed.len() as f64;
    let plug_in = aipw(&DiscreteMeasure::empirical(data.clone())?, &AipwSettings::default())?;
    println!("{model}: {} of {} responses observed", observed.len(), data.len());
    println!("complete-case mean {naive:.3}, empirical AIPW {:.3}, truth 6", plug_in.value);

    let mut config = ExperimentConfig::defaults(Experiment::Mar(model));
    config.chain = ChainSettings::with_length(5_000)?;
    for method in [Method::Tab, Method::Bb] {
        let s = run_posterior(&config, method, &Dataset::Mar(data.clone()))?;
        let v = s.component(0);
        let region = hpd_1d(&v, 0.95)?;
        println!(
            "{method:>4}: posterior mean {:.3}, 95% HPD length {:.3}",
            v.iter().sum::<f64>() / v.len() as f64,
            region.size()
        );
    }
    Ok(())
}
