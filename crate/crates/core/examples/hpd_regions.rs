//! Highest posterior density intervals and planar regions from draws.
//!
//! cargo run --release --example hpd_regions

use tabayes::functionals::Theta;
use tabayes::harness::{hpd_1d, hpd_2d, HpdRegion};
use tabayes::prob::{sample_gamma, sample_normal};
use tabayes::rng::RngHandle;

fn main() -> tabayes::error::Result<()> {
    let mut rng = RngHandle::new(6);
    let skewed: Vec<f64> = (0..20_000).map(|_| sample_gamma(2.0, 1.0, &mut rng)).collect::<Result<_, _>>()?;
    if let HpdRegion::Interval { lo, hi, .. } = hpd_1d(&skewed, 0.95)? {
        println!("Gamma(2, 1): 95% HPD [{lo:.3}, {hi:.3}], equal-tail would be about [0.242, 5.572]");
    }

    let pts: Vec<Theta> = (0..20_000)
        .map(|_| Ok(Theta::pair(sample_normal(0.0, 1.0, &mut rng)?, sample_normal(0.0, 1.0, &mut rng)?)))
        .collect::<tabayes::error::Result<_>>()?;
    for level in [0.5, 0.8, 0.95] {
        let r = hpd_2d(&pts, level, 200)?;
        let exact = -2.0 * std::f64::consts::PI * (1.0 - level).ln();
        println!("standard bivariate normal, level {level}: area {:.2} (exact {exact:.2})", r.size());
    }
    let r = hpd_2d(&pts, 0.95, 200)?;
    println!("origin inside: {}, (3, 3) inside: {}", r.contains(&Theta::pair(0.0, 0.0)), r.contains(&Theta::pair(3.0, 3.0)));
    Ok(())
}
