//! Comparison posteriors: Bayesian bootstrap, Bayesian empirical likelihood
//! and general (Gibbs-posterior) Bayes.

mod bb;
mod bel;
mod el;
mod gb;

pub use bb::bb_posterior;
pub use bel::{bel_posterior, bel_posterior_with, BelSettings, NigProposal};
pub use el::{profile_el, profile_el_with, ElSettings, ElSolveResult};
pub use gb::{gb_loss, gb_posterior, GbSpec};
