pub mod density;
pub mod error;
pub mod functionals;
pub mod measure;
pub mod prob;
pub mod rng;
pub mod prior;
pub mod stats;
pub mod posterior;
pub mod ta;
pub mod competitors;
pub mod harness;
