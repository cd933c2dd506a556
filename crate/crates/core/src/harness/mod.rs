//! Configuration, reproducible Monte Carlo runners and CSV output for the
//! simulation experiments.

pub mod config;
pub mod experiments;
pub mod run;

pub use config::*;
pub use experiments::*;
pub use run::{clopper_pearson, trial_rng, write_csv, Runner, THREADS_ENV};
