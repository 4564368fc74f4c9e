//! Joint angle and delay estimation for multipath signals received by a
//! uniform linear array under Rayleigh (multiplicative) fading.
//!
//! Pipeline: [`pulse::generate_pulse`] → [`pulse::spectrum`] →
//! [`channel::synthesize`] → [`correlation::select_band`] →
//! [`correlation::estimate_correlation`] → [`prony::svd_prony`] →
//! [`delay::beamform`] → [`delay::fit_delay`]. [`pipeline::run_pipeline`]
//! chains them for a [`scenario::ScenarioConfig`].

pub mod channel;
pub mod correlation;
pub mod dataset;
pub mod delay;
pub mod error;
pub mod pipeline;
pub mod prony;
pub mod pulse;
pub mod roots;
pub mod scenario;

pub use error::{JadeError, Result, Stage};
pub use pipeline::{monte_carlo, run_pipeline, MonteCarloReport, RunReport};
pub use scenario::ScenarioConfig;
