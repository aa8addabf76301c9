//! Scenarios, configuration, output formats and the batch driver around
//! [`evd_core`].

pub mod checks;
pub mod config;
pub mod converge;
pub mod error;
pub mod ledger;
pub mod runner;
pub mod scenarios;
pub mod snapshot;
pub mod writer;

pub use config::ScenarioConfig;
pub use error::{EvdError, Result};
