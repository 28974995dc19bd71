//! Headless harness for the wind exhibit simulator: scenario files, batch
//! runs with metrics and frame export, and the UI session server.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod layout;
pub mod render;
pub mod run;
pub mod scenarios;
pub mod serve;
pub mod session;
pub mod snapshot;

pub use config::{Engine, ScenarioConfig, ScenarioError};
pub use run::{run_scenario, RunSummary};
pub use session::Session;
pub use snapshot::Snapshot;
