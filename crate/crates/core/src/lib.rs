//! Dynamic-grouping climate negotiation on a compact climate-economy model.
//!
//! Twenty-seven regions are organised into nine groups of three. Each step
//! the groups exchange (mitigation, savings) requests, vote on the requests
//! they receive, split the resulting mitigation floor among members and then
//! act; members who keep disagreeing with their group can be swapped with a
//! similar region elsewhere. Bilateral and no-negotiation baselines run on the
//! same engine so the methods can be compared on temperature, output and the
//! hypervolume of the two normalised indices.

pub mod agents;
pub mod calibration;
pub mod config;
pub mod engine;
pub mod error;
pub mod grouping;
pub mod harness;
pub mod metrics;
pub mod negotiation;
pub mod report;

pub use config::{Scenario, ScenarioConfig};
pub use error::{Error, Result};
pub use harness::{replay, run_comparison, run_episode, RunRecord};
