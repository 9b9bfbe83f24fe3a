//! Scenario runner, Monte Carlo harness, and file-level CLI for the secured
//! product-matrix storage codes.
//!
//! [`scenario`] describes a run (parameters, adversary placement, event
//! script) with a diffable key=value text form; [`trial`] executes one
//! seeded trial end to end; [`campaign`] aggregates many trials against the
//! `1/q` reference; [`codec`] maps arbitrary byte files onto per-node
//! directories and back; [`cli`] wires everything into the `pmdss` binary.

pub mod campaign;
pub mod cli;
pub mod codec;
pub mod error;
pub mod scenario;
pub mod trial;

pub use campaign::{orthogonality_rate, run_campaign, CampaignStats};
pub use error::SimError;
pub use scenario::{paper_mode_config, Choice, Event, Placement, ScenarioConfig};
pub use trial::{mix_seed, run_trial, TrialResult};
