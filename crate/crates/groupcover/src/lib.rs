//! Privacy through group identities: a library and simulator for accessing a
//! personalising black-box backend through a pool of shared proxy agents.
//!
//! Users privately select the proxy whose published keyword-pair distribution
//! best matches their own interests, subject to a plausible-deniability
//! constraint, and the simulator measures how deniability and utility loss
//! evolve under global and proxy observers, topic diversity and decoy-query
//! injection.
//!
//! The crate is organised along the pipeline:
//!
//! - [`corpus`]: dictionaries, labelled input-output interactions, synthetic
//!   corpus generation and TSV ingestion.
//! - [`estimators`]: co-occurrence counts, Laplace smoothing and the
//!   bag-of-words probability estimators.
//! - [`privacy`]: sensitive keyword sets, deniability estimators and the
//!   closed-form re-identification and differential-privacy bounds.
//! - [`personalisation`]: the constrained proxy-selection objective and
//!   utility loss.
//! - [`simulation`]: the multi-agent world of users, proxies, backend and
//!   observers.
//! - [`tokens`]: blind session tokens with double-spend prevention.
//! - [`harness`]: scenario configs, sweeps, metrics CSVs and plot data.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod corpus;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod metrics;
pub mod personalisation;
pub mod privacy;
pub mod simulation;
pub mod tokens;

pub use error::{Error, Result};
