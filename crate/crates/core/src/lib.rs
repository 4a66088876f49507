//! Weak supervision for sequence tagging: dictionaries and rule
//! definitions emit per-token votes, a label model denoises the votes into
//! probabilistic labels, and a noise-aware linear classifier trains on the
//! result.
//!
//! The pipeline runs ingest -> label -> fit -> predict -> train -> eval,
//! with a synthetic-task oracle standing in for licensed corpora. See the
//! `pipeline` module and the `ontolabel` binary for the end-to-end driver.

pub mod corpus;
pub mod dates;
pub mod endmodel;
pub mod error;
pub mod labelers;
pub mod labelmodel;
pub mod metrics;
pub mod ontology;
pub mod pipeline;
pub mod presets;
pub mod synthetic;

pub use error::{Error, Result};
