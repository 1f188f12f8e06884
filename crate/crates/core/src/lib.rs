//! CAN bus intrusion detection toolkit.
//!
//! The pipeline ingests CICIoV2024-style decimal frame logs, removes the
//! cyclic-broadcast duplicates, reduces the nine numeric features
//! (PCA, LDA or ANOVA-F selection), trains seven classifier families plus a
//! hybrid voting ensemble, and evaluates them with imbalance-aware metrics.
//!
//! Every stage is a pure function of its inputs and an explicit seed, so a
//! run can be reproduced bit-for-bit apart from wall-clock timings.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod features;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub(crate) mod rng;

pub use error::{Error, Result};
