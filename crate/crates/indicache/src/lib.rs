//! Cache selection under stale approximate indicators.
//!
//! Caches advertise their content as compact bit-array indicators (Bloom
//! filters compressed from counting Bloom filters). Advertisements are
//! periodic, so the replica a client holds goes stale and starts returning
//! false negatives on top of the usual false positives. This crate provides:
//!
//! - [`bloom`]: Bloom / counting Bloom filter primitives, sizing, and the
//!   advertised-indicator wire format.
//! - [`staleness`]: bitwise diff between an advertised replica and the live
//!   filter, and the false-negative / false-positive ratio estimators
//!   derived from it.
//! - [`cache`]: LRU caches with admission/eviction hooks and the
//!   controller's key-to-cache placement.
//! - [`beliefs`]: the probability model tying hit ratios, indicator
//!   accuracy, and exclusion probabilities together, plus the client-side
//!   positive-rate estimator.
//! - [`homo`]: the homogeneous selection policy (how many positive / negative
//!   indications to probe) and its closed-form expected-cost analysis.
//! - [`hetero`]: heterogeneous subset selection, exact and greedy solvers,
//!   and the reduction that lets an oblivious solver handle negative
//!   indications.
//! - [`workload`]: synthetic Zipf workloads and trace-file ingestion.
//! - [`sim`]: the trace-driven multi-cache simulation engine comparing
//!   aware, oblivious, oracle-estimated, and perfect-information strategies.

pub mod beliefs;
pub mod bloom;
pub mod cache;
mod error;
mod hashing;
pub mod hetero;
pub mod homo;
pub mod sim;
pub mod staleness;
pub mod workload;

pub use error::{Error, Result};
