//! Command-line driver for the `blockspoil` library: generate sources,
//! decompose them into near-flat parts, verify chain rules and lemmas, and
//! run the sampled-blocks entropy-rate experiment.
//!
//! All commands read and write structured-text (JSON) files that round-trip
//! bit-exactly, and every randomized step runs on a named, seeded generator
//! recorded in the output.

pub mod error;
pub mod format;
pub mod gen;
pub mod run;
