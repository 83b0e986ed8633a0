//! Exact information-theoretic computations on finite joint distributions.
//!
//! The crate models a source as `t` blocks over a common alphabet, exposes
//! entropy measures (Shannon, min-entropy, worst-case/average conditional,
//! smooth), and builds spoiling partitions: few-bit disclosures that split
//! the domain into parts whose conditional block distributions are nearly
//! flat. On top of that sit chain-rule verifiers and a sampling experiment
//! showing that randomly chosen blocks keep the source's entropy rate.
//!
//! `no_std`-compatible (with `alloc`); enable the `libm` feature instead of
//! `std` on bare targets.
#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("enable the `std` feature or the `libm` feature");

extern crate alloc;

mod math;

pub mod chain;
pub mod dist;
pub mod entropy;
pub mod error;
pub mod sampling;
pub mod spoiling;

pub use dist::{EventSet, JointDistribution, PrefixMarginals, SurpriseVector, Symbol};
pub use error::{Error, Result};
pub use sampling::{NZReport, SamplerKind, SamplerSpec, ToeplitzExtractor};
pub use spoiling::{SpoilParams, SpoilingPartition};
