//! Shared error type for every fallible operation in the crate.

/// Errors reported by constructors and operations.
///
/// Variants carry the offending values so callers can report precisely what
/// was rejected without re-deriving it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A probability entry is negative.
    #[error("probability at index {index} is negative ({value})")]
    NegativeMass { index: usize, value: f64 },

    /// A probability entry is NaN or infinite.
    #[error("probability at index {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },

    /// Probabilities sum too far from one to be rescaled.
    #[error("probabilities sum to {sum}, outside the rescale tolerance")]
    NotNormalized { sum: f64 },

    /// The requested outcome space exceeds the dense-table cap.
    #[error("outcome space of {outcomes} entries exceeds the cap of {cap}")]
    TooLarge { outcomes: u128, cap: u64 },

    /// A slice length does not match what the structure requires.
    #[error("length {got} does not match expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    /// A block index is outside `0..blocks`.
    #[error("block {block} out of range for {blocks} blocks")]
    BlockOutOfRange { block: usize, blocks: usize },

    /// A symbol is outside `0..alphabet_size`.
    #[error("symbol {symbol} out of range for alphabet of size {alphabet_size}")]
    SymbolOutOfRange { symbol: u32, alphabet_size: usize },

    /// A marginal or conditioning index set is empty.
    #[error("index set is empty")]
    EmptyIndexSet,

    /// Conditioning prefix has zero probability.
    #[error("conditioning prefix has probability zero")]
    ZeroPrefix,

    /// Surprise requested for an outcome of probability zero.
    #[error("outcome has probability zero")]
    ZeroOutcome,

    /// An event used for conditioning has zero mass.
    #[error("event has probability zero")]
    ZeroEvent,

    /// Two tables that must share a shape do not.
    #[error("table shapes differ: {left} vs {right}")]
    ShapeMismatch { left: usize, right: usize },

    /// Epsilon parameter outside its valid range.
    #[error("epsilon {value} outside valid range")]
    InvalidEpsilon { value: f64 },

    /// Delta parameter outside its valid range.
    #[error("delta {value} outside valid range")]
    InvalidDelta { value: f64 },

    /// Blocks assigned to both sides of a split, or out of range.
    #[error("index sets overlap or fall outside the block range")]
    BadSplit,

    /// Conditioning set not contained in the blocks before the target block.
    #[error("index set is not a subset of the blocks before block {block}")]
    BadIndexSet { block: usize },

    /// Partition does not describe the given distribution.
    #[error("partition was not derived from this distribution: {detail}")]
    PartitionMismatch { detail: &'static str },

    /// Sampler seed outside the enumerated seed space.
    #[error("seed {seed} out of range for {count} seeds")]
    SeedOutOfRange { seed: u64, count: u64 },

    /// Function average below the promised mean.
    #[error("function average {average} is below mu = {mu}")]
    AverageBelowMu { average: f64, mu: f64 },

    /// Catch-all for parameter combinations the operation cannot accept.
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
