//! CLI error type and its exit-code mapping.

/// Failure modes of a command run.
///
/// The process exit code encodes the outcome: 0 when every asserted
/// invariant holds, 1 for an invariant violation, 2 for usage or parse
/// trouble.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// An input file could not be read as the expected format.
    #[error("parse error: {0}")]
    Parse(String),

    /// Flags or inputs outside the accepted parameter ranges.
    #[error("usage error: {0}")]
    Usage(String),

    /// A checked invariant failed on otherwise well-formed inputs.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) => 1,
            _ => 2,
        }
    }
}
