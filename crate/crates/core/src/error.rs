//! Error type shared across the crate.

/// Crate-wide error type.
///
/// The variants map onto the CLI exit-code contract: `Argument`, `Capacity`
/// and `Config` are caller mistakes (exit 2), `Numeric` is a solver failure
/// (exit 3), and `Io` wraps filesystem problems (exit 4).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A size limit was exceeded (e.g. qubit counts beyond the supported range).
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// An argument violated a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A numerical routine failed to converge or produced garbage.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Bad configuration (files, grids, specs).
    #[error("invalid config: {0}")]
    Config(String),
    /// Filesystem or serialization failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
