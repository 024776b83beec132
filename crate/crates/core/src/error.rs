use alloc::string::String;

/// Failure classes shared by every operation in the crate.
///
/// The three variants map one-to-one onto the CLI exit codes (2, 4 and 3).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Malformed or out-of-range input: shapes, exponents, grid parameters.
    #[error("invalid input: {0}")]
    Input(String),
    /// A structural requirement of the requested method does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// An iteration failed to converge or hit a degenerate configuration.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! input_err {
    ($($arg:tt)*) => { $crate::error::Error::Input(alloc::format!($($arg)*)) };
}
macro_rules! precondition_err {
    ($($arg:tt)*) => { $crate::error::Error::Precondition(alloc::format!($($arg)*)) };
}
macro_rules! numerical_err {
    ($($arg:tt)*) => { $crate::error::Error::Numerical(alloc::format!($($arg)*)) };
}

pub(crate) use input_err;
pub(crate) use numerical_err;
pub(crate) use precondition_err;
