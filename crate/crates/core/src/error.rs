use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by every module in this crate.
///
/// The first group covers data and argument problems; the second group covers
/// numerical failures raised by the optimization and metric paths.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed container: bad magic bytes, header fields or version.
    #[error("format error: {0}")]
    Format(String),
    /// Payload size disagrees with what the header promised.
    #[error("length error: {0}")]
    Length(String),
    /// Image or patch geometry violation (window exceeds image, K != w^2, ...).
    #[error("geometry error: {0}")]
    Geometry(String),
    /// Argument outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Incompatible matrix dimensions.
    #[error("shape error: {0}")]
    Shape(String),
    /// A factorization met a numerically singular matrix.
    #[error("conditioning error: {0}")]
    Conditioning(String),
    /// The tuning nonlinearity underflowed past the documented guard.
    #[error("saturation error: {0}")]
    Saturation(String),
    /// Backtracking found no decreasing step within the shrink budget.
    #[error("stall error: {0}")]
    Stall(String),
    /// Rows expected linearly independent were not.
    #[error("rank error: {0}")]
    Rank(String),
    /// The sample set carries no usable signal (zero variance, zero-norm filter).
    #[error("degenerate error: {0}")]
    Degenerate(String),
}

impl Error {
    /// True for errors raised by numerical routines rather than by bad input
    /// data or arguments. The CLI maps the two classes to distinct exit codes.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Conditioning(_)
                | Error::Saturation(_)
                | Error::Stall(_)
                | Error::Rank(_)
                | Error::Degenerate(_)
        )
    }
}
