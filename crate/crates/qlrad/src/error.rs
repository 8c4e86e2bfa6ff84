use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Syntax error while parsing a potential expression.
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    /// A potential evaluated to a non-finite value, or was evaluated
    /// outside its domain.
    #[error("evaluation error at r = {r}: {message}")]
    Eval { r: f64, message: String },

    /// Problem parameters violate a structural invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A quadrature or norm overflowed. Usually means the grid reaches
    /// into a region where a weight is astronomically large.
    #[error("overflow in {context}; shrink the domain or the exponent")]
    Overflow { context: String },

    /// An exponent lies outside the admissible window it must belong to.
    #[error("exponent out of window: {0}")]
    OutOfWindow(String),

    /// An iterative method did not reach its tolerance.
    #[error("no convergence: {message} (best residual {best_residual:.3e})")]
    NonConvergence { message: String, best_residual: f64 },

    /// Configuration file problems (I/O, deserialization, missing sections).
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
