use thiserror::Error;

/// Errors raised by the laboratory. Each variant maps onto one failure family
/// of the public operations; the CLI and the C ABI translate them into exit
/// codes and status codes respectively.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("stencil error: node {node} is too close to the grid boundary")]
    Stencil { node: usize },

    #[error("sampling error at node {node} ({coords:?}): value {value}")]
    Sampling {
        node: usize,
        coords: Vec<f64>,
        value: f64,
    },

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error(
        "envelope iteration did not converge: residual {residual:e} after {iterations} sweeps"
    )]
    Convergence { residual: f64, iterations: usize },

    #[error("contact-point selection failed: {0}")]
    Selection(String),

    #[error("constant estimation failed: {0}")]
    Estimation(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
