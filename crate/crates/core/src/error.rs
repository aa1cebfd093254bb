use thiserror::Error;

/// Errors raised by the model, solver and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{field}` = {value}: {reason}")]
    InvalidParam {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid grid setting `{field}`: {reason}")]
    InvalidGrid { field: &'static str, reason: String },

    #[error("quality of model A ({q_a}) is below the rival's ({q_b})")]
    QualityOrder { q_a: f64, q_b: f64 },

    #[error("value {value} lies outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("oracle grid too large: {field} = {value} exceeds {limit}")]
    OracleGridTooLarge {
        field: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("{0}")]
    Analysis(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
