use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated its domain invariant. `field` names the offending input.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("sampling grids differ ({left} vs {right} points or mismatched positions)")]
    GridMismatch { left: usize, right: usize },

    #[error("profile is not normalized: norm² = {norm_sq} (tolerance {tolerance})")]
    NotNormalized { norm_sq: f64, tolerance: f64 },

    #[error("mode order {order} exceeds basis max_order {max_order}")]
    ModeOutOfRange { order: usize, max_order: usize },

    /// A modulation pushed a mode coefficient beyond the first-order regime.
    #[error("first-order encoding invalid: |c| = {magnitude:.3e} exceeds hard limit {limit:.3e}")]
    EncodingOutOfRange { magnitude: f64, limit: f64 },

    #[error("uncertainty product {product:.6} < 1 for quadrature pair")]
    UncertaintyViolation { product: f64 },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

/// Rejects non-finite or non-positive values.
pub(crate) fn ensure_positive(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn ensure_unit_interval(field: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(invalid(field, format!("must lie in [0, 1], got {value}")))
    }
}
