use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid medium: {0}")]
    InvalidMedium(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("no R0 within the search grid (last failing radius {last_failure})")]
    NoR0 { last_failure: f64 },
    #[error("inconsistent constants: {0}")]
    ConstantsInconsistent(String),
    #[error("phase residual {residual:.3e} above tolerance; retry with step <= {suggested_step:.3e}")]
    Refinement { residual: f64, suggested_step: f64 },
    #[error("unsupported Macdonald order {0}")]
    UnsupportedOrder(f64),
    #[error("singular system (pivot {pivot:.3e}); nearest eigenvalue {nearest_eigenvalue}")]
    Singular { pivot: f64, nearest_eigenvalue: f64 },
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("grid does not resolve r < {alpha}: spacing {spacing}")]
    Resolution { alpha: f64, spacing: f64 },
    #[error("time {t} outside causality window; reflected wave arrives at t = {arrival}")]
    Window { t: f64, arrival: f64 },
    #[error("model error: {0}")]
    Model(String),
    #[error("degenerate test: {0}")]
    Degenerate(String),
    #[error("accuracy: {0}")]
    Accuracy(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
