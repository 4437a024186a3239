use thiserror::Error;

/// Errors produced by the solvers and the configuration loader.
#[derive(Error, Debug)]
pub enum SolverError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("rate function returned a non-finite value at sigma = {sigma}")]
    NonFiniteEvaluation { sigma: f64 },

    #[error("shooting did not converge within {max_iter} iterations: {context}")]
    NoConvergence { max_iter: usize, context: String },

    #[error("integration reached r_max = {r_max} without crossing the boundary value")]
    EventNotReached { r_max: f64 },

    #[error("radius {radius} lies below the critical radius {critical}")]
    OutOfRange { radius: f64, critical: f64 },

    #[error("no sign change found while growing the bracket: {0}")]
    BracketFailure(String),

    #[error("flux coefficient {k} is not admissible (requires 0 <= K < f(sigmaQ)/3 = {limit})")]
    InadmissibleK { k: f64, limit: f64 },

    #[error("model parameters are not the all-linear preset: {0}")]
    PresetMismatch(String),

    #[error("time integration step underflowed at t = {t} (step {h})")]
    StepFailure { t: f64, h: f64 },

    #[error("failed to read configuration: {0}")]
    Config(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;
