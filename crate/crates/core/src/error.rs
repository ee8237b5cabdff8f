use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("perturbation is degenerate at t = {t}: endpoint slope {slope:e} is too small")]
    DegeneratePerturbation { t: f64, slope: f64 },

    #[error("perturbation vanishes inside the interval near t = {t}")]
    InteriorZero { t: f64 },

    #[error(
        "perturbation does not vanish at endpoint t = {t}: |phi| = {value:e} exceeds tol {tol:e}"
    )]
    EndpointMismatch { t: f64, value: f64, tol: f64 },

    #[error("quadratic Taylor remainder at endpoint t = {t} is not bounded (ratio {ratio:e})")]
    RoughEndpoint { t: f64, ratio: f64 },

    #[error("t = {t} lies outside [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("shift inversion at y = {y} did not converge after {iterations} iterations")]
    NoConvergence { y: f64, iterations: usize },

    #[error(
        "|alpha| = {alpha} must satisfy 0 < |alpha| < alpha_max = 1/||phi||_Lip = {alpha_max}"
    )]
    AmplitudeTooLarge { alpha: f64, alpha_max: f64 },

    #[error("delta = {delta} must lie in (0, 1/2)")]
    InvalidDelta { delta: f64 },

    #[error("phi falls below the trapezoid lower bound at t = {t} (slack {slack:e}); refine the probe grid")]
    TrapezoidViolation { t: f64, slack: f64 },

    #[error(
        "w does not vanish at the fixed point {t} (|w| = {value:e}); the orbit series diverges"
    )]
    NoDecay { t: f64, value: f64 },

    #[error("orbit series from t = {t} did not reach its tail bound within {steps} steps")]
    TailStall { t: f64, steps: usize },

    #[error("w is not in the range: bilateral spread {spread:e}, endpoint values {w_minus:e}, {w_plus:e}")]
    SolvabilityRequired {
        spread: f64,
        w_minus: f64,
        w_plus: f64,
    },

    #[error("residual {residual:e} exceeds tolerance {tol:e}")]
    ToleranceUnreachable { residual: f64, tol: f64 },

    #[error("orbit walk from t = {t} hit the step cap; distance to the fixed point {distance:e}")]
    OrbitExhausted { t: f64, distance: f64 },

    #[error("order p = {p} needs derivatives to {needed}, field supplies {p_max}")]
    OrderUnsupported {
        p: usize,
        needed: usize,
        p_max: usize,
    },

    #[error("no contraction margin found down to radius {radius:e}")]
    ContractionNotFound { radius: f64 },

    #[error("grid of {points} points is too coarse, need at least {needed}")]
    GridTooCoarse { points: usize, needed: usize },

    #[error("unsupported field: {0}")]
    UnsupportedField(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
