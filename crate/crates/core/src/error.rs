use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible operating point (discriminant {discriminant:.6e})")]
    InfeasibleOperatingPoint { discriminant: f64 },

    #[error("Levenberg-Marquardt did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("solver converged to an infeasible Thevenin solution: {0}")]
    InfeasibleSolution(String),

    #[error("load/voltage algebraic loop diverged at sample {step}")]
    AlgebraicLoopDiverged { step: usize },

    #[error("window has {valid} valid samples, need at least {required}")]
    WindowTooShort { valid: usize, required: usize },

    #[error("every feature row was dropped")]
    EmptyFeatureSet,

    #[error("P and Q are perfectly collinear (r_pq = 1)")]
    DegenerateCollinearity,

    #[error("matrix is numerically rank deficient (condition number {kappa:.3e})")]
    RankDeficient { kappa: f64 },

    #[error("series too short: {len} samples, need {required}")]
    TooShort { len: usize, required: usize },

    #[error("variance-method coefficients admit no real sensitivity pair (column {column})")]
    InconsistentQuadratic { column: usize },

    #[error("estimation infeasible: {0}")]
    EstimationInfeasible(String),

    #[error("empty input")]
    EmptyInput,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
