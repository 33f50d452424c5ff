use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("capacity exceeded: {what} needs {needed}, limit is {limit}")]
    Capacity {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("zero polynomial has no {0}")]
    ZeroPolynomial(&'static str),

    #[error("precision loss: relative error bound 2^{bound_log2:.1} exceeds tolerance")]
    PrecisionLoss { bound_log2: f64 },

    #[error("undecided: orbit of {point} neither escaped nor was trapped after {iterations} iterations")]
    Undecided { point: String, iterations: usize },

    #[error("guard failure: {0}")]
    Guard(String),

    #[error("Boettcher series diverges: residual {residual:e} at order {order} did not improve on {previous:e}")]
    Divergence {
        order: usize,
        residual: f64,
        previous: f64,
    },

    #[error("root solver failed after {sweeps} sweeps at {precision_bits} bits: worst residual {worst_residual:e}")]
    SolverFailure {
        sweeps: usize,
        precision_bits: u32,
        worst_residual: f64,
    },

    #[error("degree check failed: {0}")]
    DegreeCheck(String),

    #[error("degenerate restriction: {0}")]
    Degenerate(String),

    #[error("invalid report: {0}")]
    InvalidReport(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
