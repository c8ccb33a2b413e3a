use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum SquidError {
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),

    #[error("grid/discretization error: {0}")]
    Discretization(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("basis mismatch: {0}")]
    Basis(String),

    #[error("parity undefined: {0}")]
    Parity(String),

    #[error("period estimation failed: {0}")]
    Estimation(String),

    #[error("time step too coarse: {0}")]
    StepSize(String),

    #[error("schedule design failed: {reason} (max achievable theta = {max_theta:.6} rad)")]
    Design { reason: String, max_theta: f64 },

    #[error("config error at line {line}, key `{key}`: {msg}")]
    Config { line: usize, key: String, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl SquidError {
    /// Process exit code for the CLI: 2 for config problems, 3 for everything numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            SquidError::Config { .. } => 2,
            _ => 3,
        }
    }

    /// Stable machine-parsable variant name for diagnostic lines.
    pub fn kind(&self) -> &'static str {
        match self {
            SquidError::ParamDomain(_) => "param_domain",
            SquidError::Discretization(_) => "discretization",
            SquidError::Numerical(_) => "numerical",
            SquidError::Basis(_) => "basis",
            SquidError::Parity(_) => "parity",
            SquidError::Estimation(_) => "estimation",
            SquidError::StepSize(_) => "step_size",
            SquidError::Design { .. } => "design",
            SquidError::Config { .. } => "config",
            SquidError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, SquidError>;
