use thiserror::Error;

/// Errors raised by grid construction, the solver and the field kit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("invalid wave parameters: {0}")]
    InvalidParameters(String),

    #[error("grid too coarse: N = {modes} (min 8), M = {levels} (min 4)")]
    GridTooCoarse { modes: usize, levels: usize },

    #[error("grid has {grid_modes} collocation intervals but state carries {state_modes} modes")]
    InconsistentGrid {
        grid_modes: usize,
        state_modes: usize,
    },

    #[error("state is not finite or violates c > 0, m > 0")]
    InvalidState,

    #[error("sinh argument {argument:.1} exceeds the safe exponent bound; m/c badly scaled or N too large")]
    Overflow { argument: f64 },

    #[error("stagnation guard tripped at node {node}: |grad h|^2 = {value:e}")]
    Stagnation { node: usize, value: f64 },

    #[error("newton failed to converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular jacobian at newton iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("state unresolved at {modes} modes: tail energy fraction {tail:e}")]
    Unresolved { modes: usize, tail: f64 },

    #[error("invalid continuation schedule: {0}")]
    InvalidSchedule(String),

    #[error("non-uniform sample spacing")]
    NonUniformSpacing,

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },

    #[error("insufficient family: crest angle trend needs at least 3 members, got {0}")]
    InsufficientFamily(usize),

    #[error("inverse map did not converge at (x, y) = ({x}, {y})")]
    InverseMap { x: f64, y: f64 },
}

pub type Result<T> = std::result::Result<T, WaveError>;
