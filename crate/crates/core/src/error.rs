use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FalconError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("depth {requested} exceeds the configured depth cap {cap}")]
    DepthCapExceeded { requested: usize, cap: usize },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Both stencil neighbours sit on the same staircase plateau.
    #[error("degenerate stencil: {0}")]
    Stencil(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A product or operation would leave the exp-trig-power-log algebra.
    #[error("unsupported term: {0}")]
    UnsupportedTerm(String),

    /// No closed-form antiderivative inside the algebra; use numeric quadrature.
    #[error("no closed-form antiderivative: {0}")]
    NonElementary(String),

    #[error("leading coefficient is zero; equation is not second order")]
    NotSecondOrder,

    #[error("singular initial-value system (wronskian {0:e})")]
    SingularSystem(f64),

    #[error("resonant forcing (characteristic polynomial {0:e} at the forcing rate); use variation of parameters")]
    Resonance(f64),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("not converged: {0}")]
    Unconverged(String),
}

pub type Result<T> = std::result::Result<T, FalconError>;
