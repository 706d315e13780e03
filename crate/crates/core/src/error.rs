use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("truncation radius {radius} is smaller than the largest well norm {min}")]
    RadiusCutsWells { radius: f64, min: f64 },

    #[error("table box must contain both wells with a margin of {margin}")]
    TableBox { margin: f64 },

    #[error("lattice oracle supports state dimension <= 3, got {0}")]
    OracleDimension(usize),

    #[error("grid spacing {spacing} exceeds the resolution limit {limit} ({what})")]
    UnderResolved {
        spacing: f64,
        limit: f64,
        what: &'static str,
    },

    #[error("node {node} holds a value that is neither well")]
    NotWellValued { node: usize },

    #[error("field shapes do not match")]
    ShapeMismatch,

    #[error("sharp interface touches a Dirichlet face")]
    InterfaceOnDirichletFace,

    #[error("step size underflow after {steps} accepted steps")]
    StepUnderflow { steps: usize },

    #[error("fit needs at least 3 positive samples, got {0}")]
    TooFewSamples(usize),

    #[error("every sample is zero; nothing to fit")]
    AllZero,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }
}
