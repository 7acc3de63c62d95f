use thiserror::Error;

/// Errors produced by the rough-form calculus and the integrators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` out of range: {message}")]
    OutOfRange { name: &'static str, message: String },

    #[error("unknown kind `{0}`")]
    UnknownKind(String),

    #[error("germ is not alternating; the 2D sewing lemma requires an alternating germ")]
    NonAlternatingGerm,

    #[error("germ evaluated to a non-finite value at level {level}")]
    NonFiniteGermValue { level: u32 },

    #[error("dyadic level {level} exceeds the evaluation budget (max {max})")]
    BudgetExceeded { level: u32, max: u32 },

    #[error("exponent condition violated: {0}")]
    ExponentCondition(String),

    #[error("polygon is not simple (edges {0} and {1} cross)")]
    SelfIntersectingPolygon(usize, usize),

    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),

    #[error("partition rejected: {0}")]
    InvalidPartition(String),

    #[error("degenerate least-squares fit: {0}")]
    DegenerateFit(String),

    #[error("evaluation point too close to the sampled curve (distance {distance:.3e}, guard {guard:.3e})")]
    GuardViolation { distance: f64, guard: f64 },
}
