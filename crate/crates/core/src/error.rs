use thiserror::Error;

/// Errors raised by model construction, analysis and experiment runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("model rejected: {0}")]
    ModelRejected(String),
    #[error("law at {vertex} is not normalized: {detail}")]
    Normalization { vertex: String, detail: String },
    #[error("degenerate class {class:?}: every member places exactly one child inside the class almost surely")]
    DegenerateClass { class: Vec<String> },
    #[error("row sum at {vertex} is unbounded ({sum})")]
    UnboundedRowSum { vertex: String, sum: f64 },
    #[error("radius {requested} exceeds the space cap {cap}")]
    RadiusCap { requested: u32, cap: u32 },
    #[error("ball of radius {radius} exceeds the vertex budget of {budget}")]
    VertexBudget { radius: u32, budget: usize },
    #[error("horizon needs radius {needed} but the ball has radius {radius}")]
    HorizonExceedsBall { needed: u32, radius: u32 },
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("fiber mismatch between {x} and {x_prime}: {detail}")]
    FiberMismatch { x: String, x_prime: String, detail: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("matrix is reducible")]
    Reducible,
    #[error("coupling broken in trial {trial} at generation {generation}: {detail}")]
    CouplingBroken { trial: u64, generation: u64, detail: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("task failed: {0}")]
    TaskFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
