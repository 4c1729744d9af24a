use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid error: {0}")]
    Grid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("integration accuracy error: {0}")]
    IntegrationAccuracy(String),
    #[error("time resolution error: {0}")]
    TimeResolution(String),
    #[error("flow accuracy error: {0}")]
    FlowAccuracy(String),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("step {q} failed: {source}")]
    Step { q: usize, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;
