use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point ({x}, {y}) lies outside the background domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("inadmissible fluid state: p = {p}, T = {t}")]
    Inadmissible { p: f64, t: f64 },

    #[error("node {node} has an empty family (solid too sparse for the horizon)")]
    EmptyFamily { node: usize },

    #[error("singular moment matrix at node {node}")]
    SingularMoment { node: usize },

    #[error("PD node {node} at ({x}, {y}) left the background domain at t = {time}")]
    SolidEscaped {
        node: usize,
        x: f64,
        y: f64,
        time: f64,
    },

    #[error("non-finite state at step {step} (t = {time}): {what}")]
    Unstable {
        step: usize,
        time: f64,
        what: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
