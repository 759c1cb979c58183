use thiserror::Error;

/// Errors raised by the numerical kernels and the scenario runner.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a formula (negative energy, k <= 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A structurally invalid input, such as a non-normalized spinor.
    #[error("invalid input: {0}")]
    Input(String),

    /// The density (or one factor of a factorized wave) fell below the node floor.
    #[error("wave-function node at x = ({x:.6}, {y:.6}, {z:.6}) A, t = {t:.6} fs (density {density:.3e})")]
    Node {
        x: f64,
        y: f64,
        z: f64,
        t: f64,
        density: f64,
    },

    /// Quadrature or time-window refinement did not reach the requested tolerance.
    #[error("accuracy not reached: {0}")]
    Accuracy(String),

    /// An arrival series with no weight (all |J| samples zero).
    #[error("arrival series is degenerate: {0}")]
    EmptyDistribution(String),

    #[error("config error (line {line}): {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
