//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Procedural generation could not satisfy its constraints.
    #[error("generation failed: {0}")]
    Generation(String),

    /// A graph query referenced a node that does not exist.
    #[error("unknown node {node} in scene {scene}")]
    UnknownNode { scene: u32, node: u32 },

    /// Parameter vector or input shapes are inconsistent (corrupt checkpoint).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Stored replay logits no longer line up with the revisited trajectory.
    #[error("stale logits at step {step}: stored {stored} candidates, scene has {actual}")]
    StaleLogits {
        step: usize,
        stored: usize,
        actual: usize,
    },

    /// Optimizer received a non-finite gradient.
    #[error("divergence in {context}: non-finite gradient")]
    Divergence { context: String },

    /// A trajectory contains a transition between non-adjacent nodes.
    #[error("illegal trajectory: no edge {from} -> {to}")]
    IllegalTrajectory { from: u32, to: u32 },

    /// Metric computation asked for data that is not populated.
    #[error("result matrix incomplete: {0}")]
    IncompleteMatrix(String),

    /// Bad strategy or experiment configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
