use std::path::PathBuf;

use thiserror::Error;

use crate::ring::{EdgeId, NodeId};

#[derive(Debug, Error)]
pub enum Error {
    #[error("a ring needs at least 2 nodes, got {0}")]
    RingTooSmall(usize),
    #[error("well-initiated runs need strictly fewer robots than nodes (k < n), got k={k}, n={n}")]
    TooManyRobots { k: usize, n: usize },
    #[error("at least one robot is required")]
    NoRobots,
    #[error("initial configuration is not towerless: two robots start on node {0}")]
    DuplicatePosition(NodeId),
    #[error("node {node} does not exist on a ring of {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("edge {edge} does not exist on a ring with {count} edges")]
    EdgeOutOfRange { edge: EdgeId, count: usize },
    #[error("expected {expected} {what}, got {got}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("adaptive schedule queried at round {0} without an observed configuration")]
    MissingObservation(u64),
    #[error("{adversary} confiner needs exactly {expected} robot(s), observed {got}")]
    ConfinerRobotCount {
        adversary: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{adversary} confiner needs a ring of at least {min} nodes, got {n}")]
    ConfinerRingTooSmall {
        adversary: &'static str,
        min: usize,
        n: usize,
    },
    #[error("{adversary} confiner lost track of its robots at round {round}")]
    ConfinerDesync { adversary: &'static str, round: u64 },
    #[error("schedule script line {line}: {msg}")]
    Script { line: usize, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Errors raised while validating inputs, as opposed to runtime faults.
    pub fn is_config_error(&self) -> bool {
        !matches!(
            self,
            Error::MissingObservation(_) | Error::ConfinerDesync { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
