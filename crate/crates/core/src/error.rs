use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh has {available} boundary nodes, {requested} electrodes requested")]
    TooFewBoundaryNodes { available: usize, requested: usize },

    #[error("electrodes {first} and {second} snap to the same boundary node {node}")]
    DuplicateElectrode {
        first: usize,
        second: usize,
        node: usize,
    },

    #[error("chord between electrodes {}-{} does not intersect the mesh", endpoints.0, endpoints.1)]
    EmptyClip { endpoints: (usize, usize) },

    #[error("element {element} is degenerate (det J = {det:e})")]
    DegenerateElement { element: usize, det: f64 },

    #[error("chord {chord}: {source}")]
    Chord {
        chord: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dipole source at ({x}, {y}) is outside the mesh")]
    SourceOutsideMesh { x: f64, y: f64 },

    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error(
        "no convergence after {iterations} iterations (primal residual {primal:e}, dual residual {dual:e})"
    )]
    NonConvergence {
        iterations: usize,
        primal: f64,
        dual: f64,
    },

    #[error("coarse node {node} is not located in the fine mesh")]
    NodeNotLocated { node: usize },

    #[error("node {node} has no mesh neighbours")]
    IsolatedNode { node: usize },

    #[error("measurement vector has zero norm")]
    ZeroData,

    #[error("field is identically zero")]
    ZeroField,

    #[error("every node was excluded by the zero-magnitude guard")]
    AllNodesExcluded,

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("realization {realization}: {source}")]
    Realization {
        realization: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical pipeline, as opposed to bad input
    /// or configuration.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Chord { source, .. } | Error::Realization { source, .. } => {
                source.is_numerical()
            }
            Error::EmptyClip { .. }
            | Error::DegenerateElement { .. }
            | Error::SourceOutsideMesh { .. }
            | Error::SolverFailure(_)
            | Error::NonConvergence { .. }
            | Error::NodeNotLocated { .. }
            | Error::IsolatedNode { .. }
            | Error::ZeroData
            | Error::ZeroField
            | Error::AllNodesExcluded => true,
            _ => false,
        }
    }
}
