use thiserror::Error;

use crate::geometry::Violation;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid {key}: {message}")]
    Invalid { key: String, message: String },
    #[error("port probe of element {element} lies under a patch")]
    ProbeUnderPatch { element: usize },
    #[error("scene is not simulable: {0}")]
    Scene(Violation),
}

impl GeometryError {
    /// Configuration key the error refers to, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            GeometryError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MeshError {
    #[error("invalid mesh parameter: {0}")]
    Parameter(String),
    #[error("polygon {polygon} could not be meshed: {reason}")]
    Unmeshable { polygon: usize, reason: String },
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("no ground edge found for port {port}")]
    PortEdgeNotFound { port: usize },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolverError {
    #[error("singular matrix at pivot {pivot} (condition estimate {condition:.3e})")]
    Singular { pivot: usize, condition: f64 },
    #[error("port {port} is out of range")]
    BadPort { port: usize },
    #[error("port current vanishes; impedance is ill-defined")]
    IllDefinedImpedance,
    #[error("invalid solver setting: {0}")]
    Config(String),
    #[error("at {frequency_ghz} GHz: {source}")]
    AtFrequency {
        frequency_ghz: f64,
        #[source]
        source: Box<SolverError>,
    },
}

/// Crate-wide error for the high level simulation and study entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {what}: {message}")]
    Format { what: String, message: String },
    #[error("invalid {key}: {message}")]
    Config { key: String, message: String },
    #[error("{study} study failed at {parameter} = {value}: {source}")]
    StudyPoint {
        study: String,
        parameter: String,
        value: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }

    pub fn format(what: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format { what: what.into(), message: message.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
