use std::path::PathBuf;

use crate::shape::{Label, PartId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{mesh}: no sidecar metadata file at {sidecar}")]
    MissingSidecar { mesh: PathBuf, sidecar: PathBuf },

    #[error("{file}: field `{field}` references part `{part}` which is not in the mesh")]
    DanglingPartReference { file: PathBuf, field: String, part: String },

    #[error("{file}: field `{field}`: contact kind `{kind}` needs {expected} point(s), found {found}")]
    MalformedContactKind {
        file: PathBuf,
        field: String,
        kind: String,
        expected: usize,
        found: usize,
    },

    #[error("{file}: field `{field}`: unknown contact kind `{kind}` (expected quad, pair or single)")]
    UnknownContactKind { file: PathBuf, field: String, kind: String },

    #[error("invalid shape `{shape}`: {reason}")]
    InvalidShape { shape: String, reason: String },

    #[error("unknown part id `{0}`")]
    UnknownPartId(PartId),

    #[error("empty part selection")]
    EmptySelection,

    #[error("degenerate bounding box: {0}")]
    DegenerateBBox(String),

    #[error("no contact points to match")]
    NoContacts,

    #[error("alignment impossible: {0}")]
    AlignmentImpossible(String),

    #[error("none of the adjacent labels of the inserted group exist in shape `{0}`")]
    NoAnchorLabels(String),

    #[error("label `{0}` has no functional space in the model")]
    UnknownLabel(Label),

    #[error("shape `{0}` has no recorded provenance")]
    MissingProvenance(String),

    #[error("no functionality model applies to shape `{0}`")]
    NoApplicableModel(String),

    #[error("unknown shape `{0}`")]
    UnknownShapeId(String),

    #[error("generation {0} has no surviving offspring")]
    EmptyGeneration(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Obj {
        path: PathBuf,
        #[source]
        source: tobj::LoadError,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
