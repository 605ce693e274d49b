use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-manifold edge ({0}, {1}) shared by {2} triangles")]
    NonManifoldEdge(usize, usize, usize),

    #[error("inconsistent winding on edge ({0}, {1})")]
    InconsistentWinding(usize, usize),

    #[error("degenerate triangle {0} (area {1:e})")]
    DegenerateTriangle(usize, f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("mesh has no interior edges")]
    NoInteriorEdges,

    #[error("unknown object id {0}")]
    UnknownObject(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is numerically singular (pivot {pivot} of {dim}, |u| = {value:e})")]
    Singular { pivot: usize, dim: usize, value: f64 },

    #[error("at kappa = {kappa:e}: {source}")]
    AtNode {
        kappa: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("κ integration aborted after {} completed nodes: {source}", completed.len())]
    Aborted {
        completed: Vec<crate::casimir::NodeSample>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_node(self, kappa: f64) -> Self {
        Error::AtNode {
            kappa,
            source: Box::new(self),
        }
    }
}
