use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("hyperedge {edge}: vertex {vertex} out of range for {num_vertices} vertices")]
    VertexOutOfRange {
        edge: usize,
        vertex: usize,
        num_vertices: usize,
    },
    #[error("vertex {vertex} out of range for {num_vertices} vertices")]
    BadVertex { vertex: usize, num_vertices: usize },
    #[error("hyperedge {edge}: vertex {vertex} appears in both tail and head")]
    OverlappingSets { edge: usize, vertex: usize },
    #[error("hyperedge {edge}: duplicate vertex {vertex}")]
    DuplicateVertex { edge: usize, vertex: usize },
    #[error("hyperedge {edge}: degree {degree} is below 2")]
    DegenerateHyperedge { edge: usize, degree: usize },
    #[error("hyperedge {edge}: weight {weight} is not finite")]
    BadWeight { edge: usize, weight: f64 },
    #[error("hyperedge index {edge} out of range for {num_edges} hyperedges")]
    BadEdge { edge: usize, num_edges: usize },
    #[error("arc {arc}: {reason}")]
    BadArc { arc: usize, reason: String },
    #[error("vertex {vertex} is not incident to hyperedge {edge}")]
    NotIncident { vertex: usize, edge: usize },
    #[error("sheaf does not match hypergraph: {0}")]
    SheafMismatch(String),
    #[error("degree block of vertex {vertex} is singular")]
    SingularDegree { vertex: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("dense dimension {dim} exceeds the cap of {cap}; use the matrix-free operators")]
    DenseTooLarge { dim: usize, cap: usize },
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training mask selects no vertices")]
    EmptyMask,
    #[error("non-finite loss at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
