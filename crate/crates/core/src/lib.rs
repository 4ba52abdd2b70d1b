//! Directed hypergraph cellular sheaves, the directed sheaf hypergraph
//! Laplacian, and diffusion networks built on it.

pub mod block;
pub mod data;
pub mod error;
pub mod hypergraph;
pub mod instances;
pub mod io;
pub mod laplacian;
pub mod linalg;
pub mod model;
pub mod reference;
pub mod sheaf;
pub mod spectral;
pub mod theorems;

pub use error::{Error, Result};
pub use hypergraph::{DirectedGraph, DirectedHypergraph, Hyperedge, Incidence, Role};
pub use laplacian::{build_laplacian, build_laplacian_with, DegreeMode, LaplacianBundle};
pub use sheaf::{MapShape, SheafAssignment, SheafConfig};
