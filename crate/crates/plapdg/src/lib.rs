//! Robust interior-penalty discontinuous Galerkin solver for the
//! p-Laplacian Dirichlet problem on 2D simplicial meshes, with a
//! verification suite for the trace-inverse estimates behind the penalty
//! construction and a harness for h- and p-version convergence studies.

pub mod assembly;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod mesh;
pub mod penalty;
pub mod solver;
pub mod verify;
