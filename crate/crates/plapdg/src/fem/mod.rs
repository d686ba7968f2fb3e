//! Polynomial bases, quadrature and DG function spaces.

pub mod basis;
pub mod quadrature;
pub mod space;

pub use basis::{basis_size, tabulate, BasisTable};
pub use quadrature::{gauss_legendre_unit, quadrature_rule, QuadRule, Shape};
pub use space::{project, DgFunction, DgSpace, ElementMap};
