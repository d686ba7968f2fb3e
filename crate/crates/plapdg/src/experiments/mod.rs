//! Manufactured solutions, convergence studies and report emission.

pub mod fields;
mod report;
mod study;

pub use fields::{forcing, manufactured_solution, Dual2, FieldJet, ScalarField};
pub use report::emit_report;
pub use study::{
    fit_slope, run_h_study, run_p_study, CellResult, ConvergenceReport, FitScale, StudyConfig,
    StudyKind,
};
