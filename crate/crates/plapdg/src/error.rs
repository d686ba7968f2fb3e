//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("target mesh size {target_h} exceeds the domain diameter {diameter}")]
    TargetTooCoarse { target_h: f64, diameter: f64 },
    #[error("degenerate domain: width and height must be positive")]
    DegenerateDomain,
    #[error("element {element} has zero area")]
    ZeroAreaElement { element: usize },
    #[error("non-conforming mesh: edge ({v0}, {v1}) is shared by {count} elements")]
    NonConforming { v0: usize, v1: usize, count: usize },
    #[error("element {element} references vertex {vertex} out of range (have {n_vertices})")]
    VertexOutOfRange {
        element: usize,
        vertex: usize,
        n_vertices: usize,
    },
    #[error("mesh schema violation: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum FemError {
    #[error("quadrature degree {requested} exceeds the implemented maximum {max}")]
    QuadratureDegreeTooHigh { requested: usize, max: usize },
    #[error("point ({0}, {1}) lies outside element {2}")]
    PointOutsideElement(f64, f64, usize),
    #[error("local polynomial degree must be at least 1, got {0}")]
    DegreeTooLow(usize),
    #[error("coefficient vector length {got} does not match the space dimension {want}")]
    CoefficientLength { got: usize, want: usize },
}

#[derive(Debug, Error)]
pub enum ExponentError {
    #[error("exponent p = {num}/{den} must satisfy p >= 2")]
    OutOfRange { num: i64, den: i64 },
    #[error("denominator must be nonzero")]
    ZeroDenominator,
    #[error("cannot parse '{0}' as a decimal or fractional exponent")]
    Parse(String),
    #[error("operation requires p > 2 but the exponent is in linear mode (p = 2)")]
    LinearMode,
}

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("non-finite integrand on element {0}")]
    NonFiniteElement(usize),
    #[error("non-finite integrand on interface {0}")]
    NonFiniteInterface(usize),
    #[error(transparent)]
    Fem(#[from] FemError),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("linear solve failed: {0}")]
    Linear(String),
    #[error(
        "linear solve did not reach the requested tolerance: relative residual {rel_residual:.3e} > {tol:.3e} (dim {dim})"
    )]
    LinearTolerance {
        rel_residual: f64,
        tol: f64,
        dim: usize,
    },
    #[error("Newton iteration did not converge after {iters} iterations (best residual {best_residual:.3e})")]
    NonConvergence {
        iters: usize,
        best_residual: f64,
        residual_history: Vec<f64>,
    },
    #[error("continuation stage q = {q} failed: {source}")]
    Continuation {
        q: f64,
        #[source]
        source: Box<SolveError>,
    },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("forcing synthesis requires p >= 2, got {0}")]
    ForcingExponent(f64),
    #[error("slope fit needs at least 2 points with distinct abscissae")]
    DegenerateFit,
    #[error("slope fit requires positive values, got {0}")]
    NonPositiveFitValue(f64),
    #[error("study cell (p = {p}, r = {r}, {param} = {value}) failed: {source}")]
    Cell {
        p: f64,
        r: usize,
        param: &'static str,
        value: f64,
        #[source]
        source: Box<SolveError>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
}
