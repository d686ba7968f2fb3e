//! Quadrature rules on the reference segment [0, 1] and the reference
//! triangle {x, y >= 0, x + y <= 1}.
//!
//! Segment rules are Gauss-Legendre with nodes computed by Newton iteration
//! on the Legendre recurrence. Triangle rules are tensor-collapsed products
//! of segment rules (one extra point in the collapsed direction absorbs the
//! Jacobian factor).

use crate::error::FemError;

/// Largest supported polynomial exactness degree.
pub const MAX_DEGREE: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Segment,
    Triangle,
}

/// A quadrature rule on a reference domain.
///
/// For segments the second point coordinate is zero.
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub shape: Shape,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Legendre polynomial P_n and derivative at `t` in [-1, 1].
fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, t);
    for k in 1..n {
        let next = ((2 * k + 1) as f64 * t * p - k as f64 * p_prev) / (k + 1) as f64;
        p_prev = p;
        p = next;
    }
    let dp = n as f64 * (t * p - p_prev) / (t * t - 1.0);
    (p, dp)
}

/// Gauss-Legendre nodes/weights on [0, 1] with `n` points.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        // Chebyshev initial guess, then Newton.
        let mut t = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            let step = p / d;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, t);
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        points[n - 1 - k] = 0.5 * (t + 1.0);
        weights[n - 1 - k] = 0.5 * w;
        points[k] = 0.5 * (1.0 - t);
        weights[k] = 0.5 * w;
    }
    (points, weights)
}

/// Builds a rule of exactness at least `degree` on the requested shape.
pub fn quadrature_rule(shape: Shape, degree: usize) -> Result<QuadRule, FemError> {
    if degree > MAX_DEGREE {
        return Err(FemError::QuadratureDegreeTooHigh {
            requested: degree,
            max: MAX_DEGREE,
        });
    }
    match shape {
        Shape::Segment => {
            let n = degree / 2 + 1;
            let (x, w) = gauss_legendre_unit(n);
            Ok(QuadRule {
                shape,
                points: x.iter().map(|&t| [t, 0.0]).collect(),
                weights: w,
                exactness_degree: 2 * n - 1,
            })
        }
        Shape::Triangle => {
            // x = xi (1 - eta), y = eta; the Jacobian (1 - eta) raises the
            // eta-degree by one.
            let nx = degree / 2 + 1;
            let ny = (degree + 1) / 2 + 1;
            let (xi, wx) = gauss_legendre_unit(nx);
            let (eta, wy) = gauss_legendre_unit(ny);
            let mut points = Vec::with_capacity(nx * ny);
            let mut weights = Vec::with_capacity(nx * ny);
            for (j, &e) in eta.iter().enumerate() {
                for (i, &x) in xi.iter().enumerate() {
                    points.push([x * (1.0 - e), e]);
                    weights.push(wx[i] * wy[j] * (1.0 - e));
                }
            }
            Ok(QuadRule {
                shape,
                points,
                weights,
                exactness_degree: (2 * nx - 1).min(2 * ny - 2),
            })
        }
    }
}
