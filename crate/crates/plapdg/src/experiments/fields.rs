//! Manufactured solutions and forcing synthesis.
//!
//! Closed-form solutions are differentiated with second-order forward-mode
//! dual numbers, so gradients and Hessians carry no truncation error. The
//! forcing for the p-Laplacian is then
//!
//!   f = -(p - 2) |grad u|^(p-4) (grad u . H grad u) - |grad u|^(p-2) lap u,
//!
//! which is well defined for p > 2 away from critical points and extended by
//! zero where |grad u| vanishes.

use crate::error::StudyError;
use crate::mesh::Rect;

/// Second-order dual number in two variables.
#[derive(Clone, Copy, Debug)]
pub struct Dual2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Dual2 {
    pub fn constant(v: f64) -> Self {
        Dual2 {
            v,
            dx: 0.0,
            dy: 0.0,
            dxx: 0.0,
            dxy: 0.0,
            dyy: 0.0,
        }
    }

    pub fn var_x(v: f64) -> Self {
        Dual2 {
            v,
            dx: 1.0,
            ..Dual2::constant(0.0)
        }
    }

    pub fn var_y(v: f64) -> Self {
        Dual2 {
            v,
            dy: 1.0,
            ..Dual2::constant(0.0)
        }
    }

    /// Lifts a scalar function with known first and second derivatives.
    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        Dual2 {
            v: f,
            dx: df * self.dx,
            dy: df * self.dy,
            dxx: ddf * self.dx * self.dx + df * self.dxx,
            dxy: ddf * self.dx * self.dy + df * self.dxy,
            dyy: ddf * self.dy * self.dy + df * self.dyy,
        }
    }

    pub fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos(), -self.v.sin())
    }

    pub fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin(), -self.v.cos())
    }

    pub fn tanh(self) -> Self {
        let t = self.v.tanh();
        let sech2 = 1.0 - t * t;
        self.chain(t, sech2, -2.0 * t * sech2)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
}

impl std::ops::Add for Dual2 {
    type Output = Dual2;
    fn add(self, o: Dual2) -> Dual2 {
        Dual2 {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }
}

impl std::ops::Sub for Dual2 {
    type Output = Dual2;
    fn sub(self, o: Dual2) -> Dual2 {
        Dual2 {
            v: self.v - o.v,
            dx: self.dx - o.dx,
            dy: self.dy - o.dy,
            dxx: self.dxx - o.dxx,
            dxy: self.dxy - o.dxy,
            dyy: self.dyy - o.dyy,
        }
    }
}

impl std::ops::Mul for Dual2 {
    type Output = Dual2;
    fn mul(self, o: Dual2) -> Dual2 {
        Dual2 {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }
}

impl std::ops::Neg for Dual2 {
    type Output = Dual2;
    fn neg(self) -> Dual2 {
        Dual2 {
            v: -self.v,
            dx: -self.dx,
            dy: -self.dy,
            dxx: -self.dxx,
            dxy: -self.dxy,
            dyy: -self.dyy,
        }
    }
}

impl std::ops::Mul<Dual2> for f64 {
    type Output = Dual2;
    fn mul(self, o: Dual2) -> Dual2 {
        Dual2::constant(self) * o
    }
}

/// Value, gradient and Hessian of a scalar field at a point.
#[derive(Clone, Copy, Debug)]
pub struct FieldJet {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

/// A closed-form scalar field with derivatives via dual numbers.
pub struct ScalarField {
    expr: Box<dyn Fn(Dual2, Dual2) -> Dual2 + Send + Sync>,
    pub domain: Rect,
    pub zero_boundary: bool,
}

impl ScalarField {
    pub fn new(
        domain: Rect,
        zero_boundary: bool,
        expr: impl Fn(Dual2, Dual2) -> Dual2 + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            expr: Box::new(expr),
            domain,
            zero_boundary,
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> FieldJet {
        let out = (self.expr)(Dual2::var_x(x[0]), Dual2::var_y(x[1]));
        FieldJet {
            value: out.v,
            gradient: [out.dx, out.dy],
            hessian: [[out.dxx, out.dxy], [out.dxy, out.dyy]],
        }
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        (self.expr)(Dual2::constant(x[0]), Dual2::constant(x[1])).v
    }
}

/// The two study solutions: (1) a product-of-linears times an oscillatory
/// factor on the unit square, (2) a steep tanh interface profile on
/// (-1, 1)^2. Both vanish on the domain boundary.
pub fn manufactured_solution(example: usize) -> ScalarField {
    match example {
        1 => ScalarField::new(Rect::UNIT, true, |x, y| {
            let two_pi = 2.0 * std::f64::consts::PI;
            x * y * (Dual2::constant(1.0) - x) * (Dual2::constant(1.0) - y) * (two_pi * (x * y)).sin()
        }),
        2 => ScalarField::new(Rect::BIUNIT, true, |x, y| {
            let one = Dual2::constant(1.0);
            let xs = x - Dual2::constant(0.5);
            -((one - x * x) * (one - y * y) * (50.0 * (xs * xs + y * y - Dual2::constant(0.01))).tanh())
        }),
        _ => panic!("examples are numbered 1 and 2"),
    }
}

/// Default gradient threshold below which the forcing is extended by zero.
pub const FORCING_GRADIENT_FLOOR: f64 = 1e-14;

/// Forcing so that `field` solves the p-Laplacian Dirichlet problem.
pub fn forcing(field: &ScalarField, p: f64, x: [f64; 2]) -> Result<f64, StudyError> {
    if p < 2.0 {
        return Err(StudyError::ForcingExponent(p));
    }
    let jet = field.eval(x);
    let g = jet.gradient;
    let h = jet.hessian;
    let lap = h[0][0] + h[1][1];
    if p == 2.0 {
        return Ok(-lap);
    }
    let gnorm = g[0].hypot(g[1]);
    if gnorm <= FORCING_GRADIENT_FLOOR {
        return Ok(0.0);
    }
    let ghg = g[0] * (h[0][0] * g[0] + h[0][1] * g[1]) + g[1] * (h[1][0] * g[0] + h[1][1] * g[1]);
    Ok(-(p - 2.0) * gnorm.powf(p - 4.0) * ghg - gnorm.powf(p - 2.0) * lap)
}
