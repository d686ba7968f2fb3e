//! Discontinuous Galerkin spaces and functions.

use super::basis::{basis_size, tabulate};
use super::quadrature::{quadrature_rule, Shape};
use crate::error::FemError;
use crate::mesh::TriMesh;
use std::sync::Arc;

/// Affine map from the reference triangle to a physical element.
#[derive(Clone, Copy, Debug)]
pub struct ElementMap {
    pub origin: [f64; 2],
    pub jacobian: [[f64; 2]; 2],
    /// Inverse transpose of the Jacobian, for gradient pushforward.
    pub inv_t: [[f64; 2]; 2],
    /// Jacobian determinant (= 2 |K|, positive).
    pub det: f64,
}

impl ElementMap {
    pub fn new(vertices: [[f64; 2]; 3]) -> Self {
        let [a, b, c] = vertices;
        let jacobian = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        let inv_t = [
            [jacobian[1][1] / det, -jacobian[1][0] / det],
            [-jacobian[0][1] / det, jacobian[0][0] / det],
        ];
        ElementMap {
            origin: a,
            jacobian,
            inv_t,
            det,
        }
    }

    pub fn to_physical(&self, xi: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jacobian[0][0] * xi[0] + self.jacobian[0][1] * xi[1],
            self.origin[1] + self.jacobian[1][0] * xi[0] + self.jacobian[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, x: [f64; 2]) -> [f64; 2] {
        let (dx, dy) = (x[0] - self.origin[0], x[1] - self.origin[1]);
        [
            (self.jacobian[1][1] * dx - self.jacobian[0][1] * dy) / self.det,
            (-self.jacobian[1][0] * dx + self.jacobian[0][0] * dy) / self.det,
        ]
    }

    /// Pushes a reference gradient forward to physical coordinates.
    #[inline]
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }
}

/// Piecewise-polynomial space over a mesh with per-element degrees r_K >= 1.
#[derive(Clone, Debug)]
pub struct DgSpace {
    pub mesh: Arc<TriMesh>,
    pub degrees: Vec<usize>,
    pub dof_offsets: Vec<usize>,
    maps: Vec<ElementMap>,
}

impl DgSpace {
    pub fn with_degrees(mesh: Arc<TriMesh>, degrees: Vec<usize>) -> Result<Self, FemError> {
        assert_eq!(degrees.len(), mesh.n_elements());
        if let Some(&bad) = degrees.iter().find(|&&r| r < 1) {
            return Err(FemError::DegreeTooLow(bad));
        }
        let mut dof_offsets = Vec::with_capacity(mesh.n_elements() + 1);
        let mut total = 0usize;
        for &r in &degrees {
            dof_offsets.push(total);
            total += basis_size(r);
        }
        dof_offsets.push(total);
        let maps = (0..mesh.n_elements())
            .map(|k| ElementMap::new(mesh.element_vertices(k)))
            .collect();
        Ok(DgSpace {
            mesh,
            degrees,
            dof_offsets,
            maps,
        })
    }

    pub fn uniform(mesh: Arc<TriMesh>, r: usize) -> Result<Self, FemError> {
        let n = mesh.n_elements();
        Self::with_degrees(mesh, vec![r; n])
    }

    pub fn n_dofs(&self) -> usize {
        *self.dof_offsets.last().unwrap()
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    pub fn local_dim(&self, k: usize) -> usize {
        basis_size(self.degrees[k])
    }

    pub fn offset(&self, k: usize) -> usize {
        self.dof_offsets[k]
    }

    pub fn element_map(&self, k: usize) -> &ElementMap {
        &self.maps[k]
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(1)
    }
}

/// A function in a [`DgSpace`], stored as modal coefficients.
#[derive(Clone, Debug)]
pub struct DgFunction {
    pub space: Arc<DgSpace>,
    pub coeffs: Vec<f64>,
}

impl DgFunction {
    pub fn zero(space: Arc<DgSpace>) -> Self {
        let n = space.n_dofs();
        DgFunction {
            space,
            coeffs: vec![0.0; n],
        }
    }

    pub fn from_coeffs(space: Arc<DgSpace>, coeffs: Vec<f64>) -> Result<Self, FemError> {
        if coeffs.len() != space.n_dofs() {
            return Err(FemError::CoefficientLength {
                got: coeffs.len(),
                want: space.n_dofs(),
            });
        }
        Ok(DgFunction { space, coeffs })
    }

    pub fn local_coeffs(&self, k: usize) -> &[f64] {
        let lo = self.space.offset(k);
        &self.coeffs[lo..lo + self.space.local_dim(k)]
    }

    /// Value and physical gradient at physical points inside element `k`.
    ///
    /// Points may sit on the closed element up to a 1e-12 barycentric
    /// tolerance; anything farther outside is an error.
    pub fn eval(&self, k: usize, points: &[[f64; 2]]) -> Result<Vec<(f64, [f64; 2])>, FemError> {
        let map = self.space.element_map(k);
        let mut refs = Vec::with_capacity(points.len());
        for &x in points {
            let xi = map.to_reference(x);
            let bary = [xi[0], xi[1], 1.0 - xi[0] - xi[1]];
            if bary.iter().any(|&b| b < -1e-12) {
                return Err(FemError::PointOutsideElement(x[0], x[1], k));
            }
            refs.push(xi);
        }
        Ok(self.eval_ref(k, &refs))
    }

    /// Value and physical gradient at reference points of element `k`.
    pub fn eval_ref(&self, k: usize, ref_points: &[[f64; 2]]) -> Vec<(f64, [f64; 2])> {
        let map = self.space.element_map(k);
        let table = tabulate(self.space.degrees[k], ref_points);
        let local = self.local_coeffs(k);
        (0..ref_points.len())
            .map(|q| {
                let mut value = 0.0;
                let mut grad = [0.0, 0.0];
                for (b, &c) in local.iter().enumerate() {
                    value += c * table.value(b, q);
                    let g = table.grad(b, q);
                    grad[0] += c * g[0];
                    grad[1] += c * g[1];
                }
                (value, map.push_gradient(grad))
            })
            .collect()
    }
}

/// L2 projection of a callable onto the space; exact for local polynomials
/// of degree at most r_K since the modal basis is orthonormal.
pub fn project(space: &Arc<DgSpace>, f: impl Fn([f64; 2]) -> f64, quad_degree: usize) -> DgFunction {
    let mut coeffs = vec![0.0; space.n_dofs()];
    for k in 0..space.n_elements() {
        let r = space.degrees[k];
        let rule = quadrature_rule(Shape::Triangle, quad_degree.max(2 * r))
            .expect("projection quadrature degree is validated by the caller");
        let table = tabulate(r, &rule.points);
        let map = space.element_map(k);
        let values: Vec<f64> = rule.points.iter().map(|&xi| f(map.to_physical(xi))).collect();
        let local = &mut coeffs[space.dof_offsets[k]..space.dof_offsets[k] + basis_size(r)];
        for (b, c) in local.iter_mut().enumerate() {
            // Reference mass matrix is the identity; the physical mass matrix
            // is det * I, which cancels against the det in the integral.
            *c = (0..rule.len())
                .map(|q| rule.weights[q] * values[q] * table.value(b, q))
                .sum();
        }
    }
    DgFunction {
        space: space.clone(),
        coeffs,
    }
}

#[cfg(test)]
impl DgFunction {
    /// Test helper: locate the containing element by brute force and evaluate.
    fn eval_at_point_for_test(&self, x: [f64; 2]) -> f64 {
        for k in 0..self.space.n_elements() {
            if let Ok(out) = self.eval(k, &[x]) {
                return out[0].0;
            }
        }
        panic!("point outside mesh");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, Rect};

    fn small_space(r: usize) -> Arc<DgSpace> {
        let mesh = Arc::new(build_structured_mesh(Rect::UNIT, 0.8).unwrap());
        Arc::new(DgSpace::uniform(mesh, r).unwrap())
    }

    #[test]
    fn dof_offsets_are_consistent() {
        let mesh = Arc::new(build_structured_mesh(Rect::UNIT, 0.8).unwrap());
        let degrees: Vec<usize> = (0..mesh.n_elements()).map(|k| 1 + k % 3).collect();
        let space = DgSpace::with_degrees(mesh, degrees.clone()).unwrap();
        let expected: usize = degrees.iter().map(|&r| (r + 1) * (r + 2) / 2).sum();
        assert_eq!(space.n_dofs(), expected);
        for w in space.dof_offsets.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn rejects_degree_zero() {
        let mesh = Arc::new(build_structured_mesh(Rect::UNIT, 0.8).unwrap());
        assert!(matches!(
            DgSpace::uniform(mesh, 0),
            Err(FemError::DegreeTooLow(0))
        ));
    }

    #[test]
    fn constant_function_evaluates_exactly() {
        let space = small_space(2);
        let u = project(&space, |_| 1.0, 6);
        for k in 0..space.n_elements() {
            let map = space.element_map(k);
            let x = map.to_physical([0.3, 0.3]);
            let out = u.eval(k, &[x]).unwrap();
            assert!((out[0].0 - 1.0).abs() < 1e-13);
            assert!(out[0].1[0].abs() < 1e-13 && out[0].1[1].abs() < 1e-13);
        }
    }

    #[test]
    fn affine_function_has_exact_gradient() {
        let space = small_space(1);
        let u = project(&space, |x| x[0], 4);
        for k in 0..space.n_elements() {
            let map = space.element_map(k);
            let x = map.to_physical([0.25, 0.4]);
            let (v, g) = u.eval(k, &[x]).unwrap()[0];
            assert!((v - x[0]).abs() < 1e-13);
            assert!((g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let space = small_space(3);
        let mut coeffs = vec![0.0; space.n_dofs()];
        let mut state = 0x9e3779b97f4a7c15u64;
        for c in coeffs.iter_mut() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *c = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        }
        let u = DgFunction::from_coeffs(space.clone(), coeffs).unwrap();
        let h = 1e-6;
        for k in 0..space.n_elements() {
            let map = space.element_map(k);
            let x = map.to_physical([0.21, 0.34]);
            let (_, g) = u.eval(k, &[x]).unwrap()[0];
            let vxp = u.eval(k, &[[x[0] + h, x[1]]]).unwrap()[0].0;
            let vxm = u.eval(k, &[[x[0] - h, x[1]]]).unwrap()[0].0;
            let vyp = u.eval(k, &[[x[0], x[1] + h]]).unwrap()[0].0;
            let vym = u.eval(k, &[[x[0], x[1] - h]]).unwrap()[0].0;
            assert!((g[0] - (vxp - vxm) / (2.0 * h)).abs() < 1e-6);
            assert!((g[1] - (vyp - vym) / (2.0 * h)).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_points_outside_element() {
        let space = small_space(1);
        let u = DgFunction::zero(space);
        let err = u.eval(0, &[[10.0, 10.0]]).unwrap_err();
        assert!(matches!(err, FemError::PointOutsideElement(..)));
    }

    #[test]
    fn projection_reproduces_polynomials() {
        let space = small_space(3);
        let f = |x: [f64; 2]| 2.0 - x[0] + 3.0 * x[1] + x[0] * x[1] * x[1] - 0.5 * x[0] * x[0] * x[0];
        let u = project(&space, f, 10);
        let v = project(&space, |x| u.eval_at_point_for_test(x), 10);
        let resid: f64 = u
            .coeffs
            .iter()
            .zip(&v.coeffs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(resid <= 1e-10, "projection not idempotent: {resid}");
        for k in 0..space.n_elements() {
            let map = space.element_map(k);
            let x = map.to_physical([0.11, 0.57]);
            let (v, _) = u.eval(k, &[x]).unwrap()[0];
            assert!((v - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn global_polynomial_has_no_jumps() {
        let mesh = Arc::new(build_structured_mesh(Rect::UNIT, 0.5).unwrap());
        let space = Arc::new(DgSpace::uniform(mesh.clone(), 2).unwrap());
        let f = |x: [f64; 2]| 1.0 + x[0] - 2.0 * x[1] + x[0] * x[1];
        let u = project(&space, f, 8);
        let (qp, _) = crate::fem::quadrature::gauss_legendre_unit(4);
        for (f_idx, face) in mesh.interfaces.iter().enumerate() {
            if mesh.boundary_flags[f_idx] {
                continue;
            }
            let (a, b) = (mesh.vertices[face.endpoints[0]], mesh.vertices[face.endpoints[1]]);
            for &t in &qp {
                let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                let up = u.eval(face.plus_element, &[x]).unwrap()[0].0;
                let um = u.eval(face.minus_element, &[x]).unwrap()[0].0;
                assert!((up - um).abs() <= 1e-11, "jump {}", up - um);
            }
        }
    }
}
