//! Shared test oracles: an independently coded linear SIPG assembly with a
//! dense direct solve, and helpers for random DG functions.
//!
//! The SIPG path below shares only the certified primitives (mesh, basis,
//! quadrature) with the library; the bilinear form loops, the matrix storage
//! and the linear solve are written from scratch so it can serve as an
//! independent oracle for the p = 2 mode of the nonlinear assembly.
#![allow(dead_code)] // each test target compiles its own copy and uses a subset

use plapdg::fem::{quadrature_rule, tabulate, DgFunction, DgSpace, Shape};
use plapdg::penalty::PenaltyField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.to_vec();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
                .unwrap();
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                b.swap(col, pivot);
            }
            let diag = a[col * n + col];
            assert!(diag.abs() > 1e-14, "singular SIPG matrix");
            for row in col + 1..n {
                let factor = a[row * n + col] / diag;
                if factor == 0.0 {
                    continue;
                }
                for k in col..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
                b[row] -= factor * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut acc = b[row];
            for k in row + 1..n {
                acc -= a[row * n + k] * x[k];
            }
            x[row] = acc / a[row * n + row];
        }
        x
    }
}

/// Independent SIPG stiffness matrix and load vector for -lap u = f with the
/// given penalty field and symmetry parameter.
pub fn sipg_system(
    space: &Arc<DgSpace>,
    penalty: &PenaltyField,
    theta: f64,
    f: &dyn Fn([f64; 2]) -> f64,
) -> (DenseMatrix, Vec<f64>) {
    let mesh = &space.mesh;
    let n = space.n_dofs();
    let mut matrix = DenseMatrix::zeros(n);
    let mut rhs = vec![0.0; n];

    for k in 0..space.n_elements() {
        let r = space.degrees[k];
        let rule = quadrature_rule(Shape::Triangle, 2 * r + 4).unwrap();
        let table = tabulate(r, &rule.points);
        let map = space.element_map(k);
        let nb = space.local_dim(k);
        let offset = space.offset(k);
        for q in 0..rule.len() {
            let w = rule.weights[q] * map.det;
            let grads: Vec<[f64; 2]> = (0..nb).map(|b| map.push_gradient(table.grad(b, q))).collect();
            let fv = f(map.to_physical(rule.points[q]));
            for i in 0..nb {
                rhs[offset + i] += w * fv * table.value(i, q);
                for j in 0..nb {
                    matrix.add(
                        offset + i,
                        offset + j,
                        w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]),
                    );
                }
            }
        }
    }

    for (f_idx, face) in mesh.interfaces.iter().enumerate() {
        let pen = &penalty.interfaces[f_idx];
        let boundary = face.is_boundary();
        let (kp, km) = (face.plus_element, face.minus_element);
        let (rp, rm) = (space.degrees[kp], space.degrees[km]);
        let rule = quadrature_rule(Shape::Segment, 2 * rp.max(rm) + 4).unwrap();
        let (a, b) = (mesh.vertices[face.endpoints[0]], mesh.vertices[face.endpoints[1]]);
        let normal = face.unit_normal;
        let map_p = space.element_map(kp);
        let map_m = space.element_map(km);

        for (q, point) in rule.points.iter().enumerate() {
            let t = point[0];
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let w = rule.weights[q] * face.length;
            // One-sided data: (value, normal gradient, weight, global dof,
            // jump sign).
            let mut sides = Vec::with_capacity(2);
            let table_p = tabulate(rp, &[map_p.to_reference(x)]);
            sides.push((kp, table_p, map_p, pen.w_plus, 1.0));
            if !boundary {
                let table_m = tabulate(rm, &[map_m.to_reference(x)]);
                sides.push((km, table_m, map_m, pen.w_minus, -1.0));
            }
            // Collect per-dof traces.
            struct Trace {
                dof: usize,
                value: f64,
                grad_n: f64,
                weight: f64,
                sign: f64,
            }
            let mut traces = Vec::new();
            for (k, table, map, weight, sign) in &sides {
                let nb = space.local_dim(*k);
                let offset = space.offset(*k);
                for bidx in 0..nb {
                    let g = map.push_gradient(table.grad(bidx, 0));
                    traces.push(Trace {
                        dof: offset + bidx,
                        value: table.value(bidx, 0),
                        grad_n: g[0] * normal[0] + g[1] * normal[1],
                        weight: *weight,
                        sign: *sign,
                    });
                }
            }
            for ti in &traces {
                for tj in &traces {
                    let jump_i = ti.sign * ti.value;
                    let jump_j = tj.sign * tj.value;
                    let avg_grad_j = tj.weight * tj.grad_n;
                    let avg_grad_i = ti.weight * ti.grad_n;
                    matrix.add(
                        ti.dof,
                        tj.dof,
                        w * (pen.sigma * jump_i * jump_j - avg_grad_j * jump_i
                            + theta * avg_grad_i * jump_j),
                    );
                }
            }
        }
    }
    (matrix, rhs)
}

/// Deterministic random coefficients with standard normal entries.
pub fn random_dg(space: &Arc<DgSpace>, seed: u64) -> DgFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..space.n_dofs())
        .map(|_| {
            let u: f64 = rng.random_range(1e-12..1.0);
            let v: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            (-2.0 * u.ln()).sqrt() * v.cos()
        })
        .collect();
    DgFunction::from_coeffs(space.clone(), coeffs).unwrap()
}
