//! Evaluation of the nonlinear interior-penalty form, Newton residual and
//! analytic Jacobian assembly, and the quasi-norm / broken-norm error
//! functionals.
//!
//! The form in its three-slot shape B(z; u, v) is
//!
//!   int_Omega |grad u|^(p-2) grad u . grad v
//!   + int_Gamma sigma {{ (|grad z|^2 + sigma^2 |[u]|^2)^((p-2)/2) }}_w [u].[v]
//!   - int_Gamma {{ |grad u|^(p-2) grad u }}_w . [v]
//!   + theta int_Gamma {{ (|grad z|^2 + sigma^2 |[u]|^2)^((p-2)/2) grad v }}_w . [u],
//!
//! with the scheme evaluating z = u. Boundary faces use the one-sided
//! conventions (minus traces zero, weights (1, 0)). Face contributions are
//! computed once per interface with traces from both sides.

use crate::error::AssemblyError;
use crate::fem::{quadrature_rule, tabulate, BasisTable, DgFunction, DgSpace, Shape};
use crate::penalty::{PenaltyField, RationalExponent};
use std::collections::HashMap;
use std::sync::Arc;

/// Sparse matrix in triplet form with deterministic CSR conversion.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub dim: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl SparseSystem {
    pub fn new(dim: usize) -> Self {
        SparseSystem {
            dim,
            triplets: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.triplets.push((row, col, value));
        }
    }

    /// Merged entries sorted by (row, col).
    pub fn merged(&self) -> Vec<(usize, usize, f64)> {
        let mut entries = self.triplets.clone();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match out.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => out.push((r, c, v)),
            }
        }
        out
    }

    /// Dense matrix-vector product, used by tests and residual checks.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for &(r, c, v) in &self.triplets {
            y[r] += v * x[c];
        }
        y
    }
}

/// Per-interface quadrature and trace tables, built once per context.
struct FaceTable {
    /// Physical quadrature weights (reference weights times |F|).
    weights: Vec<f64>,
    normal: [f64; 2],
    sigma: f64,
    w_plus: f64,
    w_minus: f64,
    plus_element: usize,
    minus_element: usize,
    is_boundary: bool,
    /// Basis values/gradients of the plus element at the face points.
    plus_table: BasisTable,
    minus_table: BasisTable,
    /// Physical coordinates of the face quadrature points.
    points: Vec<[f64; 2]>,
}

/// Shared data for residual/Jacobian assembly and the error functionals.
pub struct NonlinearFormContext {
    pub space: Arc<DgSpace>,
    pub penalty: PenaltyField,
    pub theta: f64,
    pub p: RationalExponent,
    /// Gradient regularization floor used in the p-4 and p-2 powers of the
    /// Jacobian linearization.
    pub delta: f64,
    /// Override for the default volume/face quadrature degree 3 r + 4.
    pub quad_degree_override: Option<usize>,
    volume_rules: HashMap<usize, (Arc<crate::fem::QuadRule>, Arc<BasisTable>)>,
    faces: Vec<FaceTable>,
}

impl NonlinearFormContext {
    pub fn new(
        space: Arc<DgSpace>,
        penalty: PenaltyField,
        p: RationalExponent,
        theta: f64,
    ) -> Result<Self, AssemblyError> {
        Self::with_quadrature(space, penalty, p, theta, None)
    }

    pub fn with_quadrature(
        space: Arc<DgSpace>,
        penalty: PenaltyField,
        p: RationalExponent,
        theta: f64,
        quad_degree_override: Option<usize>,
    ) -> Result<Self, AssemblyError> {
        assert_eq!(penalty.interfaces.len(), space.mesh.n_interfaces());
        let volume_degree = |r: usize| -> usize {
            quad_degree_override
                .unwrap_or(3 * r + 4)
                .max(2 * space.max_degree())
        };

        let mut volume_rules = HashMap::new();
        for &r in &space.degrees {
            volume_rules.entry(r).or_insert_with(|| {
                let rule = quadrature_rule(Shape::Triangle, volume_degree(r))
                    .expect("volume quadrature degree within supported range");
                let table = tabulate(r, &rule.points);
                (Arc::new(rule), Arc::new(table))
            });
        }

        let mesh = space.mesh.clone();
        let mut faces = Vec::with_capacity(mesh.n_interfaces());
        for (idx, face) in mesh.interfaces.iter().enumerate() {
            let (plus, minus) = (face.plus_element, face.minus_element);
            let degree = volume_degree(space.degrees[plus].max(space.degrees[minus]));
            let rule = quadrature_rule(Shape::Segment, degree)
                .expect("face quadrature degree within supported range");
            let (a, b) = (
                mesh.vertices[face.endpoints[0]],
                mesh.vertices[face.endpoints[1]],
            );
            // One set of physical points per interface, mapped into both
            // adjacent reference frames with the same orientation.
            let points: Vec<[f64; 2]> = rule
                .points
                .iter()
                .map(|q| {
                    let t = q[0];
                    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
                })
                .collect();
            let weights: Vec<f64> = rule.weights.iter().map(|w| w * face.length).collect();
            let to_ref = |k: usize| -> Vec<[f64; 2]> {
                let map = space.element_map(k);
                points.iter().map(|&x| map.to_reference(x)).collect()
            };
            let plus_table = tabulate(space.degrees[plus], &to_ref(plus));
            let minus_table = tabulate(space.degrees[minus], &to_ref(minus));
            let pen = &penalty.interfaces[idx];
            faces.push(FaceTable {
                weights,
                normal: face.unit_normal,
                sigma: pen.sigma,
                w_plus: pen.w_plus,
                w_minus: pen.w_minus,
                plus_element: plus,
                minus_element: minus,
                is_boundary: face.is_boundary(),
                plus_table,
                minus_table,
                points,
            });
        }

        Ok(NonlinearFormContext {
            space,
            penalty,
            theta,
            p,
            delta: 1e-12,
            quad_degree_override,
            volume_rules,
            faces,
        })
    }

    fn p_value(&self) -> f64 {
        self.p.value()
    }

    /// Value and physical gradient of `u` at the volume quadrature points of
    /// element `k`, from the cached reference tables.
    fn volume_eval(&self, u: &DgFunction, k: usize) -> (Vec<f64>, Vec<[f64; 2]>) {
        let (rule, table) = &self.volume_rules[&self.space.degrees[k]];
        let map = self.space.element_map(k);
        let local = u.local_coeffs(k);
        let n = rule.len();
        let mut values = vec![0.0; n];
        let mut grads = vec![[0.0, 0.0]; n];
        for q in 0..n {
            let mut v = 0.0;
            let mut g = [0.0, 0.0];
            for (b, &c) in local.iter().enumerate() {
                v += c * table.value(b, q);
                let gb = table.grad(b, q);
                g[0] += c * gb[0];
                g[1] += c * gb[1];
            }
            values[q] = v;
            grads[q] = map.push_gradient(g);
        }
        (values, grads)
    }

    fn face_eval(&self, u: &DgFunction, face: &FaceTable, side_minus: bool) -> (Vec<f64>, Vec<[f64; 2]>) {
        let (k, table) = if side_minus {
            (face.minus_element, &face.minus_table)
        } else {
            (face.plus_element, &face.plus_table)
        };
        let map = self.space.element_map(k);
        let local = u.local_coeffs(k);
        let n = face.weights.len();
        let mut values = vec![0.0; n];
        let mut grads = vec![[0.0, 0.0]; n];
        for q in 0..n {
            let mut v = 0.0;
            let mut g = [0.0, 0.0];
            for (b, &c) in local.iter().enumerate() {
                v += c * table.value(b, q);
                let gb = table.grad(b, q);
                g[0] += c * gb[0];
                g[1] += c * gb[1];
            }
            values[q] = v;
            grads[q] = map.push_gradient(g);
        }
        (values, grads)
    }
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

/// |g|^(p-2) g, the nonlinear flux.
#[inline]
fn flux(g: [f64; 2], pv: f64) -> [f64; 2] {
    let m = norm(g);
    if m == 0.0 {
        return [0.0, 0.0];
    }
    let s = m.powf(pv - 2.0);
    [s * g[0], s * g[1]]
}

/// Directional derivative of the flux: |g|^(p-2) h + (p-2)|g|^(p-4)(g.h) g,
/// with |g| floored at `delta` inside the powers.
#[inline]
fn flux_derivative(g: [f64; 2], h: [f64; 2], pv: f64, delta: f64) -> [f64; 2] {
    let m = norm(g).max(delta);
    let s = m.powf(pv - 2.0);
    let t = (pv - 2.0) * m.powf(pv - 4.0) * dot(g, h);
    [s * h[0] + t * g[0], s * h[1] + t * g[1]]
}

/// The Newton residual: component i is B(u; u, phi_i) - int f phi_i.
pub fn residual(
    ctx: &NonlinearFormContext,
    u: &DgFunction,
    f: &dyn Fn([f64; 2]) -> f64,
) -> Result<Vec<f64>, AssemblyError> {
    let space = &ctx.space;
    let pv = ctx.p_value();
    let mut out = vec![0.0; space.n_dofs()];

    // Volume terms.
    for k in 0..space.n_elements() {
        let (rule, table) = &ctx.volume_rules[&space.degrees[k]];
        let map = space.element_map(k);
        let (_, grads) = ctx.volume_eval(u, k);
        let offset = space.offset(k);
        let nb = space.local_dim(k);
        for q in 0..rule.len() {
            let w = rule.weights[q] * map.det;
            let fl = flux(grads[q], pv);
            let fv = f(map.to_physical(rule.points[q]));
            if !(fl[0].is_finite() && fl[1].is_finite() && fv.is_finite()) {
                return Err(AssemblyError::NonFiniteElement(k));
            }
            for b in 0..nb {
                let g = map.push_gradient(table.grad(b, q));
                out[offset + b] += w * (dot(fl, g) - fv * table.value(b, q));
            }
        }
    }

    // Skeleton terms, one pass per interface.
    for (f_idx, face) in ctx.faces.iter().enumerate() {
        let (up, gp) = ctx.face_eval(u, face, false);
        let (um, gm) = if face.is_boundary {
            (vec![0.0; face.weights.len()], vec![[0.0, 0.0]; face.weights.len()])
        } else {
            ctx.face_eval(u, face, true)
        };
        let map_p = space.element_map(face.plus_element);
        let map_m = space.element_map(face.minus_element);
        let (off_p, nb_p) = (space.offset(face.plus_element), space.local_dim(face.plus_element));
        let (off_m, nb_m) = (
            space.offset(face.minus_element),
            space.local_dim(face.minus_element),
        );
        let sigma = face.sigma;
        let (wp, wm) = (face.w_plus, face.w_minus);
        let n = face.normal;

        for q in 0..face.weights.len() {
            let w = face.weights[q];
            let ju = up[q] - um[q];
            let a_plus = dot(gp[q], gp[q]) + sigma * sigma * ju * ju;
            let a_minus = dot(gm[q], gm[q]) + sigma * sigma * ju * ju;
            let s_avg = wp * a_plus.powf(0.5 * (pv - 2.0)) + wm * a_minus.powf(0.5 * (pv - 2.0));
            let flux_avg_n = wp * dot(flux(gp[q], pv), n) + wm * dot(flux(gm[q], pv), n);
            if !(s_avg.is_finite() && flux_avg_n.is_finite()) {
                return Err(AssemblyError::NonFiniteInterface(f_idx));
            }
            // Test functions on the plus side: jump contribution +phi, and
            // the theta term sees the plus-side gradient with weight w_plus.
            let s_plus = a_plus.powf(0.5 * (pv - 2.0));
            let s_minus = a_minus.powf(0.5 * (pv - 2.0));
            for b in 0..nb_p {
                let phi = face.plus_table.value(b, q);
                let gphi = map_p.push_gradient(face.plus_table.grad(b, q));
                out[off_p + b] += w
                    * (sigma * s_avg * ju * phi - flux_avg_n * phi
                        + ctx.theta * wp * s_plus * dot(gphi, n) * ju);
            }
            if !face.is_boundary {
                for b in 0..nb_m {
                    let phi = face.minus_table.value(b, q);
                    let gphi = map_m.push_gradient(face.minus_table.grad(b, q));
                    out[off_m + b] += w
                        * (-sigma * s_avg * ju * phi + flux_avg_n * phi
                            + ctx.theta * wm * s_minus * dot(gphi, n) * ju);
                }
            }
        }
    }
    Ok(out)
}

/// The analytic Jacobian of [`residual`] in u (both slots of B(u; u, .)).
pub fn jacobian(ctx: &NonlinearFormContext, u: &DgFunction) -> Result<SparseSystem, AssemblyError> {
    let space = &ctx.space;
    let pv = ctx.p_value();
    let delta = ctx.delta;
    let mut sys = SparseSystem::new(space.n_dofs());

    // Volume blocks.
    for k in 0..space.n_elements() {
        let (rule, table) = &ctx.volume_rules[&space.degrees[k]];
        let map = space.element_map(k);
        let (_, grads) = ctx.volume_eval(u, k);
        let offset = space.offset(k);
        let nb = space.local_dim(k);
        let mut block = vec![0.0; nb * nb];
        let mut gphis = vec![[0.0, 0.0]; nb];
        for q in 0..rule.len() {
            let w = rule.weights[q] * map.det;
            for (b, gphi) in gphis.iter_mut().enumerate() {
                *gphi = map.push_gradient(table.grad(b, q));
            }
            for j in 0..nb {
                let dfl = flux_derivative(grads[q], gphis[j], pv, delta);
                if !(dfl[0].is_finite() && dfl[1].is_finite()) {
                    return Err(AssemblyError::NonFiniteElement(k));
                }
                for i in 0..nb {
                    block[i * nb + j] += w * dot(dfl, gphis[i]);
                }
            }
        }
        for i in 0..nb {
            for j in 0..nb {
                sys.push(offset + i, offset + j, block[i * nb + j]);
            }
        }
    }

    // Skeleton blocks.
    for (f_idx, face) in ctx.faces.iter().enumerate() {
        let (up, gp) = ctx.face_eval(u, face, false);
        let (um, gm) = if face.is_boundary {
            (vec![0.0; face.weights.len()], vec![[0.0, 0.0]; face.weights.len()])
        } else {
            ctx.face_eval(u, face, true)
        };
        let map_p = space.element_map(face.plus_element);
        let map_m = space.element_map(face.minus_element);
        let (off_p, nb_p) = (space.offset(face.plus_element), space.local_dim(face.plus_element));
        let (off_m, nb_m) = (
            space.offset(face.minus_element),
            space.local_dim(face.minus_element),
        );
        let sides = if face.is_boundary { 1 } else { 2 };
        let n_total = nb_p + if face.is_boundary { 0 } else { nb_m };
        let mut block = vec![0.0; n_total * n_total];
        let sigma = face.sigma;
        let (wp, wm) = (face.w_plus, face.w_minus);
        let n = face.normal;

        // Local ordering: plus-side basis first, then minus-side.
        let mut phi = vec![0.0; n_total];
        let mut jphi = vec![0.0; n_total];
        let mut gphi_p = vec![[0.0, 0.0]; n_total];
        let mut gphi_m = vec![[0.0, 0.0]; n_total];
        for q in 0..face.weights.len() {
            let w = face.weights[q];
            let ju = up[q] - um[q];
            for b in 0..nb_p {
                phi[b] = face.plus_table.value(b, q);
                jphi[b] = phi[b];
                gphi_p[b] = map_p.push_gradient(face.plus_table.grad(b, q));
                gphi_m[b] = [0.0, 0.0];
            }
            if sides == 2 {
                for b in 0..nb_m {
                    let idx = nb_p + b;
                    phi[idx] = face.minus_table.value(b, q);
                    jphi[idx] = -phi[idx];
                    gphi_p[idx] = [0.0, 0.0];
                    gphi_m[idx] = map_m.push_gradient(face.minus_table.grad(b, q));
                }
            }

            let a_plus = dot(gp[q], gp[q]) + sigma * sigma * ju * ju;
            let a_minus = dot(gm[q], gm[q]) + sigma * sigma * ju * ju;
            let m_plus = a_plus.sqrt().max(delta);
            let m_minus = a_minus.sqrt().max(delta);
            let s_plus = m_plus.powf(pv - 2.0);
            let s_minus = m_minus.powf(pv - 2.0);
            let s_avg = wp * s_plus + wm * s_minus;
            // d/du of A^((p-2)/2) along trial direction psi:
            // (p-2)/2 A^((p-4)/2) (2 grad u . grad psi + 2 sigma^2 ju jpsi).
            let dcoef_plus = (pv - 2.0) * m_plus.powf(pv - 4.0);
            let dcoef_minus = (pv - 2.0) * m_minus.powf(pv - 4.0);

            for j in 0..n_total {
                let ds_plus = dcoef_plus * (dot(gp[q], gphi_p[j]) + sigma * sigma * ju * jphi[j]);
                let ds_minus = dcoef_minus * (dot(gm[q], gphi_m[j]) + sigma * sigma * ju * jphi[j]);
                let ds_avg = wp * ds_plus + wm * ds_minus;
                let dflux_n = wp * dot(flux_derivative(gp[q], gphi_p[j], pv, delta), n)
                    + wm * dot(flux_derivative(gm[q], gphi_m[j], pv, delta), n);
                if !(ds_avg.is_finite() && dflux_n.is_finite()) {
                    return Err(AssemblyError::NonFiniteInterface(f_idx));
                }
                for i in 0..n_total {
                    // Penalty, consistency and theta terms linearized in u.
                    let penalty = sigma * (ds_avg * ju + s_avg * jphi[j]) * jphi[i];
                    let consistency = -dflux_n * jphi[i];
                    let theta_term = ctx.theta
                        * (wp * (ds_plus * ju + s_plus * jphi[j]) * dot(gphi_p[i], n)
                            + wm * (ds_minus * ju + s_minus * jphi[j]) * dot(gphi_m[i], n));
                    block[i * n_total + j] += w * (penalty + consistency + theta_term);
                }
            }
        }

        let global = |local: usize| -> usize {
            if local < nb_p {
                off_p + local
            } else {
                off_m + (local - nb_p)
            }
        };
        for i in 0..n_total {
            for j in 0..n_total {
                sys.push(global(i), global(j), block[i * n_total + j]);
            }
        }
    }
    Ok(sys)
}

/// The energy B(u; u, u).
pub fn energy(ctx: &NonlinearFormContext, u: &DgFunction) -> Result<f64, AssemblyError> {
    let pv = ctx.p_value();
    let space = &ctx.space;
    let mut total = 0.0;

    for k in 0..space.n_elements() {
        let (rule, _) = &ctx.volume_rules[&space.degrees[k]];
        let map = space.element_map(k);
        let (_, grads) = ctx.volume_eval(u, k);
        for q in 0..rule.len() {
            total += rule.weights[q] * map.det * norm(grads[q]).powf(pv);
        }
    }

    for face in &ctx.faces {
        let (up, gp) = ctx.face_eval(u, face, false);
        let (um, gm) = if face.is_boundary {
            (vec![0.0; face.weights.len()], vec![[0.0, 0.0]; face.weights.len()])
        } else {
            ctx.face_eval(u, face, true)
        };
        let sigma = face.sigma;
        let (wp, wm) = (face.w_plus, face.w_minus);
        let n = face.normal;
        for q in 0..face.weights.len() {
            let w = face.weights[q];
            let ju = up[q] - um[q];
            let a_plus = dot(gp[q], gp[q]) + sigma * sigma * ju * ju;
            let a_minus = dot(gm[q], gm[q]) + sigma * sigma * ju * ju;
            let s_plus = a_plus.powf(0.5 * (pv - 2.0));
            let s_minus = a_minus.powf(0.5 * (pv - 2.0));
            let s_avg = wp * s_plus + wm * s_minus;
            let flux_avg_n = wp * dot(flux(gp[q], pv), n) + wm * dot(flux(gm[q], pv), n);
            // The gradient average in the theta term sees grad u of each side.
            let theta_avg = wp * s_plus * dot(gp[q], n) + wm * s_minus * dot(gm[q], n);
            total += w * (sigma * s_avg * ju * ju - flux_avg_n * ju + ctx.theta * theta_avg * ju);
        }
    }
    Ok(total)
}

/// A field with element-wise values/gradients and two-sided traces: either a
/// DG function or a DG function minus a smooth exact solution. Boundary
/// minus-traces follow the scheme's convention (zero).
pub enum ErrorField<'a> {
    Dg(&'a DgFunction),
    DgMinusExact(&'a DgFunction, &'a crate::experiments::ScalarField),
}

impl ErrorField<'_> {
    fn correction(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        match self {
            ErrorField::Dg(_) => (0.0, [0.0, 0.0]),
            ErrorField::DgMinusExact(_, exact) => {
                let jet = exact.eval(x);
                (jet.value, jet.gradient)
            }
        }
    }

    fn dg(&self) -> &DgFunction {
        match self {
            ErrorField::Dg(u) | ErrorField::DgMinusExact(u, _) => u,
        }
    }
}

/// Quasi-norm of `e` with weight function `weight`:
///
///   ( int (|grad w| + |grad e|)^(p-2) |grad e|^2
///     + int_Gamma sigma {{ (|grad w| + sigma |[e]|)^(p-2) }}_w |[e]|^2 )^(1/2).
pub fn quasi_norm(ctx: &NonlinearFormContext, e: &ErrorField, weight: &DgFunction) -> f64 {
    let pv = ctx.p_value();
    let space = &ctx.space;
    let mut total = 0.0;

    for k in 0..space.n_elements() {
        let (rule, _) = &ctx.volume_rules[&space.degrees[k]];
        let map = space.element_map(k);
        let (_, ge_dg) = ctx.volume_eval(e.dg(), k);
        let (_, gw) = ctx.volume_eval(weight, k);
        for q in 0..rule.len() {
            let x = map.to_physical(rule.points[q]);
            let (_, gc) = e.correction(x);
            let ge = [ge_dg[q][0] - gc[0], ge_dg[q][1] - gc[1]];
            let ge_norm = norm(ge);
            total += rule.weights[q]
                * map.det
                * (norm(gw[q]) + ge_norm).powf(pv - 2.0)
                * ge_norm
                * ge_norm;
        }
    }

    for face in &ctx.faces {
        let (ep, _) = ctx.face_eval(e.dg(), face, false);
        let (em, _) = if face.is_boundary {
            (vec![0.0; face.weights.len()], Vec::new())
        } else {
            ctx.face_eval(e.dg(), face, true)
        };
        let (wgp, wgm) = (
            ctx.face_eval(weight, face, false).1,
            if face.is_boundary {
                vec![[0.0, 0.0]; face.weights.len()]
            } else {
                ctx.face_eval(weight, face, true).1
            },
        );
        let sigma = face.sigma;
        for q in 0..face.weights.len() {
            let x = face.points[q];
            let (vc, _) = e.correction(x);
            // The exact-solution trace is single-valued, so it cancels from
            // interior jumps; on the boundary the minus trace is zero.
            let je = if face.is_boundary {
                ep[q] - vc
            } else {
                ep[q] - em[q]
            };
            let s_plus = (norm(wgp[q]) + sigma * je.abs()).powf(pv - 2.0);
            let s_avg = if face.is_boundary {
                s_plus
            } else {
                face.w_plus * s_plus + face.w_minus * (norm(wgm[q]) + sigma * je.abs()).powf(pv - 2.0)
            };
            total += face.weights[q] * sigma * s_avg * je * je;
        }
    }
    total.sqrt()
}

/// Broken Sobolev norm ( int |grad e|^q + int_Gamma sigma^(q-1) |[e]|^q )^(1/q).
pub fn broken_norm(ctx: &NonlinearFormContext, e: &ErrorField, q_exp: f64) -> f64 {
    assert!(q_exp >= 1.0);
    let space = &ctx.space;
    let mut total = 0.0;

    for k in 0..space.n_elements() {
        let (rule, _) = &ctx.volume_rules[&space.degrees[k]];
        let map = space.element_map(k);
        let (_, ge_dg) = ctx.volume_eval(e.dg(), k);
        for qq in 0..rule.len() {
            let x = map.to_physical(rule.points[qq]);
            let (_, gc) = e.correction(x);
            let ge = [ge_dg[qq][0] - gc[0], ge_dg[qq][1] - gc[1]];
            total += rule.weights[qq] * map.det * norm(ge).powf(q_exp);
        }
    }

    for face in &ctx.faces {
        let (ep, _) = ctx.face_eval(e.dg(), face, false);
        let (em, _) = if face.is_boundary {
            (vec![0.0; face.weights.len()], Vec::new())
        } else {
            ctx.face_eval(e.dg(), face, true)
        };
        let sigma = face.sigma;
        for qq in 0..face.weights.len() {
            let (vc, _) = e.correction(face.points[qq]);
            let je = if face.is_boundary {
                ep[qq] - vc
            } else {
                ep[qq] - em[qq]
            };
            total += face.weights[qq] * sigma.powf(q_exp - 1.0) * je.abs().powf(q_exp);
        }
    }
    total.powf(1.0 / q_exp)
}
