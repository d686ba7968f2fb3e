//! Quadrature for the verification checks.
//!
//! The inequality checks integrate |v|^q for fractional q, whose integrand
//! has algebraic kinks along the zero set of v. Those integrals are reduced
//! to one-dimensional pieces split at polynomial roots and integrated with
//! composite Gauss panels graded geometrically into both endpoints, which
//! resolves the endpoint singularities to near machine precision. Smooth
//! integrands (the quasi-norm inverse estimate) use tolerance-driven
//! adaptive bisection in 1D and a greedy quadtree on triangles.

use super::poly::{Poly1, Poly2};
use crate::fem::gauss_legendre_unit;
use once_cell::sync::Lazy;

/// Cached Gauss-Legendre rules on [0, 1] for small fixed point counts.
fn gl_cached(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: Lazy<Vec<(Vec<f64>, Vec<f64>)>> =
        Lazy::new(|| (1..=32).map(gauss_legendre_unit).collect());
    &RULES[n - 1]
}

/// Number of geometric grading levels toward each singular endpoint.
const GRADE_LEVELS: usize = 18;
const GRADE_POINTS: usize = 10;

/// Integrates `f` over [a, b] assuming possible algebraic endpoint
/// singularities: composite Gauss with panels shrinking geometrically (ratio
/// 1/4) into both endpoints.
pub fn integrate_graded(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (nodes, weights) = gl_cached(GRADE_POINTS);
    let mut panels: Vec<(f64, f64)> = Vec::with_capacity(2 * GRADE_LEVELS + 2);
    // Left half [0, 1/2] split as [0, 4^-L], [4^-L, 4^-(L-1)], ...
    let mut lo = 0.0;
    for k in (0..=GRADE_LEVELS).rev() {
        let hi = 0.5 * 0.25_f64.powi(k as i32);
        panels.push((lo, hi));
        lo = hi;
    }
    let n_half = panels.len();
    for i in (0..n_half).rev() {
        let (plo, phi) = panels[i];
        panels.push((1.0 - phi, 1.0 - plo));
    }
    let len = b - a;
    let mut total = 0.0;
    for &(plo, phi) in &panels {
        let (x0, width) = (a + plo * len, (phi - plo) * len);
        let mut acc = 0.0;
        for (&t, &w) in nodes.iter().zip(weights) {
            acc += w * f(x0 + t * width);
        }
        total += acc * width;
    }
    total
}

/// Integral of |p(t)|^q over [a, b], splitting at the real roots of p and at
/// its critical points. Splitting at critical points puts near-tangent
/// minima (where |p|^q varies fastest and an even-multiplicity root may go
/// undetected) at panel endpoints, where the geometric grading resolves
/// them.
pub fn integrate_abs_pow_1d(p: &Poly1, q: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts = p.roots_in(a, b);
    cuts.extend(p.derivative().roots_in(a, b));
    cuts.sort_by(f64::total_cmp);
    let mut breaks = vec![a];
    for cut in cuts {
        if cut > *breaks.last().unwrap() + 1e-14 * (b - a) && cut < b - 1e-14 * (b - a) {
            breaks.push(cut);
        }
    }
    breaks.push(b);
    let mut total = 0.0;
    for piece in breaks.windows(2) {
        total += integrate_graded(&mut |t| p.eval(t).abs().powf(q), piece[0], piece[1]);
    }
    total
}

/// Integral of |p(x, y)|^q over a triangle, by scanline reduction: the outer
/// y-integral is adaptive to the given relative tolerance, the inner
/// x-integrals split at roots.
///
/// Returns `(value, converged)`.
pub fn integrate_abs_pow_tri(p: &Poly2, q: f64, verts: &[[f64; 2]; 3], rel_tol: f64) -> (f64, bool) {
    let mut v = *verts;
    v.sort_by(|u, w| u[1].total_cmp(&w[1]));
    let [v0, v1, v2] = v;

    // x-coordinate along an edge at height y.
    let edge_x = |a: [f64; 2], b: [f64; 2], y: f64| -> f64 {
        a[0] + (b[0] - a[0]) * (y - a[1]) / (b[1] - a[1])
    };
    let inner = |y: f64, y_lo: [f64; 2], y_hi: [f64; 2]| -> f64 {
        // Cross-section bounds: one edge is v0-v2 (the long edge), the other
        // is the band edge.
        let x1 = edge_x(v0, v2, y);
        let x2 = edge_x(y_lo, y_hi, y);
        let (xl, xr) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
        let row = p.restrict_y(y);
        integrate_abs_pow_1d(&row, q, xl, xr)
    };

    let mut total = 0.0;
    let mut converged = true;
    for (lo, hi, e0, e1) in [(v0[1], v1[1], v0, v1), (v1[1], v2[1], v1, v2)] {
        if hi - lo <= 1e-15 * (v2[1] - v0[1]).max(1.0) {
            continue;
        }
        let mut f = |y: f64| inner(y, e0, e1);
        let coarse = fixed_gl(&mut f, lo, hi, 16, 12);
        let (value, ok) = adaptive_gl(&mut f, lo, hi, rel_tol * coarse.abs().max(1e-300), 34);
        total += value;
        converged &= ok;
    }
    (total, converged)
}

/// Composite Gauss estimate with `panels` uniform panels of `n` points.
pub fn fixed_gl(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, panels: usize, n: usize) -> f64 {
    let (nodes, weights) = gl_cached(n);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let x0 = a + k as f64 * width;
        let mut acc = 0.0;
        for (&t, &w) in nodes.iter().zip(weights) {
            acc += w * f(x0 + t * width);
        }
        total += acc * width;
    }
    total
}

/// Adaptive bisection with a 15-point Gauss estimate per interval: accepts
/// when whole and halved estimates agree within the absolute tolerance.
pub fn adaptive_gl(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_depth: usize,
) -> (f64, bool) {
    fn gl15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let (nodes, weights) = gl_cached(15);
        let width = b - a;
        let mut acc = 0.0;
        for (&t, &w) in nodes.iter().zip(weights) {
            acc += w * f(a + t * width);
        }
        acc * width
    }
    fn recurse(
        f: &mut impl FnMut(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> (f64, bool) {
        let mid = 0.5 * (a + b);
        let left = gl15(f, a, mid);
        let right = gl15(f, mid, b);
        if (left + right - whole).abs() <= tol || depth == 0 {
            (left + right, (left + right - whole).abs() <= tol || depth > 0)
        } else {
            let (lv, lok) = recurse(f, a, mid, left, 0.5 * tol, depth - 1);
            let (rv, rok) = recurse(f, mid, b, right, 0.5 * tol, depth - 1);
            (lv + rv, lok && rok)
        }
    }
    let whole = gl15(f, a, b);
    recurse(f, a, b, whole, abs_tol, max_depth)
}

/// Adaptive quadtree integration of a smooth-except-on-small-sets function
/// over a triangle: greedy refinement of the cells with the largest
/// discrepancy between a one-level and a two-level estimate.
///
/// Returns `(value, converged)`.
pub fn integrate_smooth_tri(
    f: &mut impl FnMut(f64, f64) -> f64,
    verts: &[[f64; 2]; 3],
    rel_tol: f64,
    max_cells: usize,
) -> (f64, bool) {
    // Collapsed 6x6 Gauss rule on the unit triangle.
    static TRI_RULE: Lazy<(Vec<[f64; 2]>, Vec<f64>)> = Lazy::new(|| {
        let rule = crate::fem::quadrature_rule(crate::fem::Shape::Triangle, 10).unwrap();
        (rule.points, rule.weights)
    });
    let rule_on = |f: &mut dyn FnMut(f64, f64) -> f64, v: &[[f64; 2]; 3]| -> f64 {
        let (pts, wts) = &*TRI_RULE;
        let [a, b, c] = v;
        let (j00, j01) = (b[0] - a[0], c[0] - a[0]);
        let (j10, j11) = (b[1] - a[1], c[1] - a[1]);
        let det = (j00 * j11 - j01 * j10).abs();
        let mut acc = 0.0;
        for (p, &w) in pts.iter().zip(wts) {
            let x = a[0] + j00 * p[0] + j01 * p[1];
            let y = a[1] + j10 * p[0] + j11 * p[1];
            acc += w * f(x, y);
        }
        acc * det
    };
    let children = |v: &[[f64; 2]; 3]| -> [[[f64; 2]; 3]; 4] {
        let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let (m01, m12, m20) = (mid(v[0], v[1]), mid(v[1], v[2]), mid(v[2], v[0]));
        [
            [v[0], m01, m20],
            [m01, v[1], m12],
            [m20, m12, v[2]],
            [m01, m12, m20],
        ]
    };

    struct Cell {
        verts: [[f64; 2]; 3],
        value: f64,
        error: f64,
        id: u64,
    }
    impl PartialEq for Cell {
        fn eq(&self, other: &Self) -> bool {
            self.error == other.error && self.id == other.id
        }
    }
    impl Eq for Cell {}
    impl PartialOrd for Cell {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Cell {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            // Max-heap on error; ties broken by insertion order.
            self.error
                .total_cmp(&other.error)
                .then(other.id.cmp(&self.id))
        }
    }

    let mut next_id = 0u64;
    let make_cell = |f: &mut dyn FnMut(f64, f64) -> f64, v: [[f64; 2]; 3], id: &mut u64| -> Cell {
        let coarse = rule_on(f, &v);
        let fine: f64 = children(&v).iter().map(|c| rule_on(f, c)).sum();
        *id += 1;
        Cell {
            verts: v,
            value: fine,
            error: (fine - coarse).abs(),
            id: *id,
        }
    };

    let root = make_cell(f, *verts, &mut next_id);
    let (mut total, mut err) = (root.value, root.error);
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(root);
    loop {
        if err <= rel_tol * total.abs().max(1e-300) {
            return (total, true);
        }
        if heap.len() + 3 > max_cells {
            return (total, false);
        }
        let cell = heap.pop().expect("heap cannot be empty before convergence");
        total -= cell.value;
        err -= cell.error;
        for child_verts in children(&cell.verts) {
            let child = make_cell(f, child_verts, &mut next_id);
            total += child.value;
            err += child.error;
            heap.push(child);
        }
    }
}
