//! L2-orthonormal modal basis on the reference triangle
//! {(x, y): x, y >= 0, x + y <= 1}.
//!
//! The basis is the Koornwinder/Dubiner family evaluated through pure
//! polynomial recurrences, so values and gradients are well defined on the
//! whole closed triangle including the collapsed vertex. Function (i, j) is
//!
//!   N_ij * Q_i(x, y) * P_j^(2i+1, 0)(2y - 1),
//!
//! where Q_i(x, y) = P_i((2x + y - 1) / (1 - y)) (1 - y)^i satisfies a
//! three-term recurrence with polynomial coefficients and
//! N_ij = sqrt(2 (2i + 1) (i + j + 1)) normalizes to unit L2 norm on the
//! reference triangle (the constant is sqrt(2)).

/// Dimension of the total-degree-r polynomial space on a triangle.
pub fn basis_size(r: usize) -> usize {
    (r + 1) * (r + 2) / 2
}

/// Basis values and reference gradients tabulated at a point set.
#[derive(Clone, Debug)]
pub struct BasisTable {
    pub degree: usize,
    pub n_basis: usize,
    pub n_points: usize,
    values: Vec<f64>,
    grads: Vec<[f64; 2]>,
}

impl BasisTable {
    #[inline]
    pub fn value(&self, basis: usize, point: usize) -> f64 {
        self.values[basis * self.n_points + point]
    }

    #[inline]
    pub fn grad(&self, basis: usize, point: usize) -> [f64; 2] {
        self.grads[basis * self.n_points + point]
    }
}

/// Evaluates all basis functions of total degree at most `r` with gradients.
pub fn tabulate(r: usize, points: &[[f64; 2]]) -> BasisTable {
    let nb = basis_size(r);
    let np = points.len();
    let mut values = vec![0.0; nb * np];
    let mut grads = vec![[0.0, 0.0]; nb * np];

    // Function (i, j) lands at slot (i+j)(i+j+1)/2 + j: ordered by total
    // degree, then ascending j, with the constant first.
    let mut q = vec![0.0; r + 1];
    let mut qx = vec![0.0; r + 1];
    let mut qy = vec![0.0; r + 1];
    for (pt, &[x, y]) in points.iter().enumerate() {
        // Q_i chain.
        q[0] = 1.0;
        qx[0] = 0.0;
        qy[0] = 0.0;
        if r >= 1 {
            q[1] = 2.0 * x + y - 1.0;
            qx[1] = 2.0;
            qy[1] = 1.0;
        }
        let omy2 = (1.0 - y) * (1.0 - y);
        for i in 1..r {
            let a = (2 * i + 1) as f64 / (i + 1) as f64;
            let b = i as f64 / (i + 1) as f64;
            let t = 2.0 * x + y - 1.0;
            q[i + 1] = a * t * q[i] - b * omy2 * q[i - 1];
            qx[i + 1] = a * (2.0 * q[i] + t * qx[i]) - b * omy2 * qx[i - 1];
            qy[i + 1] = a * (q[i] + t * qy[i]) - b * (omy2 * qy[i - 1] - 2.0 * (1.0 - y) * q[i - 1]);
        }

        let s = 2.0 * y - 1.0;
        for i in 0..=r {
            // Jacobi P_j^(alpha, 0)(s) chain with alpha = 2i + 1; derivative
            // taken directly with respect to y (ds/dy = 2).
            let alpha = (2 * i + 1) as f64;
            let (mut p_prev, mut dp_prev) = (0.0, 0.0);
            let (mut p, mut dp) = (1.0, 0.0);
            for j in 0..=(r - i) {
                let nb_idx = (i + j) * (i + j + 1) / 2 + j;
                let norm = (2.0 * (2 * i + 1) as f64 * (i + j + 1) as f64).sqrt();
                values[nb_idx * np + pt] = norm * q[i] * p;
                grads[nb_idx * np + pt] = [
                    norm * qx[i] * p,
                    norm * (qy[i] * p + q[i] * dp),
                ];
                // Advance the Jacobi chain to degree j + 1.
                let (p_next, dp_next) = if j == 0 {
                    (
                        0.5 * ((alpha + 2.0) * s + alpha),
                        alpha + 2.0,
                    )
                } else {
                    let nf = j as f64;
                    let c0 = 2.0 * (nf + 1.0) * (nf + alpha + 1.0) * (2.0 * nf + alpha);
                    let c1 = (2.0 * nf + alpha + 1.0) * (2.0 * nf + alpha) * (2.0 * nf + alpha + 2.0);
                    let c2 = (2.0 * nf + alpha + 1.0) * alpha * alpha;
                    let c3 = 2.0 * (nf + alpha) * nf * (2.0 * nf + alpha + 2.0);
                    (
                        ((c1 * s + c2) * p - c3 * p_prev) / c0,
                        ((c1 * s + c2) * dp + 2.0 * c1 * p - c3 * dp_prev) / c0,
                    )
                };
                p_prev = p;
                dp_prev = dp;
                p = p_next;
                dp = dp_next;
            }
        }
    }

    BasisTable {
        degree: r,
        n_basis: nb,
        n_points: np,
        values,
        grads,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::quadrature::{quadrature_rule, Shape};

    #[test]
    fn constant_basis_is_sqrt_two() {
        let table = tabulate(0, &[[0.2, 0.3], [0.0, 0.0], [0.5, 0.5]]);
        assert_eq!(table.n_basis, 1);
        for pt in 0..3 {
            assert!((table.value(0, pt) - std::f64::consts::SQRT_2).abs() < 1e-15);
            assert_eq!(table.grad(0, pt), [0.0, 0.0]);
        }
    }

    #[test]
    fn gram_matrix_is_identity() {
        for r in [1usize, 2, 3, 5] {
            let rule = quadrature_rule(Shape::Triangle, 2 * r).unwrap();
            let table = tabulate(r, &rule.points);
            let nb = table.n_basis;
            assert_eq!(nb, basis_size(r));
            for a in 0..nb {
                for b in 0..nb {
                    let g: f64 = (0..rule.len())
                        .map(|q| rule.weights[q] * table.value(a, q) * table.value(b, q))
                        .sum();
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!(
                        (g - expected).abs() < 1e-12,
                        "gram[{a}][{b}] = {g} at r = {r}"
                    );
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let pts = [
            [0.11, 0.23],
            [0.4, 0.35],
            [0.61, 0.17],
            [0.05, 0.9],
            [0.33, 0.33],
        ];
        let h = 1e-6;
        for r in [1usize, 3, 5] {
            let table = tabulate(r, &pts);
            for (pt, &[x, y]) in pts.iter().enumerate() {
                let xp = tabulate(r, &[[x + h, y]]);
                let xm = tabulate(r, &[[x - h, y]]);
                let yp = tabulate(r, &[[x, y + h]]);
                let ym = tabulate(r, &[[x, y - h]]);
                for b in 0..table.n_basis {
                    let g = table.grad(b, pt);
                    let fdx = (xp.value(b, 0) - xm.value(b, 0)) / (2.0 * h);
                    let fdy = (yp.value(b, 0) - ym.value(b, 0)) / (2.0 * h);
                    assert!((g[0] - fdx).abs() < 1e-7, "d/dx basis {b} r {r}");
                    assert!((g[1] - fdy).abs() < 1e-7, "d/dy basis {b} r {r}");
                }
            }
        }
    }

    #[test]
    fn spans_low_degree_monomials() {
        // 1, x and y must be exact linear combinations of the degree-1 basis:
        // project and compare at off-grid points.
        let rule = quadrature_rule(Shape::Triangle, 4).unwrap();
        let table = tabulate(1, &rule.points);
        let targets: [fn(f64, f64) -> f64; 3] = [|_, _| 1.0, |x, _| x, |_, y| y];
        let probes = [[0.17, 0.29], [0.55, 0.1]];
        for f in targets {
            let coeffs: Vec<f64> = (0..table.n_basis)
                .map(|b| {
                    (0..rule.len())
                        .map(|q| {
                            rule.weights[q] * f(rule.points[q][0], rule.points[q][1]) * table.value(b, q)
                        })
                        .sum()
                })
                .collect();
            let probe_table = tabulate(1, &probes);
            for (pt, &[x, y]) in probes.iter().enumerate() {
                let value: f64 = (0..probe_table.n_basis)
                    .map(|b| coeffs[b] * probe_table.value(b, pt))
                    .sum();
                assert!((value - f(x, y)).abs() < 1e-13);
            }
        }
    }
}
