//! Small polynomial toolkit for the verification checks: dense monomial
//! representations in one and two variables, shifted Legendre bases, line
//! restrictions and real-root isolation.

/// 1D polynomial, monomial coefficients in ascending order.
#[derive(Clone, Debug)]
pub struct Poly1 {
    pub coeffs: Vec<f64>,
}

impl Poly1 {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly1 { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly1 {
        if self.coeffs.len() <= 1 {
            return Poly1::new(vec![0.0]);
        }
        Poly1::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| (i + 1) as f64 * c)
                .collect(),
        )
    }

    /// Trims trailing near-zero coefficients relative to the largest one.
    fn trimmed(&self) -> &[f64] {
        let scale = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let mut hi = self.coeffs.len();
        while hi > 1 && self.coeffs[hi - 1].abs() <= 1e-14 * scale {
            hi -= 1;
        }
        &self.coeffs[..hi]
    }

    /// Real roots in [lo, hi], ascending, found by recursive critical-point
    /// isolation and bisection. Roots of even multiplicity (no sign change)
    /// may be missed, which is harmless for integration splitting.
    pub fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let trimmed = Poly1::new(self.trimmed().to_vec());
        match trimmed.degree() {
            0 => Vec::new(),
            1 => {
                let root = -trimmed.coeffs[0] / trimmed.coeffs[1];
                if root >= lo && root <= hi {
                    vec![root]
                } else {
                    Vec::new()
                }
            }
            _ => {
                let critical = trimmed.derivative().roots_in(lo, hi);
                let mut breaks = Vec::with_capacity(critical.len() + 2);
                breaks.push(lo);
                breaks.extend(critical);
                breaks.push(hi);
                let mut roots = Vec::new();
                for pair in breaks.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    if b <= a {
                        continue;
                    }
                    let (fa, fb) = (trimmed.eval(a), trimmed.eval(b));
                    if fa == 0.0 {
                        if roots.last().map_or(true, |&r: &f64| (r - a).abs() > 1e-13) {
                            roots.push(a);
                        }
                        continue;
                    }
                    if fa * fb < 0.0 {
                        let (mut a, mut b, mut fa) = (a, b, fa);
                        for _ in 0..90 {
                            let mid = 0.5 * (a + b);
                            let fm = trimmed.eval(mid);
                            if fm == 0.0 {
                                a = mid;
                                b = mid;
                                break;
                            }
                            if fa * fm < 0.0 {
                                b = mid;
                            } else {
                                a = mid;
                                fa = fm;
                            }
                        }
                        roots.push(0.5 * (a + b));
                    }
                }
                let fb = trimmed.eval(hi);
                if fb == 0.0 && roots.last().map_or(true, |&r| (r - hi).abs() > 1e-13) {
                    roots.push(hi);
                }
                roots
            }
        }
    }
}

/// Monomial coefficients of the shifted Legendre polynomials P_k(2x - 1) on
/// [0, 1], degrees 0..=r.
pub fn shifted_legendre_monomials(r: usize) -> Vec<Poly1> {
    let mut out: Vec<Poly1> = Vec::with_capacity(r + 1);
    out.push(Poly1::new(vec![1.0]));
    if r >= 1 {
        out.push(Poly1::new(vec![-1.0, 2.0]));
    }
    for k in 1..r {
        // (k+1) P_{k+1} = (2k+1)(2x-1) P_k - k P_{k-1}
        let pk = &out[k].coeffs;
        let pk1 = &out[k - 1].coeffs;
        let mut next = vec![0.0; k + 2];
        let a = (2 * k + 1) as f64 / (k + 1) as f64;
        let b = k as f64 / (k + 1) as f64;
        for (i, &c) in pk.iter().enumerate() {
            next[i + 1] += 2.0 * a * c;
            next[i] -= a * c;
        }
        for (i, &c) in pk1.iter().enumerate() {
            next[i] -= b * c;
        }
        out.push(Poly1::new(next));
    }
    out
}

/// Random 1D polynomial with standard normal coefficients in the shifted
/// Legendre basis.
pub fn random_legendre_series(
    basis: &[Poly1],
    rng: &mut impl rand::Rng,
) -> Poly1 {
    use rand_distr::{Distribution, StandardNormal};
    let degree = basis.len() - 1;
    let mut coeffs = vec![0.0; degree + 1];
    for b in basis {
        let weight: f64 = StandardNormal.sample(rng);
        for (i, &c) in b.coeffs.iter().enumerate() {
            coeffs[i] += weight * c;
        }
    }
    Poly1::new(coeffs)
}

/// 2D polynomial of total degree <= r, dense monomial coefficients indexed
/// by `a * (r + 1) + b` for the x^a y^b term.
#[derive(Clone, Debug)]
pub struct Poly2 {
    pub max_degree: usize,
    pub coeffs: Vec<f64>,
}

impl Poly2 {
    pub fn zero(r: usize) -> Self {
        Poly2 {
            max_degree: r,
            coeffs: vec![0.0; (r + 1) * (r + 1)],
        }
    }

    #[inline]
    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        self.coeffs[a * (self.max_degree + 1) + b]
    }

    #[inline]
    pub fn coeff_mut(&mut self, a: usize, b: usize) -> &mut f64 {
        &mut self.coeffs[a * (self.max_degree + 1) + b]
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let r = self.max_degree;
        let mut acc = 0.0;
        // Horner in x of Horner-in-y rows.
        for a in (0..=r).rev() {
            let mut row = 0.0;
            for b in (0..=r - a).rev() {
                row = row * y + self.coeff(a, b);
            }
            acc = acc * x + row;
        }
        acc
    }

    pub fn dx(&self) -> Poly2 {
        let r = self.max_degree;
        let mut out = Poly2::zero(r.saturating_sub(1));
        for a in 1..=r {
            for b in 0..=r - a {
                *out.coeff_mut(a - 1, b) = a as f64 * self.coeff(a, b);
            }
        }
        out
    }

    pub fn dy(&self) -> Poly2 {
        let r = self.max_degree;
        let mut out = Poly2::zero(r.saturating_sub(1));
        for a in 0..=r {
            for b in 1..=r - a {
                *out.coeff_mut(a, b - 1) = b as f64 * self.coeff(a, b);
            }
        }
        out
    }

    /// Coefficients (in x) of the restriction y = const.
    pub fn restrict_y(&self, y: f64) -> Poly1 {
        let r = self.max_degree;
        let coeffs = (0..=r)
            .map(|a| {
                let mut row = 0.0;
                for b in (0..=r - a).rev() {
                    row = row * y + self.coeff(a, b);
                }
                row
            })
            .collect();
        Poly1::new(coeffs)
    }

    /// Restriction to the parametrized line origin + t * dir, as a 1D
    /// polynomial in t.
    pub fn restrict_line(&self, origin: [f64; 2], dir: [f64; 2]) -> Poly1 {
        let r = self.max_degree;
        let mut out = vec![0.0; r + 1];
        // Binomial expansions of (ox + t dx)^a and (oy + t dy)^b.
        let pow_terms = |base: f64, step: f64, n: usize| -> Vec<Vec<f64>> {
            // pow_terms[k] = coefficients of (base + t * step)^k in t.
            let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
            for _ in 0..n {
                let prev = rows.last().unwrap();
                let mut next = vec![0.0; prev.len() + 1];
                for (i, &c) in prev.iter().enumerate() {
                    next[i] += c * base;
                    next[i + 1] += c * step;
                }
                rows.push(next);
            }
            rows
        };
        let xs = pow_terms(origin[0], dir[0], r);
        let ys = pow_terms(origin[1], dir[1], r);
        for a in 0..=r {
            for b in 0..=r - a {
                let c = self.coeff(a, b);
                if c == 0.0 {
                    continue;
                }
                for (i, &cx) in xs[a].iter().enumerate() {
                    for (j, &cy) in ys[b].iter().enumerate() {
                        out[i + j] += c * cx * cy;
                    }
                }
            }
        }
        Poly1::new(out)
    }
}

/// Random polynomial of total degree <= r with standard normal coefficients
/// in monomials of the centered, size-normalized local frame of a triangle.
pub fn random_poly_on_triangle(
    r: usize,
    verts: &[[f64; 2]; 3],
    rng: &mut impl rand::Rng,
) -> Poly2 {
    use rand_distr::{Distribution, StandardNormal};
    let cx = (verts[0][0] + verts[1][0] + verts[2][0]) / 3.0;
    let cy = (verts[0][1] + verts[1][1] + verts[2][1]) / 3.0;
    let d = |u: [f64; 2], v: [f64; 2]| (u[0] - v[0]).hypot(u[1] - v[1]);
    let h = d(verts[0], verts[1])
        .max(d(verts[1], verts[2]))
        .max(d(verts[2], verts[0]));
    // Local monomial ((x-cx)/h)^a ((y-cy)/h)^b expanded into physical x^i y^j.
    let binom_row = |base: f64, scale: f64, n: usize| -> Vec<Vec<f64>> {
        let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
        for _ in 0..n {
            let prev = rows.last().unwrap();
            let mut next = vec![0.0; prev.len() + 1];
            for (i, &c) in prev.iter().enumerate() {
                next[i] += c * base;
                next[i + 1] += c * scale;
            }
            rows.push(next);
        }
        rows
    };
    let xs = binom_row(-cx / h, 1.0 / h, r);
    let ys = binom_row(-cy / h, 1.0 / h, r);
    let mut out = Poly2::zero(r);
    for a in 0..=r {
        for b in 0..=r - a {
            let c: f64 = StandardNormal.sample(rng);
            for (i, &cx_term) in xs[a].iter().enumerate() {
                for (j, &cy_term) in ys[b].iter().enumerate() {
                    *out.coeff_mut(i, j) += c * cx_term * cy_term;
                }
            }
        }
    }
    out
}
