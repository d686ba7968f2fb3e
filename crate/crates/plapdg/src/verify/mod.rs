//! Randomized numerical certification of the algebraic and trace-inverse
//! inequalities that back the penalty construction, plus empirical
//! estimation of the monotonicity constants.
//!
//! Every check draws seeded samples (sample i uses an RNG derived from
//! `seed` and `i`, so results are independent of the worker count), computes
//! the ratio of the inequality's left-hand side to its right-hand side and
//! counts violations beyond a 1e-10 tolerance that absorbs quadrature error.
//! Candidate violations of quadrature-based checks are re-evaluated at
//! tighter tolerance before being counted, so a reported violation is not a
//! quadrature artifact. Samples whose integrals fail to converge are
//! excluded and counted separately.

pub mod poly;
pub mod quad;

use crate::penalty::RationalExponent;
use poly::{random_legendre_series, random_poly_on_triangle, shifted_legendre_monomials, Poly2};
use quad::{integrate_abs_pow_1d, integrate_abs_pow_tri, integrate_smooth_tri};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Tolerance on the LHS / (bound * RHS) ratio.
pub const RATIO_TOL: f64 = 1e-10;

/// Outcome of one randomized inequality check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub lemma: String,
    pub samples: u64,
    pub violations: u64,
    /// Samples dropped because a quadrature failed to converge.
    pub excluded: u64,
    /// Largest LHS / (bound * RHS) ratio observed; at most 1 when the
    /// inequality holds.
    pub max_ratio: f64,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
    /// Auxiliary observed quantities (alternative constant groupings etc.).
    pub extra: BTreeMap<String, f64>,
}

impl CheckReport {
    fn new(lemma: impl Into<String>, seed: u64) -> Self {
        CheckReport {
            lemma: lemma.into(),
            samples: 0,
            violations: 0,
            excluded: 0,
            max_ratio: 0.0,
            seed,
            params: BTreeMap::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15u64.wrapping_mul(index + 1))
}

#[derive(Clone, Copy, Default)]
struct SampleOutcome {
    ratio: f64,
    violated: bool,
    excluded: bool,
}

fn run_samples(
    n_samples: u64,
    per_sample: impl Fn(u64) -> SampleOutcome + Sync,
    report: &mut CheckReport,
) {
    let (max_ratio, violations, excluded) = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let out = per_sample(i);
            (
                if out.excluded { 0.0 } else { out.ratio },
                u64::from(out.violated && !out.excluded),
                u64::from(out.excluded),
            )
        })
        .reduce(
            || (0.0, 0, 0),
            |a, b| (a.0.max(b.0), a.1 + b.1, a.2 + b.2),
        );
    report.samples = n_samples;
    report.max_ratio = max_ratio;
    report.violations = violations;
    report.excluded = excluded;
}

/// Sup-norm estimate on a dense grid of [0, 1] including both endpoints,
/// refined once around the coarse argmax. Returns (location, value).
fn sup_on_grid(f: impl Fn(f64) -> f64) -> (f64, f64) {
    const N: usize = 2000;
    let mut best = (0.0, 0.0);
    for i in 0..=N {
        let x = i as f64 / N as f64;
        let v = f(x).abs();
        if v > best.1 {
            best = (x, v);
        }
    }
    let spacing = 1.0 / N as f64;
    let (lo, hi) = ((best.0 - spacing).max(0.0), (best.0 + spacing).min(1.0));
    for i in 0..=80 {
        let x = lo + (hi - lo) * i as f64 / 80.0;
        let v = f(x).abs();
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Checks the polynomial derivative bound |v'|_inf <= 2 r^2 |v|_inf on
/// [0, 1] for random degree-r polynomials.
pub fn check_markov(r: usize, n_samples: u64, seed: u64) -> CheckReport {
    let mut report = CheckReport::new("markov", seed);
    report.params.insert("r".into(), r.to_string());
    let basis = shifted_legendre_monomials(r);
    run_samples(
        n_samples,
        |i| {
            let mut rng = sample_rng(seed, i);
            let v = random_legendre_series(&basis, &mut rng);
            let dv = v.derivative();
            let (_, sup_v) = sup_on_grid(|x| v.eval(x));
            let (_, sup_dv) = sup_on_grid(|x| dv.eval(x));
            let bound = 2.0 * (r * r) as f64 * sup_v;
            let ratio = if bound == 0.0 {
                f64::from(sup_dv > 0.0)
            } else {
                sup_dv / bound
            };
            SampleOutcome {
                ratio,
                violated: ratio > 1.0 + RATIO_TOL,
                excluded: false,
            }
        },
        &mut report,
    );
    report
}

/// Checks that every degree-r polynomial stays above half its sup norm on an
/// interval of length at least 1 / (2 (1 + 2 r^2)) around its peak.
pub fn check_interval_lemma(r: usize, n_samples: u64, seed: u64) -> CheckReport {
    let mut report = CheckReport::new("interval-flatness", seed);
    report.params.insert("r".into(), r.to_string());
    let basis = shifted_legendre_monomials(r);
    run_samples(
        n_samples,
        |i| {
            let mut rng = sample_rng(seed, i);
            let v = random_legendre_series(&basis, &mut rng);
            interval_flatness_outcome(&v, r)
        },
        &mut report,
    );
    report
}

fn interval_flatness_outcome(v: &poly::Poly1, r: usize) -> SampleOutcome {
    let (x0, sup_v) = sup_on_grid(|x| v.eval(x));
    if sup_v == 0.0 {
        return SampleOutcome::default();
    }
    let delta = 1.0 / (2.0 * (1.0 + 2.0 * (r * r) as f64));
    let (lo, hi) = ((x0 - delta).max(0.0), (x0 + delta).min(1.0));
    assert!(hi - lo >= delta - 1e-15, "interval length must be >= delta");
    let mut min_v = f64::INFINITY;
    for k in 0..=100 {
        let x = lo + (hi - lo) * k as f64 / 100.0;
        min_v = min_v.min(v.eval(x).abs());
    }
    let ratio = 0.5 * sup_v / min_v;
    SampleOutcome {
        ratio,
        violated: ratio > 1.0 + RATIO_TOL,
        excluded: false,
    }
}

/// Random triangle as an affine image of the reference simplex with
/// condition number at most 10, plus a rigid motion.
fn random_triangle(rng: &mut impl Rng) -> [[f64; 2]; 3] {
    let phi1: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let phi2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let cond: f64 = rng.random_range(1.0..10.0);
    let scale: f64 = rng.random_range(0.4..2.0);
    let (s1, s2) = (scale, scale / cond);
    let rot = |a: f64| ([a.cos(), -a.sin()], [a.sin(), a.cos()]);
    let (r1x, r1y) = rot(phi1);
    let (r2x, r2y) = rot(phi2);
    // A = R(phi1) diag(s1, s2) R(phi2)
    let a = [
        [
            r1x[0] * s1 * r2x[0] + r1x[1] * s2 * r2y[0],
            r1x[0] * s1 * r2x[1] + r1x[1] * s2 * r2y[1],
        ],
        [
            r1y[0] * s1 * r2x[0] + r1y[1] * s2 * r2y[0],
            r1y[0] * s1 * r2x[1] + r1y[1] * s2 * r2y[1],
        ],
    ];
    let t = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let map = |x: f64, y: f64| [t[0] + a[0][0] * x + a[0][1] * y, t[1] + a[1][0] * x + a[1][1] * y];
    [map(0.0, 0.0), map(1.0, 0.0), map(0.0, 1.0)]
}

fn triangle_area(v: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
        .abs()
}

/// Checks the L^q trace-inverse estimate
/// int_F |v|^q <= 2^(q+1) C_inv (2 r^2 + 1) |F| / (d |K|) int_K |v|^q
/// on random polynomials over random simplices, for d in {1, 2} and any
/// q > 0 (including q < 1).
pub fn check_trace_inverse(d: usize, r: usize, q: f64, n_samples: u64, seed: u64) -> CheckReport {
    assert!(d == 1 || d == 2, "only d = 1, 2 are supported");
    assert!(q > 0.0);
    let mut report = CheckReport::new(format!("trace-inverse-d{d}"), seed);
    report.params.insert("r".into(), r.to_string());
    report.params.insert("q".into(), format!("{q}"));
    report.params.insert("d".into(), d.to_string());
    let basis = shifted_legendre_monomials(r);
    let factor = 2.0_f64.powf(q + 1.0) * (2.0 * (r * r) as f64 + 1.0);

    run_samples(
        n_samples,
        |i| {
            let mut rng = sample_rng(seed, i);
            if d == 1 {
                // Random interval of length `len`; its faces are the two
                // endpoints with zero-dimensional measure 1, and C_inv = 1.
                // The interval position cancels from both sides, so the
                // polynomial lives on the parameter range [0, 1].
                let len: f64 = rng.random_range(0.2..2.0);
                let v = random_legendre_series(&basis, &mut rng);
                let volume = len * integrate_abs_pow_1d(&v, q, 0.0, 1.0);
                if volume <= 0.0 {
                    return SampleOutcome::default();
                }
                let bound = factor / len * volume;
                let ratio = v.eval(0.0).abs().powf(q).max(v.eval(1.0).abs().powf(q)) / bound;
                SampleOutcome {
                    ratio,
                    violated: ratio > 1.0 + RATIO_TOL,
                    excluded: false,
                }
            } else {
                let verts = random_triangle(&mut rng);
                let v = random_poly_on_triangle(r, &verts, &mut rng);
                trace_inverse_outcome_2d(&v, &verts, q, factor)
            }
        },
        &mut report,
    );
    report
}

fn trace_inverse_outcome_2d(v: &Poly2, verts: &[[f64; 2]; 3], q: f64, factor: f64) -> SampleOutcome {
    let ratio_at = |rel_tol: f64| -> Option<f64> {
        let (volume, converged) = integrate_abs_pow_tri(v, q, verts, rel_tol);
        if !converged || volume <= 0.0 {
            return None;
        }
        let area = triangle_area(verts);
        let mut worst = 0.0_f64;
        for e in 0..3 {
            let a = verts[e];
            let b = verts[(e + 1) % 3];
            let dir = [b[0] - a[0], b[1] - a[1]];
            let len = dir[0].hypot(dir[1]);
            let line = v.restrict_line(a, dir);
            let face = len * integrate_abs_pow_1d(&line, q, 0.0, 1.0);
            let bound = factor * crate::penalty::C_INV_2D * len / (2.0 * area) * volume;
            worst = worst.max(face / bound);
        }
        Some(worst)
    };
    let Some(mut worst) = ratio_at(1e-9) else {
        return SampleOutcome {
            excluded: true,
            ..Default::default()
        };
    };
    if worst > 1.0 + RATIO_TOL {
        // A candidate violation must survive a refined quadrature before it
        // counts; keep the refined ratio either way.
        match ratio_at(1e-12) {
            Some(refined) => worst = refined,
            None => {
                return SampleOutcome {
                    excluded: true,
                    ..Default::default()
                }
            }
        }
    }
    SampleOutcome {
        ratio: worst,
        violated: worst > 1.0 + RATIO_TOL,
        excluded: false,
    }
}

/// Checks the quasi-norm trace-inverse estimate on random pairs (w, v):
/// the face integral of (|grad w| + |grad v|)^(p-2) |grad v|^2 against the
/// element integral, with the constant 2^(p/2 + 1/k_p) C_inv
/// (2 p^2 k_p^2 (r-1)^2 + 1) |F| / (d |K|). The alternative grouping
/// p^2 k_p^2 (2 (r-1)^2 + 1) used by the penalty is reported alongside.
pub fn check_qn_trace_inverse(
    p: &RationalExponent,
    r: usize,
    n_samples: u64,
    seed: u64,
) -> CheckReport {
    assert!(r >= 1);
    let mut report = CheckReport::new("quasinorm-trace-inverse", seed);
    report.params.insert("r".into(), r.to_string());
    report.params.insert("p".into(), p.to_string());
    let (kp, _) = p.quasi_exponents().expect("check requires p > 2");
    let pv = p.value();
    let kpf = kp as f64;
    let rm1 = (r - 1) as f64;
    let prefactor = 2.0_f64.powf(0.5 * pv + 1.0 / kpf) * crate::penalty::C_INV_2D;
    let group_checked = prefactor * (2.0 * pv * pv * kpf * kpf * rm1 * rm1 + 1.0);
    let group_penalty = prefactor * pv * pv * kpf * kpf * (2.0 * rm1 * rm1 + 1.0);

    let outcomes: Vec<(SampleOutcome, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let verts = random_triangle(&mut rng);
            let w = random_poly_on_triangle(r, &verts, &mut rng);
            let v = random_poly_on_triangle(r, &verts, &mut rng);
            let (wx, wy) = (w.dx(), w.dy());
            let (vx, vy) = (v.dx(), v.dy());
            let mut integrand = |x: f64, y: f64| {
                let gw = wx.eval(x, y).hypot(wy.eval(x, y));
                let gv = vx.eval(x, y).hypot(vy.eval(x, y));
                (gw + gv).powf(pv - 2.0) * gv * gv
            };
            let (volume, converged) = integrate_smooth_tri(&mut integrand, &verts, 1e-9, 20_000);
            if !converged || volume <= 0.0 {
                return (
                    SampleOutcome {
                        excluded: true,
                        ..Default::default()
                    },
                    0.0,
                );
            }
            let area = triangle_area(&verts);
            let mut worst = 0.0_f64;
            for e in 0..3 {
                let a = verts[e];
                let b = verts[(e + 1) % 3];
                let dir = [b[0] - a[0], b[1] - a[1]];
                let len = dir[0].hypot(dir[1]);
                let mut line = |t: f64| {
                    let (x, y) = (a[0] + t * dir[0], a[1] + t * dir[1]);
                    integrand(x, y)
                };
                let coarse = quad::fixed_gl(&mut line, 0.0, 1.0, 8, 15);
                let (face_t, ok) =
                    quad::adaptive_gl(&mut line, 0.0, 1.0, 1e-10 * coarse.abs().max(1e-300), 26);
                if !ok {
                    return (
                        SampleOutcome {
                            excluded: true,
                            ..Default::default()
                        },
                        0.0,
                    );
                }
                let face = len * face_t;
                let per_ratio = face * 2.0 * area / (len * volume);
                worst = worst.max(per_ratio);
            }
            let ratio = worst / group_checked;
            (
                SampleOutcome {
                    ratio,
                    violated: ratio > 1.0 + RATIO_TOL,
                    excluded: false,
                },
                worst / group_penalty,
            )
        })
        .collect();

    let mut max_ratio = 0.0_f64;
    let mut max_ratio_penalty = 0.0_f64;
    for (out, penalty_ratio) in &outcomes {
        if out.excluded {
            report.excluded += 1;
        } else {
            max_ratio = max_ratio.max(out.ratio);
            max_ratio_penalty = max_ratio_penalty.max(*penalty_ratio);
            if out.violated {
                report.violations += 1;
            }
        }
    }
    report.samples = n_samples;
    report.max_ratio = max_ratio;
    report
        .extra
        .insert("max_ratio_penalty_grouping".into(), max_ratio_penalty);
    report
}

/// Empirical estimates of the constants (C1, C2) in the monotonicity bounds
///
///   |F(y) - F(z)|       <= C1 (a + |y| + |z|)^(p-2) |y - z|,
///   (F(y) - F(z)).(y-z) >= C2 (a + |y| + |z|)^(p-2) |y - z|^2,
///
/// with F(g) = (a^2 + |g|^2)^((p-2)/2) g. The returned C1 is a max of
/// sampled ratios (an under-estimate of the true supremum) and C2 a min (an
/// over-estimate of the true infimum).
pub fn estimate_monotonicity_constants(p: &RationalExponent, n_samples: u64, seed: u64) -> (f64, f64) {
    let pv = p.value();
    let flux = |a: f64, g: [f64; 2]| -> [f64; 2] {
        let m = (a * a + g[0] * g[0] + g[1] * g[1]).powf(0.5 * (pv - 2.0));
        [m * g[0], m * g[1]]
    };
    let (c1, c2) = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let polar = |rng: &mut ChaCha8Rng, radius: f64| -> [f64; 2] {
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let r: f64 = rng.random_range(0.0..radius);
                [r * phi.cos(), r * phi.sin()]
            };
            // One sample in ten stresses the near-degenerate regime.
            let (a, y, z) = if i % 10 == 9 {
                let y = polar(&mut rng, 10.0);
                let eta = polar(&mut rng, 1e-6);
                (0.0, y, [y[0] + eta[0], y[1] + eta[1]])
            } else {
                let a: f64 = rng.random_range(0.0..10.0);
                (a, polar(&mut rng, 10.0), polar(&mut rng, 10.0))
            };
            let dy = [y[0] - z[0], y[1] - z[1]];
            let dist = dy[0].hypot(dy[1]);
            let scale = (a + y[0].hypot(y[1]) + z[0].hypot(z[1])).powf(pv - 2.0);
            if dist == 0.0 || scale == 0.0 {
                return (0.0, f64::INFINITY);
            }
            let (fy, fz) = (flux(a, y), flux(a, z));
            let df = [fy[0] - fz[0], fy[1] - fz[1]];
            let r1 = df[0].hypot(df[1]) / (scale * dist);
            let r2 = (df[0] * dy[0] + df[1] * dy[1]) / (scale * dist * dist);
            (r1, r2)
        })
        .reduce(
            || (0.0, f64::INFINITY),
            |a, b| (a.0.max(b.0), a.1.min(b.1)),
        );
    (c1, c2)
}

/// Checks the four scalar/vector power-mean inequalities used by the
/// stability constants: the weighted product bound, its two shifted-power
/// variants with mu_eps = max(1, 1/(4 eps)), and the shifted-power triangle
/// inequality with constant max(2, 2^(p-1)).
pub fn check_algebraic(p: &RationalExponent, n_samples: u64, seed: u64) -> Vec<CheckReport> {
    let pv = p.value();
    let pc = p.conjugate_value();
    let names = [
        "young-product",
        "young-shifted-power",
        "young-weighted-power",
        "shifted-power-triangle",
    ];
    let results: Vec<(f64, u64)> = (0..4)
        .map(|which| {
            (0..n_samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = sample_rng(seed.wrapping_add(which as u64 * 0x517c_c1b7), i);
                    let alpha: f64 = rng.random_range(0.0..10.0);
                    let beta1: f64 = rng.random_range(0.0..10.0);
                    let beta2: f64 = rng.random_range(0.0..10.0);
                    let eps: f64 = rng.random_range(0.01..2.0);
                    let gamma: f64 = rng.random_range(0.05..3.0);
                    let lambda: f64 = rng.random_range(0.0..10.0);
                    let mu = 1.0_f64.max(0.25 / eps);
                    let (lhs, rhs) = match which {
                        0 => (
                            beta1 * beta2,
                            eps.powf(pv) / pv * beta1.powf(pv)
                                + beta2.powf(pc) / (pc * eps.powf(pc)),
                        ),
                        1 => (
                            (alpha + beta1).powf(pv - 2.0) * beta1 * beta2,
                            mu * (alpha + beta1).powf(pv - 2.0) * beta1 * beta1
                                + eps * (alpha + beta2).powf(pv - 2.0) * beta2 * beta2,
                        ),
                        2 => (
                            (alpha + beta1).powf(pv - 2.0) * beta1 * beta2,
                            mu / gamma * (alpha + beta1).powf(pv - 2.0) * beta1 * beta1
                                + gamma
                                    * eps
                                    * (alpha + gamma * beta2).powf(pv - 2.0)
                                    * beta2
                                    * beta2,
                        ),
                        _ => {
                            let y: [f64; 2] =
                                [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
                            let z: [f64; 2] =
                                [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
                            let s = [y[0] + z[0], y[1] + z[1]];
                            let (ny, nz, ns) =
                                (y[0].hypot(y[1]), z[0].hypot(z[1]), s[0].hypot(s[1]));
                            (
                                (lambda + ns).powf(pv - 2.0) * ns * ns,
                                2.0_f64.max(2.0_f64.powf(pv - 1.0))
                                    * ((lambda + ny).powf(pv - 2.0) * ny * ny
                                        + (lambda + nz).powf(pv - 2.0) * nz * nz),
                            )
                        }
                    };
                    if rhs == 0.0 {
                        (f64::from(lhs > 0.0) * 2.0, u64::from(lhs > 0.0))
                    } else {
                        let ratio = lhs / rhs;
                        (ratio, u64::from(ratio > 1.0 + RATIO_TOL))
                    }
                })
                .reduce(|| (0.0, 0), |a, b| (a.0.max(b.0), a.1 + b.1))
        })
        .collect();

    names
        .iter()
        .zip(results)
        .map(|(name, (max_ratio, violations))| {
            let mut report = CheckReport::new(*name, seed);
            report.params.insert("p".into(), p.to_string());
            report.samples = n_samples;
            report.max_ratio = max_ratio;
            report.violations = violations;
            report
        })
        .collect()
}
