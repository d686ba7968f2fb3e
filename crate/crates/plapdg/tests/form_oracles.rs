//! Oracle tests for the nonlinear form assembly: the linear SIPG
//! cross-check, finite-difference Jacobian verification, energy identities
//! and the error-functional closed forms.

mod common;

use common::{random_dg, sipg_system};
use plapdg::assembly::{
    broken_norm, energy, jacobian, quasi_norm, residual, ErrorField, NonlinearFormContext,
};
use plapdg::experiments::{forcing, manufactured_solution};
use plapdg::fem::{project, DgFunction, DgSpace};
use plapdg::mesh::{build_structured_mesh, refine_uniform, Rect};
use plapdg::penalty::{build_penalty, PenaltyMode, RationalExponent};
use std::sync::Arc;

fn space_on(h: f64, r: usize) -> Arc<DgSpace> {
    let mesh = Arc::new(build_structured_mesh(Rect::UNIT, h).unwrap());
    Arc::new(DgSpace::uniform(mesh, r).unwrap())
}

fn ctx_for(
    space: &Arc<DgSpace>,
    p: &RationalExponent,
    theta: f64,
    mode: PenaltyMode,
) -> NonlinearFormContext {
    let penalty = build_penalty(space, p, theta, mode, 10.0);
    NonlinearFormContext::new(space.clone(), penalty, *p, theta).unwrap()
}

#[test]
fn residual_vanishes_at_zero_state() {
    let space = space_on(0.6, 2);
    let p = RationalExponent::new(4, 1).unwrap();
    let ctx = ctx_for(&space, &p, -1.0, PenaltyMode::Practical);
    let u = DgFunction::zero(space.clone());
    let res = residual(&ctx, &u, &|_| 0.0).unwrap();
    assert!(res.iter().all(|&r| r == 0.0));
}

#[test]
fn linear_mode_matches_independent_sipg_assembly() {
    for theta in [-1.0, 0.0, 1.0] {
        for r in [1usize, 2] {
            let space = space_on(0.5, r);
            let p2 = RationalExponent::new(2, 1).unwrap();
            let penalty = build_penalty(&space, &p2, theta, PenaltyMode::Practical, 10.0);
            let ctx =
                NonlinearFormContext::new(space.clone(), penalty.clone(), p2, theta).unwrap();
            let f = |x: [f64; 2]| (3.0 * x[0]).sin() + x[1];

            // Independent route: dense SIPG matrix and Gaussian elimination.
            let (matrix, rhs) = sipg_system(&space, &penalty, theta, &f);
            let reference = matrix.solve(&rhs);

            // Library route: one Newton step from zero solves the linear
            // problem.
            let u0 = DgFunction::zero(space.clone());
            let res0 = residual(&ctx, &u0, &f).unwrap();
            let jac = jacobian(&ctx, &u0).unwrap();
            let neg: Vec<f64> = res0.iter().map(|v| -v).collect();
            let step = plapdg::solver::linear_solve(&jac, &neg, 1e-12).unwrap();

            let scale = reference.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for (a, b) in step.iter().zip(&reference) {
                assert!(
                    (a - b).abs() <= 1e-10 * scale.max(1.0),
                    "theta {theta}, r {r}: {a} vs {b}"
                );
            }

            // The p = 2 Jacobian is constant in u and equals the SIPG matrix.
            let u1 = random_dg(&space, 99);
            let jac1 = jacobian(&ctx, &u1).unwrap();
            let n = space.n_dofs();
            let mut dense = vec![0.0; n * n];
            for (row, col, v) in jac1.merged() {
                dense[row * n + col] = v;
            }
            let mut max_diff: f64 = 0.0;
            let mut max_entry: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    max_diff = max_diff.max((dense[i * n + j] - matrix.get(i, j)).abs());
                    max_entry = max_entry.max(matrix.get(i, j).abs());
                }
            }
            assert!(
                max_diff <= 1e-11 * max_entry,
                "theta {theta}, r {r}: Jacobian deviates from SIPG matrix by {max_diff}"
            );
        }
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let space = space_on(0.75, 2);
    for (p_num, p_den) in [(5i64, 2i64), (4, 1), (9, 2)] {
        let p = RationalExponent::new(p_num, p_den).unwrap();
        let ctx = ctx_for(&space, &p, -1.0, PenaltyMode::Practical);
        let f = |_: [f64; 2]| 1.0;
        let eps = 1e-6;
        for state_seed in 0..3u64 {
            let u = random_dg(&space, 1000 + state_seed);
            let jac = jacobian(&ctx, &u).unwrap();
            for dir_seed in 0..5u64 {
                let h = random_dg(&space, 2000 + dir_seed);
                let jh = jac.matvec(&h.coeffs);
                let mut up = u.clone();
                let mut um = u.clone();
                for ((a, b), d) in up.coeffs.iter_mut().zip(um.coeffs.iter_mut()).zip(&h.coeffs) {
                    *a += eps * d;
                    *b -= eps * d;
                }
                let rp = residual(&ctx, &up, &f).unwrap();
                let rm = residual(&ctx, &um, &f).unwrap();
                let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
                let norm_fd = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
                let err = jh
                    .iter()
                    .zip(&fd)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(
                    err <= 1e-5 * norm_fd,
                    "p {p_num}/{p_den}, state {state_seed}, dir {dir_seed}: rel {}",
                    err / norm_fd
                );
            }
        }
    }
}

#[test]
fn penalty_linearization_is_symmetric_at_zero_gradient() {
    // Piecewise-constant state on the two-element mesh: gradients vanish, so
    // with theta = 0 the skeleton Jacobian reduces to the penalty
    // linearization, which must be symmetric. (With theta = -1 the
    // derivative of the jump-dependent weight couples test gradients to
    // trial jumps asymmetrically; only the linear case p = 2 gives a
    // symmetric matrix there, covered below.)
    let space = space_on(std::f64::consts::SQRT_2, 1);
    let p = RationalExponent::new(4, 1).unwrap();
    let ctx = ctx_for(&space, &p, 0.0, PenaltyMode::Practical);
    let mut coeffs = vec![0.0; space.n_dofs()];
    coeffs[0] = 1.0;
    coeffs[3] = -0.5;
    let u = DgFunction::from_coeffs(space.clone(), coeffs).unwrap();
    let jac = jacobian(&ctx, &u).unwrap();
    let n = space.n_dofs();
    let mut dense = vec![0.0; n * n];
    for (r, c, v) in jac.merged() {
        dense[r * n + c] = v;
    }
    let scale = dense.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in 0..i {
            assert!(
                (dense[i * n + j] - dense[j * n + i]).abs() <= 1e-12 * scale,
                "asymmetry at ({i}, {j})"
            );
        }
    }

    // Full symmetry of the linear symmetric scheme.
    let p2 = RationalExponent::new(2, 1).unwrap();
    let ctx2 = ctx_for(&space, &p2, -1.0, PenaltyMode::Practical);
    let jac2 = jacobian(&ctx2, &u).unwrap();
    let mut dense2 = vec![0.0; n * n];
    for (r, c, v) in jac2.merged() {
        dense2[r * n + c] = v;
    }
    let scale2 = dense2.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in 0..i {
            assert!((dense2[i * n + j] - dense2[j * n + i]).abs() <= 1e-12 * scale2);
        }
    }
}

#[test]
fn energy_identities() {
    let space = space_on(0.6, 4);
    let p = RationalExponent::new(4, 1).unwrap();
    let ctx = ctx_for(&space, &p, -1.0, PenaltyMode::Practical);

    // Zero state has zero energy.
    assert_eq!(energy(&ctx, &DgFunction::zero(space.clone())).unwrap(), 0.0);

    // A global polynomial that also vanishes on the boundary has no jumps
    // anywhere (boundary jumps are the traces themselves), so the energy is
    // the volume integral of |grad u|^p, compared against direct quadrature.
    let poly = |x: [f64; 2]| 7.0 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
    let u_poly = project(&space, poly, 10);
    let e = energy(&ctx, &u_poly).unwrap();
    let mut direct = 0.0;
    let rule = plapdg::fem::quadrature_rule(plapdg::fem::Shape::Triangle, 12).unwrap();
    for k in 0..space.n_elements() {
        let map = space.element_map(k);
        let pts: Vec<[f64; 2]> = rule.points.iter().map(|&xi| map.to_physical(xi)).collect();
        let evals = u_poly.eval(k, &pts).unwrap();
        for (q, (_, g)) in evals.iter().enumerate() {
            direct += rule.weights[q] * map.det * g[0].hypot(g[1]).powi(4);
        }
    }
    assert!((e - direct).abs() <= 1e-10 * direct.max(1.0), "{e} vs {direct}");

    // Energy equals residual(u) . u + int f u for any f (here f = 0 and a
    // nonzero f), since the form is linear in the test slot.
    let u = random_dg(&space, 5);
    let e_u = energy(&ctx, &u).unwrap();
    let res0 = residual(&ctx, &u, &|_| 0.0).unwrap();
    let dot0: f64 = res0.iter().zip(&u.coeffs).map(|(a, b)| a * b).sum();
    assert!((e_u - dot0).abs() <= 1e-10 * e_u.abs().max(1.0));
}

#[test]
fn consistency_defect_is_quadrature_stable() {
    // Project the example-1 exact solution, assemble the residual with its
    // synthesized forcing and verify the defect is (a) small, (b) unchanged
    // to 1e-9 when the quadrature degree is doubled, and (c) shrinking
    // under mesh refinement.
    let exact = manufactured_solution(1);
    let p = RationalExponent::new(4, 1).unwrap();
    let f = |x: [f64; 2]| forcing(&exact, 4.0, x).unwrap();

    let defect = |h: f64, quad: Option<usize>| -> f64 {
        let mesh = Arc::new(build_structured_mesh(Rect::UNIT, h).unwrap());
        let space = Arc::new(DgSpace::uniform(mesh, 2).unwrap());
        let penalty = build_penalty(&space, &p, -1.0, PenaltyMode::Practical, 10.0);
        let ctx =
            NonlinearFormContext::with_quadrature(space.clone(), penalty, p, -1.0, quad).unwrap();
        let u_i = project(&space, |x| exact.value(x), 14);
        let res = residual(&ctx, &u_i, &f).unwrap();
        res.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    };

    let base = defect(0.2, None);
    let doubled = defect(0.2, Some(2 * (3 * 2 + 4)));
    assert!(
        (base - doubled).abs() <= 1e-9,
        "defect moved under quadrature doubling: {base} vs {doubled}"
    );
    let finer = defect(0.1, None);
    assert!(
        finer <= base * 0.75,
        "interpolation defect should shrink under refinement: {base} -> {finer}"
    );
}

#[test]
fn quasi_norm_closed_forms() {
    let two_elem = space_on(std::f64::consts::SQRT_2, 1);
    let p4 = RationalExponent::new(4, 1).unwrap();
    let ctx = ctx_for(&two_elem, &p4, -1.0, PenaltyMode::Practical);

    // Zero error has zero norm of both kinds.
    let zero = DgFunction::zero(two_elem.clone());
    assert_eq!(quasi_norm(&ctx, &ErrorField::Dg(&zero), &zero), 0.0);
    assert_eq!(broken_norm(&ctx, &ErrorField::Dg(&zero), 4.0), 0.0);

    // For p = 2 the quasi-norm is weight-independent and equals the broken
    // norm with q = 2.
    let p2 = RationalExponent::new(2, 1).unwrap();
    let ctx2 = ctx_for(&two_elem, &p2, -1.0, PenaltyMode::Practical);
    let e = random_dg(&two_elem, 17);
    let w1 = random_dg(&two_elem, 18);
    let w2 = random_dg(&two_elem, 19);
    let q1 = quasi_norm(&ctx2, &ErrorField::Dg(&e), &w1);
    let q2 = quasi_norm(&ctx2, &ErrorField::Dg(&e), &w2);
    let b2 = broken_norm(&ctx2, &ErrorField::Dg(&e), 2.0);
    assert!((q1 - q2).abs() <= 1e-12 * q1);
    assert!((q1 - b2).abs() <= 1e-12 * q1);

    // Affine error, zero weight, p = 4 on the two-element mesh: the volume
    // part is |grad e|^4 |Omega| and each boundary face contributes
    // sigma (sigma |e|)^2 e^2 with e = x + 2y + 3, evaluated here by exact
    // segment integrals of the quartic.
    let affine = |x: [f64; 2]| x[0] + 2.0 * x[1] + 3.0;
    let e_aff = project(&two_elem, affine, 8);
    let q = quasi_norm(&ctx, &ErrorField::Dg(&e_aff), &zero);
    let grad_norm_sq = 1.0f64 + 4.0;
    let mut expected = grad_norm_sq * grad_norm_sq; // |grad e|^4 * area 1
    let quartic = |a: f64, b: f64| {
        // int_0^1 (a t + b)^4 dt
        ((a + b).powi(5) - b.powi(5)) / (5.0 * a)
    };
    for (f_idx, face) in two_elem.mesh.interfaces.iter().enumerate() {
        if !face.is_boundary() {
            continue;
        }
        let sigma = ctx.penalty.interfaces[f_idx].sigma;
        let (va, vb) = (
            two_elem.mesh.vertices[face.endpoints[0]],
            two_elem.mesh.vertices[face.endpoints[1]],
        );
        let at_a = affine(va);
        let at_b = affine(vb);
        // e along the edge is linear from at_a to at_b; length is 1.
        expected += sigma.powi(3) * face.length * quartic(at_b - at_a, at_a);
    }
    assert!(
        (q * q - expected).abs() <= 1e-10 * expected,
        "{} vs {expected}",
        q * q
    );
}

#[test]
fn broken_norm_of_continuous_field_is_volume_only() {
    // A global polynomial vanishing on the boundary has no jump terms; the
    // norm must equal the element-wise gradient integral alone.
    let space = space_on(0.6, 4);
    let p = RationalExponent::new(5, 2).unwrap();
    let ctx = ctx_for(&space, &p, -1.0, PenaltyMode::Practical);
    let bubble = |x: [f64; 2]| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
    let u = project(&space, bubble, 12);
    for q_exp in [2.0, 2.5, 4.0] {
        let b = broken_norm(&ctx, &ErrorField::Dg(&u), q_exp);
        let rule = plapdg::fem::quadrature_rule(plapdg::fem::Shape::Triangle, 16).unwrap();
        let mut direct = 0.0;
        for k in 0..space.n_elements() {
            let map = space.element_map(k);
            let pts: Vec<[f64; 2]> = rule.points.iter().map(|&xi| map.to_physical(xi)).collect();
            for (qq, (_, g)) in u.eval(k, &pts).unwrap().iter().enumerate() {
                direct += rule.weights[qq] * map.det * g[0].hypot(g[1]).powf(q_exp);
            }
        }
        let direct = direct.powf(1.0 / q_exp);
        assert!(
            (b - direct).abs() <= 1e-8 * direct,
            "q = {q_exp}: {b} vs {direct}"
        );
    }
}

#[test]
fn broken_norm_power_bounded_by_quasi_norm_square() {
    // With the weight equal to any DG function, |[e]| and |grad e| terms of
    // the broken p-norm are dominated pointwise by the quasi-norm integrand.
    let space = space_on(0.7, 2);
    for (num, den) in [(5i64, 2i64), (4, 1), (9, 2)] {
        let p = RationalExponent::new(num, den).unwrap();
        let ctx = ctx_for(&space, &p, -1.0, PenaltyMode::Practical);
        for seed in 0..10u64 {
            let e = random_dg(&space, 300 + seed);
            let w = random_dg(&space, 400 + seed);
            let quasi = quasi_norm(&ctx, &ErrorField::Dg(&e), &w);
            let broken = broken_norm(&ctx, &ErrorField::Dg(&e), p.value());
            assert!(
                broken.powf(p.value()) <= quasi * quasi * (1.0 + 1e-12),
                "p {num}/{den} seed {seed}: {} vs {}",
                broken.powf(p.value()),
                quasi * quasi
            );
        }
    }
}

#[test]
fn coercivity_with_theoretical_penalty() {
    // Theoretical penalty mode, p = 4, theta = -1: the energy dominates
    // half the broken-norm power on the twice-refined two-element mesh.
    let mesh = build_structured_mesh(Rect::UNIT, std::f64::consts::SQRT_2).unwrap();
    let mesh = Arc::new(refine_uniform(&refine_uniform(&mesh).unwrap()).unwrap());
    let p = RationalExponent::new(4, 1).unwrap();
    for degrees in [vec![2; mesh.n_elements()], (0..mesh.n_elements()).map(|k| 1 + k % 3).collect()]
    {
        let space = Arc::new(DgSpace::with_degrees(mesh.clone(), degrees).unwrap());
        let ctx = ctx_for(&space, &p, -1.0, PenaltyMode::Theoretical);
        for seed in 0..25u64 {
            let mut u = random_dg(&space, 7000 + seed);
            let norm: f64 = u.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
            for c in u.coeffs.iter_mut() {
                *c /= norm;
            }
            let e = energy(&ctx, &u).unwrap();
            let b = broken_norm(&ctx, &ErrorField::Dg(&u), 4.0);
            assert!(
                e >= 0.5 * b.powi(4) * (1.0 - 1e-10),
                "seed {seed}: energy {e} vs half-norm {}",
                0.5 * b.powi(4)
            );
        }
    }
}
