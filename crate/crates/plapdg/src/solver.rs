//! Newton-Raphson iteration with continuation in the nonlinearity index and
//! a direct sparse linear solve.

use crate::assembly::{jacobian, residual, NonlinearFormContext, SparseSystem};
use crate::error::SolveError;
use crate::fem::{DgFunction, DgSpace};
use crate::penalty::{PenaltyField, RationalExponent};
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use num_rational::Ratio;
use std::sync::Arc;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Absolute l2 target for the residual vector.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Backtracking line search: halve the step until the residual norm
    /// decreases (at most 20 halvings). Plain Newton never triggers it on
    /// the study problems; it is a safety net for coarse meshes.
    pub line_search: bool,
    /// Continuation step in the nonlinearity index (default 1/2).
    pub continuation_step: Ratio<i64>,
    pub linear_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            newton_tol: 1e-10,
            max_newton_iters: 60,
            line_search: true,
            continuation_step: Ratio::new(1, 2),
            // Relative to ||b||. Values below ~1e-11 are not attainable in
            // f64 for penalty-scaled systems beyond a few 10^4 unknowns even
            // with iterative refinement; 1e-10 keeps the linear error four
            // orders below anything the Newton tolerance can see.
            linear_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct StageStats {
    /// Nonlinearity index solved in this stage.
    pub q: f64,
    pub newton_iters: usize,
    pub final_residual: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct SolveStats {
    pub stages: Vec<StageStats>,
}

impl SolveStats {
    pub fn total_newton_iters(&self) -> usize {
        self.stages.iter().map(|s| s.newton_iters).sum()
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct sparse LU solve with a residual guarantee.
pub fn linear_solve(system: &SparseSystem, rhs: &[f64], tol: f64) -> Result<Vec<f64>, SolveError> {
    assert_eq!(system.dim, rhs.len(), "system and rhs dimensions must match");
    // Keep the factorization single-threaded so solves are bitwise
    // reproducible regardless of the ambient thread pool.
    faer::set_global_parallelism(faer::Par::Seq);
    let entries: Vec<Triplet<usize, usize, f64>> = system
        .merged()
        .into_iter()
        .map(|(r, c, v)| Triplet::new(r, c, v))
        .collect();
    let matrix = SparseColMat::try_new_from_triplets(system.dim, system.dim, &entries)
        .map_err(|e| SolveError::Linear(format!("assembling sparse matrix: {e:?}")))?;
    let lu = matrix
        .sp_lu()
        .map_err(|e| SolveError::Linear(format!("LU factorization failed: {e:?}")))?;
    let b = Mat::from_fn(system.dim, 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    let mut solution: Vec<f64> = (0..system.dim).map(|i| x[(i, 0)]).collect();

    let rhs_norm = l2_norm(rhs);
    if rhs_norm == 0.0 {
        return Ok(solution);
    }
    // Iterative refinement with the existing factorization recovers the
    // digits the factorization loses on ill-conditioned penalty matrices.
    let mut rel_residual = f64::INFINITY;
    for round in 0..=4 {
        let mut defect = system.matvec(&solution);
        for (d, b) in defect.iter_mut().zip(rhs) {
            *d = b - *d;
        }
        rel_residual = l2_norm(&defect) / rhs_norm;
        if !rel_residual.is_finite() || rel_residual <= tol || round == 4 {
            break;
        }
        let d = Mat::from_fn(system.dim, 1, |i, _| defect[i]);
        let dx = lu.solve(&d);
        for (i, s) in solution.iter_mut().enumerate() {
            *s += dx[(i, 0)];
        }
    }
    if !rel_residual.is_finite() || rel_residual > tol {
        return Err(SolveError::LinearTolerance {
            rel_residual,
            tol,
            dim: system.dim,
        });
    }
    Ok(solution)
}

/// Newton iteration on the residual of `ctx` starting from `u0`.
pub fn newton_solve(
    ctx: &NonlinearFormContext,
    f: &dyn Fn([f64; 2]) -> f64,
    u0: DgFunction,
    opts: &SolveOptions,
) -> Result<(DgFunction, StageStats), SolveError> {
    let start = Instant::now();
    let mut u = u0;
    let mut res = residual(ctx, &u, f)?;
    let mut res_norm = l2_norm(&res);
    let mut history = vec![res_norm];
    let mut iters = 0;

    while res_norm > opts.newton_tol {
        if iters >= opts.max_newton_iters {
            return Err(SolveError::NonConvergence {
                iters,
                best_residual: history.iter().copied().fold(f64::INFINITY, f64::min),
                residual_history: history,
            });
        }
        let jac = jacobian(ctx, &u)?;
        let neg_res: Vec<f64> = res.iter().map(|r| -r).collect();
        let step = linear_solve(&jac, &neg_res, opts.linear_tol)?;

        let mut lambda = 1.0;
        loop {
            let mut trial = u.clone();
            for (c, s) in trial.coeffs.iter_mut().zip(&step) {
                *c += lambda * s;
            }
            let trial_res = residual(ctx, &trial, f)?;
            let trial_norm = l2_norm(&trial_res);
            let accept = !opts.line_search
                || trial_norm < res_norm
                || trial_norm <= opts.newton_tol
                || lambda <= 1.0 / (1 << 20) as f64;
            if accept {
                u = trial;
                res = trial_res;
                res_norm = trial_norm;
                break;
            }
            lambda *= 0.5;
        }
        history.push(res_norm);
        iters += 1;
    }

    Ok((
        u,
        StageStats {
            q: ctx.p.value(),
            newton_iters: iters,
            final_residual: res_norm,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    ))
}

/// The continuation schedule 2, 2 + s, 2 + 2s, ..., clamped to `p_target`.
pub fn continuation_schedule(p_target: Ratio<i64>, step: Ratio<i64>) -> Vec<Ratio<i64>> {
    assert!(step > Ratio::new(0, 1));
    let two = Ratio::from_integer(2);
    let mut schedule = vec![two];
    let mut q = two;
    while q < p_target {
        q += step;
        schedule.push(q.min(p_target));
    }
    schedule
}

/// Solves the p-Laplacian by continuation: each stage solves the
/// q-Laplacian with the penalty rebuilt for the current q, warm-starting
/// Newton from the previous stage's solution.
pub fn continuation_solve(
    space: &Arc<DgSpace>,
    penalty_builder: &dyn Fn(&RationalExponent) -> PenaltyField,
    p_target: &RationalExponent,
    theta: f64,
    f: &dyn Fn([f64; 2]) -> f64,
    opts: &SolveOptions,
    quad_degree_override: Option<usize>,
) -> Result<(DgFunction, SolveStats), SolveError> {
    let mut stats = SolveStats::default();
    let mut u = DgFunction::zero(space.clone());
    for q in continuation_schedule(p_target.ratio(), opts.continuation_step) {
        let q_exp = RationalExponent::from_ratio(q).expect("schedule stays within [2, p]");
        let penalty = penalty_builder(&q_exp);
        let ctx =
            NonlinearFormContext::with_quadrature(space.clone(), penalty, q_exp, theta, quad_degree_override)?;
        let (next, stage) = newton_solve(&ctx, f, u, opts).map_err(|e| SolveError::Continuation {
            q: q_exp.value(),
            source: Box::new(e),
        })?;
        u = next;
        stats.stages.push(stage);
    }
    Ok((u, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system_returns_rhs() {
        let mut sys = SparseSystem::new(3);
        for i in 0..3 {
            sys.push(i, i, 1.0);
        }
        let x = linear_solve(&sys, &[1.0, -2.0, 3.0], 1e-12).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn diagonal_system() {
        let mut sys = SparseSystem::new(2);
        sys.push(0, 0, 2.0);
        sys.push(1, 1, 4.0);
        let x = linear_solve(&sys, &[2.0, 4.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_spd_system_meets_tolerance() {
        // A = M^T M + I for a random-ish 50x50 M.
        let n = 50;
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let m: Vec<f64> = (0..n * n).map(|_| next()).collect();
        let mut sys = SparseSystem::new(n);
        for i in 0..n {
            for j in 0..n {
                let mut a = if i == j { 1.0 } else { 0.0 };
                for k in 0..n {
                    a += m[k * n + i] * m[k * n + j];
                }
                sys.push(i, j, a);
            }
        }
        let rhs: Vec<f64> = (0..n).map(|_| next()).collect();
        let x = linear_solve(&sys, &rhs, 1e-12).unwrap();
        let mut r = sys.matvec(&x);
        for (a, b) in r.iter_mut().zip(&rhs) {
            *a -= b;
        }
        assert!(l2_norm(&r) / l2_norm(&rhs) <= 1e-12);
    }

    #[test]
    fn singular_system_is_reported() {
        let mut sys = SparseSystem::new(2);
        sys.push(0, 0, 1.0);
        sys.push(0, 1, 1.0);
        sys.push(1, 0, 1.0);
        sys.push(1, 1, 1.0);
        assert!(linear_solve(&sys, &[1.0, 0.0], 1e-12).is_err());
    }

    #[test]
    fn continuation_schedules() {
        let r = |n, d| Ratio::new(n, d);
        let sched = |target: Ratio<i64>| {
            continuation_schedule(target, r(1, 2))
                .into_iter()
                .map(|q| (*q.numer(), *q.denom()))
                .collect::<Vec<_>>()
        };
        assert_eq!(sched(r(4, 1)), vec![(2, 1), (5, 2), (3, 1), (7, 2), (4, 1)]);
        assert_eq!(sched(r(5, 2)), vec![(2, 1), (5, 2)]);
        assert_eq!(sched(r(11, 4)), vec![(2, 1), (5, 2), (11, 4)]);
        assert_eq!(sched(r(2, 1)), vec![(2, 1)]);
    }
}
