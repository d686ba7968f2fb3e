//! h- and p-version convergence studies with least-squares rate fits.

use super::fields::{forcing, manufactured_solution};
use crate::assembly::{broken_norm, quasi_norm, ErrorField, NonlinearFormContext};
use crate::error::StudyError;
use crate::fem::DgSpace;
use crate::mesh::build_structured_mesh;
use crate::penalty::{build_penalty, PenaltyMode, RationalExponent};
use crate::solver::{continuation_solve, SolveOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    HVersion,
    PVersion,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub study: StudyKind,
    /// Example problem, 1 or 2.
    pub example: usize,
    /// Exponents p as exact decimal or fractional strings.
    pub p_values: Vec<String>,
    /// Polynomial degrees: the h-study solves each degree on every level,
    /// the p-study sweeps them on the fixed mesh.
    pub r_values: Vec<usize>,
    /// Refinement levels j (mesh size 0.2 / 2^j); h-study only.
    pub levels: Vec<usize>,
    /// Coarse mesh size; level j uses base_h / 2^j.
    pub base_h: f64,
    pub theta: f64,
    pub penalty_mode: PenaltyMode,
    pub penalty_scale: f64,
    /// Override for the default quadrature degree (3 r + 4).
    pub quad_degree: Option<usize>,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Record wall-clock times in the report. Leave off for byte-identical
    /// reruns.
    pub timing: bool,
    /// Echoed into reports for provenance.
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            study: StudyKind::HVersion,
            example: 1,
            p_values: vec!["2.5".into(), "4".into(), "4.5".into()],
            r_values: vec![1, 2],
            levels: vec![0, 1, 2, 3],
            base_h: 0.2,
            theta: -1.0,
            penalty_mode: PenaltyMode::Practical,
            penalty_scale: 10.0,
            quad_degree: None,
            newton_tol: 1e-10,
            max_newton_iters: 60,
            timing: true,
            seed: 0,
        }
    }
}

/// One solved (p, r, h-or-r) cell.
#[derive(Clone, Debug, Serialize)]
pub struct CellResult {
    pub example: usize,
    pub p: String,
    pub p_value: f64,
    pub r: usize,
    /// Level j for h-studies; the degree r for p-studies.
    pub index: usize,
    pub h_max: f64,
    pub n_dofs: usize,
    pub quasi_norm_error: f64,
    pub broken_norm_error: f64,
    pub newton_iters: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeFit {
    pub p: String,
    pub r: usize,
    pub error_kind: String,
    pub slope: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub config: StudyConfig,
    pub cells: Vec<CellResult>,
    pub slopes: Vec<SlopeFit>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitScale {
    LogLog,
    SemiLogY,
}

/// Ordinary least squares on transformed coordinates; returns (slope, R^2).
pub fn fit_slope(points: &[(f64, f64)], scale: FitScale) -> Result<(f64, f64), StudyError> {
    if points.len() < 2 {
        return Err(StudyError::DegenerateFit);
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(x, y) in points {
        if y <= 0.0 || (scale == FitScale::LogLog && x <= 0.0) {
            return Err(StudyError::NonPositiveFitValue(y.min(x)));
        }
        xs.push(match scale {
            FitScale::LogLog => x.ln(),
            FitScale::SemiLogY => x,
        });
        ys.push(y.ln());
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 1e-30 {
        return Err(StudyError::DegenerateFit);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot <= 1e-30 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok((slope, r_squared))
}

fn solve_cell(
    config: &StudyConfig,
    p_text: &str,
    r: usize,
    index: usize,
    h: f64,
) -> Result<CellResult, StudyError> {
    let start = Instant::now();
    let p = RationalExponent::parse(p_text)?;
    let exact = manufactured_solution(config.example);
    let mesh = Arc::new(build_structured_mesh(exact.domain, h)?);
    let space = Arc::new(DgSpace::uniform(mesh.clone(), r)?);
    let p_val = p.value();
    let f = move |x: [f64; 2]| {
        forcing(&exact, p_val, x).expect("forcing exponent was validated")
    };
    let builder = |q: &RationalExponent| {
        build_penalty(&space, q, config.theta, config.penalty_mode, config.penalty_scale)
    };
    let opts = SolveOptions {
        newton_tol: config.newton_tol,
        max_newton_iters: config.max_newton_iters,
        ..SolveOptions::default()
    };
    let (u, stats) = continuation_solve(
        &space,
        &builder,
        &p,
        config.theta,
        &f,
        &opts,
        config.quad_degree,
    )
    .map_err(|e| StudyError::Cell {
        p: p_val,
        r,
        param: if config.study == StudyKind::HVersion {
            "level"
        } else {
            "degree"
        },
        value: index as f64,
        source: Box::new(e),
    })?;

    let exact = manufactured_solution(config.example);
    let ctx = NonlinearFormContext::with_quadrature(
        space.clone(),
        builder(&p),
        p,
        config.theta,
        config.quad_degree,
    )
    .map_err(|e| StudyError::Cell {
        p: p_val,
        r,
        param: "error-context",
        value: index as f64,
        source: Box::new(e.into()),
    })?;
    let err_field = ErrorField::DgMinusExact(&u, &exact);
    let quasi = quasi_norm(&ctx, &err_field, &u);
    let broken = broken_norm(&ctx, &err_field, p_val);

    Ok(CellResult {
        example: config.example,
        p: p_text.to_string(),
        p_value: p_val,
        r,
        index,
        h_max: mesh.h_max(),
        n_dofs: space.n_dofs(),
        quasi_norm_error: quasi,
        broken_norm_error: broken,
        newton_iters: stats.total_newton_iters(),
        wall_ms: if config.timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        },
    })
}

fn fit_all(config: &StudyConfig, cells: &[CellResult]) -> Vec<SlopeFit> {
    let mut slopes = Vec::new();
    for p_text in &config.p_values {
        let fit_kind = |r: usize, kind: &str, extract: &dyn Fn(&CellResult) -> f64| -> Option<SlopeFit> {
            let points: Vec<(f64, f64)> = cells
                .iter()
                .filter(|c| &c.p == p_text && c.r == r)
                .map(|c| {
                    let x = match config.study {
                        StudyKind::HVersion => c.h_max,
                        StudyKind::PVersion => c.index as f64,
                    };
                    (x, extract(c))
                })
                .collect();
            let scale = match config.study {
                StudyKind::HVersion => FitScale::LogLog,
                StudyKind::PVersion => FitScale::SemiLogY,
            };
            fit_slope(&points, scale).ok().map(|(slope, r_squared)| SlopeFit {
                p: p_text.clone(),
                r,
                error_kind: kind.to_string(),
                slope,
                r_squared,
            })
        };
        match config.study {
            StudyKind::HVersion => {
                for &r in &config.r_values {
                    slopes.extend(fit_kind(r, "quasi_norm", &|c| c.quasi_norm_error));
                    slopes.extend(fit_kind(r, "broken_norm", &|c| c.broken_norm_error));
                }
            }
            StudyKind::PVersion => {
                // One fit across the degree sweep; the `r` column records the
                // largest degree.
                let r_max = config.r_values.iter().copied().max().unwrap_or(1);
                slopes.extend(fit_kind_all(cells, p_text, r_max, "quasi_norm", &|c| {
                    c.quasi_norm_error
                }));
                slopes.extend(fit_kind_all(cells, p_text, r_max, "broken_norm", &|c| {
                    c.broken_norm_error
                }));
            }
        }
    }
    slopes
}

fn fit_kind_all(
    cells: &[CellResult],
    p_text: &str,
    r_max: usize,
    kind: &str,
    extract: &dyn Fn(&CellResult) -> f64,
) -> Option<SlopeFit> {
    let points: Vec<(f64, f64)> = cells
        .iter()
        .filter(|c| c.p == p_text)
        .map(|c| (c.r as f64, extract(c)))
        .collect();
    fit_slope(&points, FitScale::SemiLogY)
        .ok()
        .map(|(slope, r_squared)| SlopeFit {
            p: p_text.to_string(),
            r: r_max,
            error_kind: kind.to_string(),
            slope,
            r_squared,
        })
}

/// Mesh-refinement study: solves every (p, r, level) cell and fits log-log
/// slopes of both error norms against the mesh size.
pub fn run_h_study(config: &StudyConfig) -> Result<ConvergenceReport, StudyError> {
    assert_eq!(config.study, StudyKind::HVersion);
    let mut jobs = Vec::new();
    for p_text in &config.p_values {
        for &r in &config.r_values {
            for &j in &config.levels {
                jobs.push((p_text.clone(), r, j, config.base_h / (1 << j) as f64));
            }
        }
    }
    let results: Result<Vec<CellResult>, StudyError> = jobs
        .par_iter()
        .map(|(p_text, r, j, h)| solve_cell(config, p_text, *r, *j, *h))
        .collect();
    let mut cells = results?;
    cells.sort_by(|a, b| {
        a.p_value
            .total_cmp(&b.p_value)
            .then(a.r.cmp(&b.r))
            .then(a.index.cmp(&b.index))
    });
    let slopes = fit_all(config, &cells);
    Ok(ConvergenceReport {
        config: config.clone(),
        cells,
        slopes,
    })
}

/// Degree-elevation study on the fixed coarse mesh: solves every (p, r)
/// cell and fits semi-log slopes of the errors against the degree.
pub fn run_p_study(config: &StudyConfig) -> Result<ConvergenceReport, StudyError> {
    assert_eq!(config.study, StudyKind::PVersion);
    let mut jobs = Vec::new();
    for p_text in &config.p_values {
        for &r in &config.r_values {
            jobs.push((p_text.clone(), r));
        }
    }
    let results: Result<Vec<CellResult>, StudyError> = jobs
        .par_iter()
        .map(|(p_text, r)| solve_cell(config, p_text, *r, *r, config.base_h))
        .collect();
    let mut cells = results?;
    cells.sort_by(|a, b| a.p_value.total_cmp(&b.p_value).then(a.r.cmp(&b.r)));
    let slopes = fit_all(config, &cells);
    Ok(ConvergenceReport {
        config: config.clone(),
        cells,
        slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_slope_exact_line() {
        let (slope, r2) = fit_slope(&[(1.0, 10.0), (2.0, 20.0)], FitScale::LogLog).unwrap();
        assert!((slope - 1.0).abs() < 1e-14);
        assert!((r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fit_slope_exact_power_law() {
        let points: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&h| (h, 3.7 * h * h))
            .collect();
        let (slope, r2) = fit_slope(&points, FitScale::LogLog).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_slope_exact_exponential() {
        let points: Vec<(f64, f64)> = (1..=5).map(|r| (r as f64, 2.0 * (-(r as f64)).exp())).collect();
        let (slope, r2) = fit_slope(&points, FitScale::SemiLogY).unwrap();
        assert!((slope + 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_slope_rejects_degenerate_input() {
        assert!(fit_slope(&[(1.0, 1.0)], FitScale::LogLog).is_err());
        assert!(fit_slope(&[(1.0, 1.0), (1.0, 2.0)], FitScale::LogLog).is_err());
        assert!(fit_slope(&[(1.0, 1.0), (2.0, -1.0)], FitScale::LogLog).is_err());
    }
}
