//! Command-line driver: single solves, h/p convergence studies and the
//! inequality verification suite.

use clap::{Args, Parser, Subcommand};
use plapdg::assembly::{broken_norm, quasi_norm, ErrorField, NonlinearFormContext};
use plapdg::experiments::{
    emit_report, forcing, manufactured_solution, run_h_study, run_p_study, StudyConfig, StudyKind,
};
use plapdg::fem::DgSpace;
use plapdg::mesh::{build_structured_mesh, read_json, TriMesh};
use plapdg::penalty::{build_penalty, PenaltyMode, RationalExponent};
use plapdg::solver::{continuation_solve, SolveOptions};
use plapdg::verify;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "plapdg",
    about = "Robust interior-penalty DG solver for the p-Laplacian with a verification suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one Dirichlet problem with a manufactured solution.
    Solve(SolveArgs),
    /// Mesh-refinement convergence study (fixed degrees, shrinking h).
    StudyH(StudyArgs),
    /// Degree-elevation convergence study on a fixed mesh.
    StudyP(StudyArgs),
    /// Randomized certification of the inequality suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Manufactured example (1 or 2).
    #[arg(long, default_value_t = 1)]
    example: usize,
    /// Exponent p as a decimal or fraction string, e.g. 2.5 or 9/2.
    #[arg(long, default_value = "4")]
    p: String,
    /// Uniform polynomial degree.
    #[arg(long, default_value_t = 2)]
    r: usize,
    /// Target mesh size for the structured mesh.
    #[arg(long, default_value_t = 0.2)]
    h: f64,
    /// Read the mesh from a JSON file instead of building one.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long, value_enum, default_value = "practical")]
    penalty_mode: PenaltyModeArg,
    #[arg(long, default_value_t = 10.0)]
    penalty_scale: f64,
    /// Override the default quadrature degree 3 r + 4.
    #[arg(long)]
    quad_degree: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    newton_tol: f64,
    /// Write the solution coefficients to this JSON file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PenaltyModeArg {
    Theoretical,
    Practical,
}

impl From<PenaltyModeArg> for PenaltyMode {
    fn from(mode: PenaltyModeArg) -> Self {
        match mode {
            PenaltyModeArg::Theoretical => PenaltyMode::Theoretical,
            PenaltyModeArg::Practical => PenaltyMode::Practical,
        }
    }
}

#[derive(Args)]
struct StudyArgs {
    /// TOML or JSON study configuration; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    example: Option<usize>,
    /// Comma-separated exponent list, e.g. 2.5,4,4.5.
    #[arg(long, value_delimiter = ',')]
    p: Vec<String>,
    /// Comma-separated degree list.
    #[arg(long, value_delimiter = ',')]
    r: Vec<usize>,
    /// Largest refinement level j (levels run 0..=j); h-study only.
    #[arg(long)]
    max_level: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, value_enum)]
    penalty_mode: Option<PenaltyModeArg>,
    #[arg(long)]
    penalty_scale: Option<f64>,
    #[arg(long)]
    quad_degree: Option<usize>,
    /// Suppress wall-clock columns for byte-reproducible output.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, default_value = "study-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Which check to run: markov, interval, trace, qn-trace, monotonicity,
    /// algebraic or all.
    #[arg(long, default_value = "all")]
    lemma: String,
    /// Maximum polynomial degree for the sweep.
    #[arg(long)]
    r: Option<usize>,
    /// Trace exponent q (trace check only).
    #[arg(long)]
    q: Option<f64>,
    /// Exponent p for the p-dependent checks.
    #[arg(long)]
    p: Option<String>,
    /// Simplex dimension for the trace check (1 or 2).
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Write the JSON reports here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("PLAPDG_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        } else {
            eprintln!("warning: ignoring unparsable PLAPDG_THREADS = {threads}");
        }
    }
    match Cli::parse().command {
        Command::Solve(args) => run_solve(args),
        Command::StudyH(args) => run_study(args, StudyKind::HVersion),
        Command::StudyP(args) => run_study(args, StudyKind::PVersion),
        Command::Verify(args) => run_verify(args),
    }
}

fn run_solve(args: SolveArgs) -> ExitCode {
    let p = match RationalExponent::parse(&args.p) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let exact = manufactured_solution(args.example);
    let mesh: TriMesh = match &args.mesh {
        Some(path) => match read_json(path) {
            Ok(mesh) => mesh,
            Err(e) => {
                eprintln!("error reading mesh: {e}");
                return ExitCode::FAILURE;
            }
        },
        None => match build_structured_mesh(exact.domain, args.h) {
            Ok(mesh) => mesh,
            Err(e) => {
                eprintln!("error building mesh: {e}");
                return ExitCode::FAILURE;
            }
        },
    };
    let mesh = Arc::new(mesh);
    let space = match DgSpace::uniform(mesh.clone(), args.r) {
        Ok(space) => Arc::new(space),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let p_val = p.value();
    let f = {
        let exact = manufactured_solution(args.example);
        move |x: [f64; 2]| forcing(&exact, p_val, x).expect("p was validated at parse time")
    };
    let mode: PenaltyMode = args.penalty_mode.into();
    let builder = |q: &RationalExponent| build_penalty(&space, q, args.theta, mode, args.penalty_scale);
    let opts = SolveOptions {
        newton_tol: args.newton_tol,
        ..SolveOptions::default()
    };
    let solved = continuation_solve(&space, &builder, &p, args.theta, &f, &opts, args.quad_degree);
    let (u, stats) = match solved {
        Ok(out) => out,
        Err(e) => {
            eprintln!("solve failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let ctx = NonlinearFormContext::with_quadrature(
        space.clone(),
        builder(&p),
        p,
        args.theta,
        args.quad_degree,
    )
    .expect("error-measurement context");
    let err_field = ErrorField::DgMinusExact(&u, &exact);
    let summary = serde_json::json!({
        "example": args.example,
        "p": args.p,
        "r": args.r,
        "h_max": mesh.h_max(),
        "n_dofs": space.n_dofs(),
        "stages": stats.stages,
        "quasi_norm_error": quasi_norm(&ctx, &err_field, &u),
        "broken_norm_error": broken_norm(&ctx, &err_field, p_val),
    });
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    if let Some(out) = args.out {
        let payload = serde_json::json!({
            "coefficients": u.coeffs,
            "degrees": space.degrees,
        });
        if let Err(e) = std::fs::write(&out, serde_json::to_vec_pretty(&payload).unwrap()) {
            eprintln!("error writing {}: {e}", out.display());
            return ExitCode::FAILURE;
        }
    }
    ExitCode::SUCCESS
}

fn load_config(path: &PathBuf) -> Result<StudyConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    if path.extension().is_some_and(|ext| ext == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    }
}

fn run_study(args: StudyArgs, kind: StudyKind) -> ExitCode {
    let mut config = match &args.config {
        Some(path) => match load_config(path) {
            Ok(config) => config,
            Err(e) => {
                eprintln!("error loading config: {e}");
                return ExitCode::FAILURE;
            }
        },
        None => StudyConfig {
            study: kind,
            ..StudyConfig::default()
        },
    };
    config.study = kind;
    if kind == StudyKind::PVersion && args.config.is_none() && args.r.is_empty() {
        config.r_values = (1..=5).collect();
    }
    if let Some(example) = args.example {
        config.example = example;
    }
    if !args.p.is_empty() {
        config.p_values = args.p.clone();
    }
    if !args.r.is_empty() {
        config.r_values = args.r.clone();
    }
    if let Some(max_level) = args.max_level {
        config.levels = (0..=max_level).collect();
    }
    if let Some(theta) = args.theta {
        config.theta = theta;
    }
    if let Some(mode) = args.penalty_mode {
        config.penalty_mode = mode.into();
    }
    if let Some(scale) = args.penalty_scale {
        config.penalty_scale = scale;
    }
    if args.quad_degree.is_some() {
        config.quad_degree = args.quad_degree;
    }
    if args.no_timing {
        config.timing = false;
    }

    let report = match kind {
        StudyKind::HVersion => run_h_study(&config),
        StudyKind::PVersion => run_p_study(&config),
    };
    let report = match report {
        Ok(report) => report,
        Err(e) => {
            eprintln!("study failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = emit_report(&report, &args.out_dir) {
        eprintln!("error writing report: {e}");
        return ExitCode::FAILURE;
    }
    for fit in &report.slopes {
        println!(
            "p = {:<5} r = {}: {:<12} slope {:+.3} (R^2 {:.4})",
            fit.p, fit.r, fit.error_kind, fit.slope, fit.r_squared
        );
    }
    println!("report written to {}", args.out_dir.display());
    ExitCode::SUCCESS
}

fn run_verify(args: VerifyArgs) -> ExitCode {
    let mut reports: Vec<verify::CheckReport> = Vec::new();
    let parse_p = |text: &Option<String>, fallback: &str| {
        RationalExponent::parse(text.as_deref().unwrap_or(fallback))
    };
    let lemma = args.lemma.as_str();
    let run_all = lemma == "all";

    if run_all || lemma == "markov" {
        for r in 0..=args.r.unwrap_or(8) {
            reports.push(verify::check_markov(r, args.samples, args.seed));
        }
    }
    if run_all || lemma == "interval" {
        for r in 0..=args.r.unwrap_or(6) {
            reports.push(verify::check_interval_lemma(r, args.samples, args.seed));
        }
    }
    if run_all || lemma == "trace" {
        let dims: Vec<usize> = match args.d {
            Some(d) => vec![d],
            None => vec![1, 2],
        };
        let qs: Vec<f64> = match args.q {
            Some(q) => vec![q],
            None => vec![0.5, 1.0, 2.0, 3.5],
        };
        for &d in &dims {
            for &q in &qs {
                for r in 0..=args.r.unwrap_or(5) {
                    reports.push(verify::check_trace_inverse(d, r, q, args.samples, args.seed));
                }
            }
        }
    }
    if run_all || lemma == "qn-trace" {
        let ps: Vec<String> = match &args.p {
            Some(p) => vec![p.clone()],
            None => ["5/2", "3", "4", "9/2"].iter().map(|s| s.to_string()).collect(),
        };
        for p_text in &ps {
            let p = match RationalExponent::parse(p_text) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            for r in 1..=args.r.unwrap_or(4) {
                reports.push(verify::check_qn_trace_inverse(&p, r, args.samples, args.seed));
            }
        }
    }
    if run_all || lemma == "algebraic" {
        match parse_p(&args.p, "4") {
            Ok(p) => reports.extend(verify::check_algebraic(&p, args.samples, args.seed)),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        }
    }
    if lemma == "monotonicity" {
        match parse_p(&args.p, "4") {
            Ok(p) => {
                let (c1, c2) = verify::estimate_monotonicity_constants(&p, args.samples, args.seed);
                let payload = serde_json::json!({
                    "p": p.to_string(),
                    "samples": args.samples,
                    "seed": args.seed,
                    "c1_underestimate": c1,
                    "c2_overestimate": c2,
                });
                println!("{}", serde_json::to_string_pretty(&payload).unwrap());
                return ExitCode::SUCCESS;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        }
    }
    if reports.is_empty() {
        eprintln!(
            "unknown --lemma '{}': expected markov, interval, trace, qn-trace, monotonicity, algebraic or all",
            args.lemma
        );
        return ExitCode::FAILURE;
    }

    let json = serde_json::to_string_pretty(&reports).unwrap();
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &json) {
                eprintln!("error writing {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        }
        None => println!("{json}"),
    }
    let clean = reports.iter().all(|r| r.passed());
    for report in &reports {
        eprintln!(
            "{:<28} samples {:>7} violations {:>3} excluded {:>3} max ratio {:.6}",
            format!("{}[{}]", report.lemma, summarize_params(report)),
            report.samples,
            report.violations,
            report.excluded,
            report.max_ratio
        );
    }
    if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn summarize_params(report: &verify::CheckReport) -> String {
    report
        .params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}
