//! `jacobi-gl`: forward solves, inversions, round trips and refinement sweeps.
//!
//! Exit codes: 0 success, 2 parse or validation error, 3 numerical failure,
//! 4 non-invertible data, 5 threshold violation (outputs are still written).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use jacobi_gl::config::{parse_pair, Command, RunConfig};
use jacobi_gl::continuum::{run_refinement_study, Perturbation, RefinementStudy};
use jacobi_gl::io::{
    load_operator, load_spectral, save_operator, save_spectral, study_csv, v_eff_csv, write_json,
    write_kernel_csv,
};
use jacobi_gl::recovery::{forward_data, invert, InvertOptions, RecoveredSystem};
use jacobi_gl::spectral::{
    eigensolve, extract_right_spectral_data, extract_spectral_data, parseval_defect,
    regular_solutions, weight_sum_defect, weighted_orthogonality_defect,
};
use jacobi_gl::{
    DiagonalConvention, Error, InversionProblem, JacobiOperator, Method, Orientation, Tolerances,
};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_NONINVERTIBLE: u8 = 4;
const EXIT_THRESHOLD: u8 = 5;

#[derive(Parser)]
#[command(
    name = "jacobi-gl",
    version,
    about = "Discrete Gel'fand-Levitan inversion for Jacobi operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues and weight factors of an operator.
    Forward(Flags),
    /// Recover an operator from spectral data and a reference system.
    Invert(Flags),
    /// Forward-solve a known target, invert it back and compare.
    Roundtrip(Flags),
    /// Refinement study on the free well.
    Sweep(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// JSON run configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Agreement tolerance (round-trip error and recursion-synthesis gap).
    #[arg(long)]
    tol: Option<f64>,
    /// Comma-separated sweep sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    operator: Option<PathBuf>,
    #[arg(long, value_parser = parse_orientation)]
    orientation: Option<Orientation>,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    reference_data: Option<PathBuf>,
    #[arg(long)]
    target_data: Option<PathBuf>,
    #[arg(long)]
    target: Option<PathBuf>,
    /// Level shift `index=delta` (repeatable).
    #[arg(long = "level-shift", value_parser = parse_pair::<usize, f64>)]
    level_shifts: Vec<(usize, f64)>,
    /// Weight factor `index=factor` (repeatable).
    #[arg(long = "weight-factor", value_parser = parse_pair::<usize, f64>)]
    weight_factors: Vec<(usize, f64)>,
    /// Threshold override `key=value` (repeatable).
    #[arg(long = "tolerance", value_parser = parse_pair::<String, f64>)]
    tolerances: Vec<(String, f64)>,
    #[arg(long, value_parser = parse_convention)]
    convention: Option<DiagonalConvention>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_orientation(s: &str) -> Result<Orientation, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("expected left or right, got {s:?}"))
}

fn parse_convention(s: &str) -> Result<DiagonalConvention, String> {
    serde_json::from_value(json!(s))
        .map_err(|_| format!("expected subdiagonal_copy or linear_extrapolation, got {s:?}"))
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NonInvertible { .. } => EXIT_NONINVERTIBLE,
            e if e.is_input_error() => EXIT_INPUT,
            _ => EXIT_NUMERICAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn settings(command: Command, flags: Flags) -> Result<(RunConfig, Tolerances), Failure> {
    let file = match &flags.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut tolerances = file.tolerances.unwrap_or_default();
    for (k, v) in &flags.tolerances {
        tolerances.set(k, *v)?;
    }
    let overrides = RunConfig {
        command: None,
        operator: flags.operator,
        orientation: flags.orientation,
        reference: flags.reference,
        reference_data: flags.reference_data,
        target_data: flags.target_data,
        target: flags.target,
        perturbation: Perturbation {
            level_shifts: flags.level_shifts.into_iter().collect(),
            weight_factors: flags.weight_factors.into_iter().collect(),
        },
        sizes: flags.sizes,
        out: flags.out,
        tol: flags.tol,
        tolerances: Some(tolerances),
        method: flags.method,
        convention: flags.convention,
    };
    let cfg = file.merge(overrides);
    cfg.check_command(command)?;
    let tol = cfg.effective_tolerances()?;
    Ok((cfg, tol))
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(|e| Failure {
        code: EXIT_NUMERICAL,
        message: format!("cannot create output directory {}: {e}", dir.display()),
    })?;
    Ok(dir)
}

fn options(cfg: &RunConfig, tol: Tolerances) -> InvertOptions {
    InvertOptions {
        method: cfg.method.unwrap_or_default(),
        tolerances: tol,
        convention: cfg.convention.unwrap_or_default(),
    }
}

fn cmd_forward(cfg: RunConfig) -> Result<u8, Failure> {
    let path = cfg
        .operator
        .as_ref()
        .ok_or_else(|| input("forward needs --operator"))?;
    let op = load_operator(path)?;
    let es = eigensolve(&op)?;
    let orientation = cfg.orientation.unwrap_or(Orientation::Left);
    let data = match orientation {
        Orientation::Left => extract_spectral_data(&es, op.grid())?,
        Orientation::Right => extract_right_spectral_data(&es, op.grid())?,
    };
    let left = extract_spectral_data(&es, op.grid())?;
    let table = regular_solutions(&op, left.levels())?;
    let n = op.len();
    let dirichlet = table
        .values
        .iter()
        .map(|phi| {
            let scale = phi.iter().map(|x| x.abs()).fold(0.0, f64::max);
            phi[n + 1].abs() / scale
        })
        .fold(0.0, f64::max);
    let report = json!({
        "n": n,
        "parseval_defect": parseval_defect(&es),
        "weighted_orthogonality_defect": weighted_orthogonality_defect(&table, &left),
        "weight_sum_defect": weight_sum_defect(op.grid(), data.weights()),
        "dirichlet_residual": dirichlet,
    });
    let dir = out_dir(&cfg)?;
    save_spectral(&dir.join("spectral_data.json"), &data)?;
    write_json(&dir.join("parseval.json"), &report)?;
    Ok(0)
}

/// Reference operator, reference data and target data for `invert`.
fn invert_problem(cfg: &RunConfig) -> Result<InversionProblem, Failure> {
    let ref_path = cfg
        .reference
        .as_ref()
        .ok_or_else(|| input("invert needs --reference"))?;
    let reference = load_operator(ref_path)?;
    let target = match &cfg.target_data {
        Some(p) => Some(load_spectral(p)?),
        None => None,
    };
    let reference_data = match &cfg.reference_data {
        Some(p) => load_spectral(p)?,
        None => {
            let es = eigensolve(&reference)?;
            match target
                .as_ref()
                .map(|t| t.orientation())
                .unwrap_or(Orientation::Left)
            {
                Orientation::Left => extract_spectral_data(&es, reference.grid())?,
                Orientation::Right => extract_right_spectral_data(&es, reference.grid())?,
            }
        }
    };
    let target = match target {
        Some(t) => t,
        None if !cfg.perturbation.is_empty() => cfg.perturbation.apply(&reference_data)?,
        None => return Err(input("invert needs --target-data or a perturbation")),
    };
    Ok(InversionProblem::new(reference, reference_data, target)?)
}

#[derive(Serialize)]
struct InvertReport<'a> {
    status: &'a str,
    method: &'a str,
    methods: Vec<&'a str>,
    frame: Orientation,
    tolerances: Tolerances,
    tolerance_overrides: std::collections::BTreeMap<String, f64>,
    violations: Vec<String>,
    diagnostics: &'a jacobi_gl::Diagnostics,
    synthesis: Option<jacobi_gl::io::OperatorFile>,
    recursion: Option<jacobi_gl::io::OperatorFile>,
}

fn invert_report<'a>(
    r: &'a RecoveredSystem,
    tol: &Tolerances,
    violations: Vec<String>,
) -> InvertReport<'a> {
    let mut methods = Vec::new();
    if r.synthesis.is_some() {
        methods.push("synthesis");
    }
    if r.recursion.is_some() {
        methods.push("recursion");
    }
    InvertReport {
        status: if violations.is_empty() {
            "ok"
        } else {
            "threshold_violation"
        },
        method: r.method.as_str(),
        methods,
        frame: r.frame,
        tolerances: *tol,
        tolerance_overrides: tol.overrides(),
        violations,
        diagnostics: &r.diagnostics,
        synthesis: r
            .synthesis
            .as_ref()
            .map(jacobi_gl::io::OperatorFile::from_operator),
        recursion: r
            .recursion
            .as_ref()
            .map(jacobi_gl::io::OperatorFile::from_operator),
    }
}

/// Runs the inversion; a non-invertible system still leaves a diagnostics file behind.
fn run_inversion(
    problem: &InversionProblem,
    opts: &InvertOptions,
    dir: &Path,
    name: &str,
) -> Result<RecoveredSystem, Failure> {
    invert(problem, opts).map_err(|e| {
        let f = Failure::from(e);
        let _ = write_json(
            &dir.join(name),
            &json!({ "status": if f.code == EXIT_NONINVERTIBLE { "noninvertible" } else { "failed" }, "error": f.message }),
        );
        f
    })
}

fn cmd_invert(cfg: RunConfig, tol: Tolerances) -> Result<u8, Failure> {
    let problem = invert_problem(&cfg)?;
    let opts = options(&cfg, tol);
    let dir = out_dir(&cfg)?;
    let r = run_inversion(&problem, &opts, &dir, "diagnostics.json")?;
    let violations = r.diagnostics.violations(&tol);
    save_operator(&dir.join("recovered_operator.json"), &r.operator)?;
    write_kernel_csv(&dir.join("kernel.csv"), &r.kernel)?;
    write_json(
        &dir.join("diagnostics.json"),
        &invert_report(&r, &tol, violations.clone()),
    )?;
    report_violations(&violations)
}

fn report_violations(violations: &[String]) -> Result<u8, Failure> {
    for v in violations {
        eprintln!("threshold violation: {v}");
    }
    Ok(if violations.is_empty() {
        0
    } else {
        EXIT_THRESHOLD
    })
}

#[derive(Serialize)]
struct CoefficientErrors {
    v: Vec<f64>,
    u: Vec<f64>,
    max: f64,
}

fn coefficient_errors(a: &JacobiOperator, b: &JacobiOperator) -> CoefficientErrors {
    let v: Vec<f64> = a
        .v()
        .iter()
        .zip(b.v())
        .map(|(x, y)| (x - y).abs())
        .collect();
    let u: Vec<f64> = a
        .u()
        .iter()
        .zip(b.u())
        .map(|(x, y)| (x - y).abs())
        .collect();
    let max = v.iter().chain(&u).copied().fold(0.0, f64::max);
    CoefficientErrors { v, u, max }
}

fn cmd_roundtrip(cfg: RunConfig, tol: Tolerances) -> Result<u8, Failure> {
    let target = match &cfg.target {
        Some(p) => Some(load_operator(p)?),
        None => None,
    };
    let reference = match (&cfg.reference, &target) {
        (Some(p), _) => load_operator(p)?,
        (None, Some(t)) => JacobiOperator::free(t.len())?,
        (None, None) => return Err(input("roundtrip needs --target or --reference")),
    };
    if let Some(t) = &target {
        if t.len() != reference.len() {
            return Err(input(format!(
                "target has {} nodes but the reference has {}",
                t.len(),
                reference.len()
            )));
        }
    }
    let reference_data = forward_data(&reference)?;
    let target_data = match &target {
        Some(t) => {
            let d = forward_data(t)?;
            cfg.perturbation.apply(&d)?
        }
        None if !cfg.perturbation.is_empty() => cfg.perturbation.apply(&reference_data)?,
        None => reference_data.clone(),
    };
    let problem = InversionProblem::new(reference.clone(), reference_data, target_data)?;
    let opts = options(&cfg, tol);
    let dir = out_dir(&cfg)?;
    let r = run_inversion(&problem, &opts, &dir, "report.json")?;

    // With a known target compare against it; otherwise only the two routes can be compared.
    let truth = target.as_ref().filter(|_| cfg.perturbation.is_empty());
    let errors = |op: &Option<JacobiOperator>| match (op, truth) {
        (Some(op), Some(t)) => Some(coefficient_errors(op, t)),
        _ => None,
    };
    let synthesis = errors(&r.synthesis);
    let recursion = errors(&r.recursion);
    let between = match (&r.synthesis, &r.recursion) {
        (Some(a), Some(b)) => Some(coefficient_errors(a, b)),
        _ => None,
    };
    let max_error = [&synthesis, &recursion, &between]
        .into_iter()
        .flatten()
        .map(|e| e.max)
        .fold(0.0, f64::max);
    let mut violations = r.diagnostics.violations(&tol);
    if max_error > tol.roundtrip {
        violations.push(format!(
            "round-trip error {max_error:e} exceeds {:e}",
            tol.roundtrip
        ));
    }
    let report = json!({
        "status": if violations.is_empty() { "ok" } else { "threshold_violation" },
        "compared_against": if truth.is_some() { "target" } else { "methods" },
        "max_error": max_error,
        "tolerance": tol.roundtrip,
        "synthesis_errors": synthesis,
        "recursion_errors": recursion,
        "method_gap": between,
        "inversion": invert_report(&r, &tol, violations.clone()),
    });
    save_operator(&dir.join("recovered_operator.json"), &r.operator)?;
    write_json(&dir.join("report.json"), &report)?;
    report_violations(&violations)
}

fn cmd_sweep(cfg: RunConfig, tol: Tolerances) -> Result<u8, Failure> {
    let sizes = cfg
        .sizes
        .clone()
        .ok_or_else(|| input("sweep needs --sizes"))?;
    let mut study = RefinementStudy::new(sizes, cfg.perturbation.clone())?;
    study.convention = cfg.convention.unwrap_or_default();
    let opts = options(&cfg, tol);
    let results = run_refinement_study(&study, &opts)?;
    let dir = out_dir(&cfg)?;
    fs::write(dir.join("study.csv"), study_csv(&results)).map_err(Error::from)?;
    fs::write(dir.join("v_eff.csv"), v_eff_csv(&results)).map_err(Error::from)?;
    if study.sizes.len() < 2 {
        eprintln!("warning: a single size gives no Cauchy differences or order estimates");
    }
    for s in &results.sizes {
        if let Err(e) = &s.outcome {
            eprintln!("N = {}: {e}", s.n);
        }
    }
    let failed: Vec<String> = results
        .criteria(tol.noise_floor)
        .into_iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect();
    report_violations(&failed)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let (command, flags) = match cli.command {
        Cmd::Forward(f) => (Command::Forward, f),
        Cmd::Invert(f) => (Command::Invert, f),
        Cmd::Roundtrip(f) => (Command::Roundtrip, f),
        Cmd::Sweep(f) => (Command::Sweep, f),
    };
    let (cfg, tol) = settings(command, flags)?;
    match command {
        Command::Forward => cmd_forward(cfg),
        Command::Invert => cmd_invert(cfg, tol),
        Command::Roundtrip => cmd_roundtrip(cfg, tol),
        Command::Sweep => cmd_sweep(cfg, tol),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
