//! Command-line front end.
//!
//! Exit codes: 0 when the result verifies as optimal, 1 for usage and input
//! errors (with a JSON error document on stderr), 2 for numerical failures or
//! failed verification (results are still written).

use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::closedform2d::{closed_form_pe, closed_form_povm, closed_form_xtilde, ClosedFormPovm, RotationExampleParams};
use crate::ensemble::{ppm_ensemble, random_ensemble, EnsembleDoc, GuEnsemble, DEFAULT_DIMENSION_CAP};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::ComplexMatrix;
use crate::operators::{eigenstructure, EigenStructure, HermitianOperator, Tolerances};
use crate::povm::{
    expand_povm, recover_reference_povm_with, reference_success_probability, solve_and_recover, srm_reference,
    verify_optimality, OptimalityReport, Povm, Recovery, RecoveryOptions, POLISH_ROUNDS,
};
use crate::sdp::{
    count_variables, group_average, lift, solve_dp1, solve_dp3, BlockSpec, ProblemKind, SolveReport, SolverOptions,
};
use faer::c64;

#[derive(Parser, Debug)]
#[command(name = "gudisc", version, about = "Optimal measurements for geometrically uniform quantum ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the optimal measurement and verify it.
    Solve(SolveArgs),
    /// Check a candidate measurement against the optimality conditions.
    Verify(VerifyArgs),
    /// Compare the rotation family with its closed-form solution.
    Example2d(Example2dArgs),
    /// Time the full and the reduced dual over a sweep of ensemble sizes.
    Benchmark(BenchmarkArgs),
    /// Print variable and constraint counts of every formulation.
    Count(CountArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Generator {
    Rotation,
    Ppm,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Dp1,
    Dp3,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct EnsembleArgs {
    /// Ensemble JSON document.
    #[arg(long, conflicts_with = "generator")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    generator: Option<Generator>,
    /// Number of states.
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    beta: f64,
    /// Local dimension of each PPM slot.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Angle of the PPM idle vector (cos θ, sin θ) against the pulse (1, 0).
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    theta: f64,
    /// Hilbert-space dimension of random ensembles.
    #[arg(long = "N", default_value_t = 4)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "dim-cap", default_value_t = DEFAULT_DIMENSION_CAP)]
    dim_cap: usize,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Duality-gap target of the barrier method.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Tolerance for the optimality verdict.
    #[arg(long = "verify-tol", default_value_t = 1e-6)]
    verify_tol: f64,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    out: OutputArgs,
    #[arg(long, value_enum, default_value_t = Method::Dp3)]
    method: Method,
    /// Omit Π₀ and the POVM matrices from the report.
    #[arg(long)]
    summary: bool,
    /// Largest N for which the full dual is attempted.
    #[arg(long = "dp1-cutoff", default_value_t = 512)]
    dp1_cutoff: usize,
    /// Write the ensemble as an explicit JSON document.
    #[arg(long = "save-ensemble")]
    save_ensemble: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    out: OutputArgs,
    /// Candidate measurement: one matrix (Π₀) or an array of M matrices.
    #[arg(long)]
    povm: PathBuf,
}

#[derive(Args, Debug)]
struct Example2dArgs {
    #[arg(long = "M")]
    m: usize,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    beta: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Method::Both)]
    method: Method,
    #[arg(long = "m-min", default_value_t = 2)]
    m_min: usize,
    #[arg(long = "m-max", default_value_t = 8)]
    m_max: usize,
    #[arg(long = "dp1-cutoff", default_value_t = 512)]
    dp1_cutoff: usize,
    /// Worker threads; 1 keeps timings free of contention.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CountArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[command(flatten)]
    out: OutputArgs,
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let is_info = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            if is_info {
                let _ = write!(stdout, "{text}");
                return 0;
            }
            let doc = json!({ "error": "Usage", "message": text.trim_end() });
            let _ = writeln!(stderr, "{doc}");
            return 1;
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Example2d(a) => cmd_example2d(a, stdout),
        Command::Benchmark(a) => cmd_benchmark(a, stdout),
        Command::Count(a) => cmd_count(a, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let doc = json!({ "error": e.kind(), "message": e.to_string() });
            let _ = writeln!(stderr, "{doc}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn emit(text: &str, path: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn check_tol(tol: f64, name: &str) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive, got {tol}")))
    }
}

fn required_m(a: &EnsembleArgs) -> Result<usize> {
    a.m.ok_or_else(|| Error::InvalidInput("--M is required with --generator".into()))
}

fn build_ensemble(a: &EnsembleArgs) -> Result<GuEnsemble> {
    build_with_size(a, None)
}

/// Builds the ensemble from a file or a generator; `m` overrides --M.
fn build_with_size(a: &EnsembleArgs, m: Option<usize>) -> Result<GuEnsemble> {
    if let Some(path) = &a.input {
        let text = std::fs::read_to_string(path)?;
        let doc: EnsembleDoc = serde_json::from_str(&text)?;
        return doc.build(a.dim_cap);
    }
    let generator = a.generator.ok_or_else(|| Error::InvalidInput("either --input or --generator is required".into()))?;
    let m = match m {
        Some(m) => m,
        None => required_m(a)?,
    };
    match generator {
        Generator::Rotation => crate::ensemble::rotation_ensemble(m, a.alpha, a.beta),
        Generator::Ppm => {
            let pulse = crate::ensemble::basis_vector(a.n, 0);
            let mut idle = vec![c64::new(0.0, 0.0); a.n];
            if a.n >= 2 {
                idle[0] = c64::new(a.theta.cos(), 0.0);
                idle[1] = c64::new(a.theta.sin(), 0.0);
            }
            ppm_ensemble(a.n, m, &pulse, &idle, a.dim_cap)
        }
        Generator::Random => {
            if a.dim > a.dim_cap {
                return Err(Error::DimensionCapExceeded { dim: a.dim, cap: a.dim_cap });
            }
            if a.dim == 0 {
                return Err(Error::InvalidInput("--N must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            random_ensemble(a.dim, m, &mut rng)
        }
    }
}

#[derive(Serialize)]
struct EnsembleSummary {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    block_sizes: Vec<usize>,
    warnings: Vec<String>,
}

fn summary(e: &GuEnsemble, eig: &EigenStructure) -> EnsembleSummary {
    EnsembleSummary {
        n: e.dim(),
        m: e.size(),
        block_sizes: eig.multiplicities().to_vec(),
        warnings: e.warnings().to_vec(),
    }
}

#[derive(Serialize)]
struct RecoveryInfo {
    null_dim: usize,
    completeness_residual: f64,
    refined: bool,
}

/// Optimal measurement from one solver path.
struct Solved {
    pi0: HermitianOperator,
    povm: Povm,
    report: SolveReport,
    recovery: RecoveryInfo,
    residuals: OptimalityReport,
}

fn finish(e: &GuEnsemble, x: HermitianOperator, report: SolveReport, rec: Recovery, verify_tol: f64) -> Result<Solved> {
    let povm = expand_povm(&rec.pi0, e.symmetry(), e.size())?;
    let residuals = verify_optimality(e, &povm, &x, verify_tol)?;
    Ok(Solved {
        pi0: rec.pi0,
        povm,
        report,
        recovery: RecoveryInfo {
            null_dim: rec.null_dim,
            completeness_residual: rec.completeness_residual,
            refined: rec.refined,
        },
        residuals,
    })
}

fn run_dp3(e: &GuEnsemble, eig: &EigenStructure, opts: &SolverOptions, verify_tol: f64) -> Result<Solved> {
    let (x, report, rec) = solve_and_recover(e, eig, opts, &RecoveryOptions::default())?;
    finish(e, x, report, rec, verify_tol)
}

fn run_dp1(e: &GuEnsemble, eig: &EigenStructure, opts: &SolverOptions, verify_tol: f64) -> Result<Solved> {
    let mut opts = opts.clone();
    let mut round = 0;
    loop {
        let (x, report) = solve_dp1(&e.states(), &e.priors(), &opts)?;
        // symmetrize so that the recovery works in the commutant of S
        let x = group_average(&x, e.symmetry())?;
        match recover_reference_povm_with(e, eig, &x, &RecoveryOptions::default()) {
            Ok(rec) => return finish(e, x, report, rec, verify_tol),
            Err(Error::CompletenessInfeasible { .. }) if round < POLISH_ROUNDS => {
                round += 1;
                opts.tol /= 10.0;
            }
            Err(err) => return Err(err),
        }
    }
}

#[derive(Serialize)]
struct SolveDocument {
    ensemble: EnsembleSummary,
    method: &'static str,
    #[serde(rename = "P_c")]
    p_c: f64,
    #[serde(rename = "P_e")]
    p_e: f64,
    #[serde(rename = "Pi0", skip_serializing_if = "Option::is_none")]
    pi0: Option<ComplexMatrix>,
    #[serde(rename = "POVM", skip_serializing_if = "Option::is_none")]
    povm: Option<Povm>,
    residuals: OptimalityReport,
    recovery: RecoveryInfo,
    report: SolveReport,
    #[serde(rename = "srm_P_e")]
    srm_p_e: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dp1: Option<serde_json::Value>,
    verdict: String,
}

fn cmd_solve(a: SolveArgs, stdout: &mut dyn Write) -> Result<i32> {
    check_tol(a.solver.tol, "--tol")?;
    check_tol(a.solver.verify_tol, "--verify-tol")?;
    let e = build_ensemble(&a.ensemble)?;
    if let Some(path) = &a.save_ensemble {
        std::fs::write(path, to_json(&EnsembleDoc::explicit(&e))?)?;
    }
    let eig = eigenstructure(e.symmetry(), Tolerances::default().grouping)?;
    let opts = SolverOptions::with_tol(a.solver.tol);
    let dp1_allowed = e.dim() <= a.dp1_cutoff;

    let (primary, method, dp1_extra) = match a.method {
        Method::Dp3 => (run_dp3(&e, &eig, &opts, a.solver.verify_tol)?, "dp3", None),
        Method::Dp1 => {
            if !dp1_allowed {
                return Err(Error::InvalidInput(format!(
                    "N = {} exceeds the DP1 cutoff {}; raise --dp1-cutoff",
                    e.dim(),
                    a.dp1_cutoff
                )));
            }
            (run_dp1(&e, &eig, &opts, a.solver.verify_tol)?, "dp1", None)
        }
        Method::Both => {
            let main = run_dp3(&e, &eig, &opts, a.solver.verify_tol)?;
            let extra = if dp1_allowed {
                let (x1, r1) = solve_dp1(&e.states(), &e.priors(), &opts)?;
                let diff = (x1.trace() - main.report.optimal_value).abs();
                json!({ "P_e": 1.0 - x1.trace(), "report": r1, "difference": diff })
            } else {
                json!({ "status": "skipped", "cutoff": a.dp1_cutoff })
            };
            (main, "dp3", Some(extra))
        }
    };

    let srm_pi0 = srm_reference(&e)?;
    let srm_pe = 1.0 - reference_success_probability(&e, &srm_pi0);
    let p_c = primary.report.optimal_value;
    let optimal = primary.residuals.optimal;
    let doc = SolveDocument {
        ensemble: summary(&e, &eig),
        method,
        p_c,
        p_e: 1.0 - p_c,
        pi0: if a.summary { None } else { Some(primary.pi0.to_complex_matrix()) },
        povm: if a.summary { None } else { Some(primary.povm) },
        residuals: primary.residuals,
        recovery: primary.recovery,
        report: primary.report,
        srm_p_e: srm_pe,
        dp1: dp1_extra,
        verdict: if optimal { "optimal" } else { "not optimal" }.into(),
    };
    let text = match a.out.format {
        Format::Json => to_json(&doc)?,
        Format::Csv => {
            let r = &doc.report;
            format!(
                "{}\n{},{},{},{},{},{},{},{},{}\n",
                CSV_HEADER,
                doc.ensemble.n,
                doc.ensemble.m,
                method,
                r.d,
                r.ce,
                r.ci,
                doc.p_e,
                r.duality_gap,
                r.wall_time
            )
        }
    };
    emit(&text, a.out.output.as_ref(), stdout)?;
    Ok(if optimal { 0 } else { 2 })
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum MeasurementDoc {
    Reference(ComplexMatrix),
    Full(Vec<ComplexMatrix>),
}

fn cmd_verify(a: VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    check_tol(a.solver.tol, "--tol")?;
    check_tol(a.solver.verify_tol, "--verify-tol")?;
    let e = build_ensemble(&a.ensemble)?;
    let tol = Tolerances::default();
    let text = std::fs::read_to_string(&a.povm)?;
    let doc: MeasurementDoc = serde_json::from_str(&text)?;
    let povm = match doc {
        MeasurementDoc::Reference(m) => {
            let pi0 = HermitianOperator::new(m.into_mat(), &tol)?;
            expand_povm(&pi0, e.symmetry(), e.size())?
        }
        MeasurementDoc::Full(ms) => {
            let ops = ms
                .into_iter()
                .map(|m| HermitianOperator::new(m.into_mat(), &tol))
                .collect::<Result<Vec<_>>>()?;
            if ops.len() != e.size() {
                return Err(Error::DimensionMismatch { expected: e.size(), found: ops.len() });
            }
            Povm::new(ops, &tol, f64::INFINITY)?
        }
    };
    if povm.dim() != e.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), found: povm.dim() });
    }
    let eig = eigenstructure(e.symmetry(), tol.grouping)?;
    let (xt, report) = solve_dp3(&e, &eig, &SolverOptions::with_tol(a.solver.tol))?;
    let x = lift(&xt, &eig)?;
    let residuals = verify_optimality(&e, &povm, &x, a.solver.verify_tol)?;
    let optimal = residuals.optimal;
    let text = match a.out.format {
        Format::Json => to_json(&json!({ "residuals": residuals, "report": report }))?,
        Format::Csv => format!(
            "slackness_residual,min_dual_slack,completeness_residual,min_povm_eigenvalue,gap,verdict\n{},{},{},{},{},{}\n",
            residuals.slackness_residual,
            residuals.min_dual_slack,
            residuals.completeness_residual,
            residuals.min_povm_eigenvalue,
            residuals.gap,
            residuals.verdict
        ),
    };
    emit(&text, a.out.output.as_ref(), stdout)?;
    Ok(if optimal { 0 } else { 2 })
}

fn cmd_example2d(a: Example2dArgs, stdout: &mut dyn Write) -> Result<i32> {
    check_tol(a.solver.tol, "--tol")?;
    check_tol(a.solver.verify_tol, "--verify-tol")?;
    let p = RotationExampleParams::new(a.m, a.alpha, a.beta)?;
    let e = p.ensemble()?;
    let eig = eigenstructure(e.symmetry(), Tolerances::default().grouping)?;
    let closed_pe = closed_form_pe(&p);
    let xtilde = closed_form_xtilde(&p);
    let numeric = run_dp3(&e, &eig, &SolverOptions::with_tol(a.solver.tol), a.solver.verify_tol)?;
    let numeric_pe = 1.0 - numeric.report.optimal_value;

    let (closed_pi0, closed_verdict, pi0_difference) = match closed_form_povm(&p) {
        ClosedFormPovm::Reference(pi) => {
            let x = lift(&xtilde, &eig)?;
            let povm = expand_povm(&pi, e.symmetry(), e.size())?;
            let report = verify_optimality(&e, &povm, &x, 1e-10)?;
            let diff = linalg::difference_norm(pi.as_ref(), numeric.pi0.as_ref());
            (Some(pi.to_complex_matrix()), Some(report), Some(diff))
        }
        ClosedFormPovm::NoClosedForm => (None, None, None),
    };
    let ok = (numeric_pe - closed_pe).abs() <= 1e-6 && numeric.residuals.optimal;
    let doc = json!({
        "M": a.m,
        "alpha": a.alpha,
        "beta": a.beta,
        "closed_form": {
            "P_e": closed_pe,
            "xtilde": xtilde.blocks().iter().map(|b| b[(0, 0)].re).collect::<Vec<_>>(),
            "Pi0": closed_pi0,
            "verification": closed_verdict,
        },
        "numerical": {
            "P_e": numeric_pe,
            "Pi0": numeric.pi0.to_complex_matrix(),
            "residuals": numeric.residuals,
            "report": numeric.report,
        },
        "P_e_difference": (numeric_pe - closed_pe).abs(),
        "Pi0_difference": pi0_difference,
        "agrees": ok,
    });
    let text = match a.out.format {
        Format::Json => to_json(&doc)?,
        Format::Csv => format!(
            "M,alpha,beta,closed_pe,numerical_pe,difference\n{},{},{},{},{},{}\n",
            a.m,
            a.alpha,
            a.beta,
            closed_pe,
            numeric_pe,
            (numeric_pe - closed_pe).abs()
        ),
    };
    emit(&text, a.out.output.as_ref(), stdout)?;
    Ok(if ok { 0 } else { 2 })
}

pub const CSV_HEADER: &str = "N,M,method,d,Ce,Ci,pe,gap,wall_time_s";

#[derive(Clone, Debug, Serialize)]
struct BenchRow {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    method: &'static str,
    d: usize,
    #[serde(rename = "Ce")]
    ce: usize,
    #[serde(rename = "Ci")]
    ci: usize,
    pe: Option<f64>,
    gap: Option<f64>,
    wall_time_s: Option<f64>,
    status: String,
}

impl BenchRow {
    fn csv(&self) -> String {
        let field = |v: Option<f64>| match v {
            Some(x) => x.to_string(),
            None => self.status.clone(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.m,
            self.method,
            self.d,
            self.ce,
            self.ci,
            field(self.pe),
            field(self.gap),
            field(self.wall_time_s)
        )
    }
}

fn bench_instance(a: &BenchmarkArgs, m: usize) -> Vec<BenchRow> {
    let failed = |method: &'static str, n: usize, e: &Error| BenchRow {
        n,
        m,
        method,
        d: 0,
        ce: 0,
        ci: 0,
        pe: None,
        gap: None,
        wall_time_s: None,
        status: format!("failed:{}", e.kind()),
    };
    let e = match build_with_size(&a.ensemble, Some(m)) {
        Ok(e) => e,
        Err(err) => return vec![failed("dp3", 0, &err)],
    };
    let n = e.dim();
    let opts = SolverOptions::with_tol(a.tol);
    let mut rows = Vec::new();
    if matches!(a.method, Method::Dp3 | Method::Both) {
        let started = Instant::now();
        let res = eigenstructure(e.symmetry(), Tolerances::default().grouping).and_then(|eig| solve_dp3(&e, &eig, &opts));
        rows.push(match res {
            Ok((_, r)) => BenchRow {
                n,
                m,
                method: "dp3",
                d: r.d,
                ce: r.ce,
                ci: r.ci,
                pe: Some(r.p_error),
                gap: Some(r.duality_gap),
                wall_time_s: Some(started.elapsed().as_secs_f64()),
                status: "ok".into(),
            },
            Err(err) => failed("dp3", n, &err),
        });
    }
    if matches!(a.method, Method::Dp1 | Method::Both) {
        let count = count_variables(ProblemKind::DP1, n, m, None).expect("no block spec needed");
        if n > a.dp1_cutoff {
            rows.push(BenchRow {
                n,
                m,
                method: "dp1",
                d: count.d,
                ce: count.ce,
                ci: count.ci,
                pe: None,
                gap: None,
                wall_time_s: None,
                status: "skipped".into(),
            });
        } else {
            let started = Instant::now();
            rows.push(match solve_dp1(&e.states(), &e.priors(), &opts) {
                Ok((_, r)) => BenchRow {
                    n,
                    m,
                    method: "dp1",
                    d: r.d,
                    ce: r.ce,
                    ci: r.ci,
                    pe: Some(r.p_error),
                    gap: Some(r.duality_gap),
                    wall_time_s: Some(started.elapsed().as_secs_f64()),
                    status: "ok".into(),
                },
                Err(err) => failed("dp1", n, &err),
            });
        }
    }
    rows
}

fn cmd_benchmark(a: BenchmarkArgs, stdout: &mut dyn Write) -> Result<i32> {
    check_tol(a.tol, "--tol")?;
    if a.ensemble.input.is_some() {
        return Err(Error::InvalidInput("benchmark sweeps require --generator".into()));
    }
    if a.ensemble.generator.is_none() {
        return Err(Error::InvalidInput("--generator is required".into()));
    }
    if a.m_min < 1 || a.m_min > a.m_max {
        return Err(Error::InvalidInput(format!("invalid sweep {}..={}", a.m_min, a.m_max)));
    }
    if a.parallel == 0 {
        return Err(Error::InvalidInput("--parallel must be at least 1".into()));
    }
    let sizes: Vec<usize> = (a.m_min..=a.m_max).collect();
    let results: Vec<Mutex<Vec<BenchRow>>> = sizes.iter().map(|_| Mutex::new(Vec::new())).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..a.parallel.min(sizes.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= sizes.len() {
                    break;
                }
                let rows = bench_instance(&a, sizes[k]);
                *results[k].lock().expect("no panics while holding the lock") = rows;
            });
        }
    });
    let rows: Vec<BenchRow> = results.into_iter().flat_map(|r| r.into_inner().expect("workers joined")).collect();
    let text = match a.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for r in &rows {
                s.push_str(&r.csv());
                s.push('\n');
            }
            s
        }
    };
    emit(&text, a.output.as_ref(), stdout)?;
    let any_failed = rows.iter().any(|r| r.status.starts_with("failed"));
    Ok(if any_failed { 2 } else { 0 })
}

fn cmd_count(a: CountArgs, stdout: &mut dyn Write) -> Result<i32> {
    let e = build_ensemble(&a.ensemble)?;
    let eig = eigenstructure(e.symmetry(), Tolerances::default().grouping)?;
    let spec = BlockSpec::new(eig.multiplicities().to_vec())?;
    let rows = ProblemKind::ALL
        .iter()
        .map(|&k| count_variables(k, e.dim(), e.size(), Some(&spec)).map(|c| (k, c)))
        .collect::<Result<Vec<_>>>()?;
    let text = match a.out.format {
        Format::Json => {
            let table: Vec<_> = rows
                .iter()
                .map(|(k, c)| json!({ "kind": k.name(), "d": c.d, "Ce": c.ce, "Ci": c.ci }))
                .collect();
            to_json(&json!({ "N": e.dim(), "M": e.size(), "block_sizes": spec.sizes(), "rows": table }))?
        }
        Format::Csv => {
            let mut s = String::from("kind,d,Ce,Ci\n");
            for (k, c) in &rows {
                s.push_str(&format!("{},{},{},{}\n", k.name(), c.d, c.ce, c.ci));
            }
            s
        }
    };
    emit(&text, a.out.output.as_ref(), stdout)?;
    Ok(0)
}
