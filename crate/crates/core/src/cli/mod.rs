//! Command-line front end. Every subcommand emits a [`RunReport`] as JSON on
//! stdout (or `--out`) and a short summary on stderr.
//!
//! Exit codes: 0 success, 2 input error, 3 hypothesis or feasibility failure.

mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

pub use report::{sha256_hex, to_json_string, RunReport};

use crate::constraints::{schur_witness, stack, theorem2_verify_with_tol, witness_extremes};
use crate::error::Error;
use crate::john::{canonical_john, john_sparsify, Body, JohnDecomposition};
use crate::sparsifier::{theorem1_sparsify, SparsifyOptions};
use crate::spectral_core::text::parse_matrix;
use crate::spectral_core::{approx_membership_with_tol, DiagonalReweighting, Matrix, Mode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ks-sparsify", version, about = "Certified column sparsification, constrained approximation and approximate John decompositions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reweight a subset of the columns of A so that ADA* approximates AA*.
    Sparsify(SparsifyArgs),
    /// Sparsify A while approximately preserving A v_i for constraint vectors v_i.
    Constrain(ConstrainArgs),
    /// Approximate a John decomposition with few equally weighted points.
    John(JohnArgs),
    /// Check whether A lies in Approx_ε D for a given D.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Strict,
    BestEffort,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Strict => Mode::Strict,
            ModeArg::BestEffort => Mode::BestEffort,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodyArg {
    Cube,
    Simplex,
    CrossPolytope,
}

impl From<BodyArg> for Body {
    fn from(b: BodyArg) -> Self {
        match b {
            BodyArg::Cube => Body::Cube,
            BodyArg::Simplex => Body::Simplex,
            BodyArg::CrossPolytope => Body::CrossPolytope,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "best-effort")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::halving::DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, default_value_t = crate::halving::DEFAULT_EXHAUSTIVE_MAX)]
    pub exhaustive_max: usize,
    /// Best-effort cap on the number of equal-norm pieces.
    #[arg(long, default_value_t = crate::halving::DEFAULT_EXHAUSTIVE_MAX)]
    pub m_cap: usize,
    #[arg(long, default_value_t = crate::spectral_core::DEFAULT_TOL)]
    pub tol: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    fn options(&self) -> SparsifyOptions {
        SparsifyOptions {
            mode: self.mode.into(),
            budget: self.budget,
            seed: self.seed,
            exhaustive_max: self.exhaustive_max,
            m_cap: self.m_cap,
            tol: self.tol,
            ..SparsifyOptions::default()
        }
    }

    fn strict(&self) -> bool {
        self.mode == ModeArg::Strict
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SparsifyArgs {
    /// CSV matrix A (n×m).
    pub matrix: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Write the reweighting D as JSON.
    #[arg(long)]
    pub d_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstrainArgs {
    /// CSV matrix A (n×m).
    pub matrix: PathBuf,
    /// CSV constraint matrix V (m×k), one constraint per column.
    pub constraints: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Verify this reweighting instead of computing one.
    #[arg(long)]
    pub reuse_d: Option<PathBuf>,
    #[arg(long)]
    pub d_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JohnArgs {
    /// Decomposition JSON {"dim", "points", "weights"}.
    #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
    pub decomposition: Option<PathBuf>,
    #[arg(long, value_enum, requires = "dim")]
    pub builtin: Option<BodyArg>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub d_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckArgs {
    /// CSV matrix A (n×m).
    pub matrix: PathBuf,
    /// Reweighting JSON {"weights": [...]}.
    pub d: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible(_)
            | Error::HypothesisViolated(_)
            | Error::CertificateNotMet(_)
            | Error::BelowIterationThreshold { .. } => EXIT_HYPOTHESIS,
            _ => EXIT_INPUT,
        };
        Self { code, message: e.to_string() }
    }
}

fn input_error(message: String) -> CliError {
    CliError { code: EXIT_INPUT, message }
}

/// Outcome of a subcommand: the report, the exit code and a summary for humans.
pub struct Outcome {
    pub report: RunReport,
    pub code: i32,
    pub summary: Vec<String>,
}

struct Stopwatch(Instant);

impl Stopwatch {
    fn start() -> Self {
        Self(Instant::now())
    }

    fn lap(&mut self, report: &mut RunReport, stage: &str) {
        let now = Instant::now();
        report.timings.insert(stage.to_string(), (now - self.0).as_secs_f64() * 1e3);
        self.0 = now;
    }
}

fn read_input(report: &mut RunReport, name: &str, path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
    report.add_input(name, &bytes);
    String::from_utf8(bytes).map_err(|_| input_error(format!("{} is not UTF-8", path.display())))
}

fn read_matrix(report: &mut RunReport, name: &str, path: &Path) -> Result<Matrix, CliError> {
    let text = read_input(report, name, path)?;
    parse_matrix(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn read_reweighting(report: &mut RunReport, name: &str, path: &Path) -> Result<DiagonalReweighting, CliError> {
    let text = read_input(report, name, path)?;
    serde_json::from_str(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn write_reweighting(path: &Option<PathBuf>, d: &DiagonalReweighting) -> Result<(), CliError> {
    if let Some(path) = path {
        fs::write(path, to_json_string(d) + "\n")
            .map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn params<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

fn check_epsilon(epsilon: f64) -> Result<(), CliError> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(input_error(format!("--epsilon must be positive, got {epsilon}")))
    }
}

pub fn cmd_sparsify(args: &SparsifyArgs) -> Result<Outcome, CliError> {
    check_epsilon(args.common.epsilon)?;
    let mut report = RunReport::new("sparsify", params(args));
    let mut clock = Stopwatch::start();
    let a = read_matrix(&mut report, "matrix", &args.matrix)?;
    clock.lap(&mut report, "parse");
    let r = theorem1_sparsify(&a, args.common.epsilon, &args.common.options())?;
    clock.lap(&mut report, "sparsify");
    write_reweighting(&args.d_out, &r.d)?;
    report.result = value(&r);
    let met = r.certificate.meets_epsilon;
    let code = if args.common.strict() && !met { EXIT_HYPOTHESIS } else { EXIT_OK };
    let summary = vec![
        format!("|σ| = {} distinct columns, multiset size {}", r.sigma.len(), r.sigma_size),
        format!(
            "alpha = {:.6}, beta = {:.6}, gap = {:.3e}, meets ε = {}",
            r.certificate.alpha_achieved, r.certificate.beta_achieved, r.certificate.gap, met
        ),
        format!("M = {}, k = {}, theory constants respected = {}", r.m, r.k_used, r.theory_constants_respected),
    ];
    Ok(Outcome { report, code, summary })
}

pub fn cmd_constrain(args: &ConstrainArgs) -> Result<Outcome, CliError> {
    check_epsilon(args.common.epsilon)?;
    let eps = args.common.epsilon;
    let mut report = RunReport::new("constrain", params(args));
    let mut clock = Stopwatch::start();
    let a = read_matrix(&mut report, "matrix", &args.matrix)?;
    let v = read_matrix(&mut report, "constraints", &args.constraints)?;
    let reused = match &args.reuse_d {
        Some(path) => Some(read_reweighting(&mut report, "d", path)?),
        None => None,
    };
    clock.lap(&mut report, "parse");
    let problem = stack(&a, &v)?;

    let (d, sparsify) = match reused {
        Some(d) => (d, Value::Null),
        None => {
            let opts = SparsifyOptions { require_sandwich: true, ..args.common.options() };
            let r = theorem1_sparsify(problem.b(), eps, &opts)?;
            clock.lap(&mut report, "sparsify");
            (r.d.clone(), value(&r))
        }
    };
    write_reweighting(&args.d_out, &d)?;
    let verification = match theorem2_verify_with_tol(&problem, &d, eps, args.common.tol) {
        Ok(v) => v,
        Err(Error::HypothesisViolated(msg)) if args.reuse_d.is_none() && !args.common.strict() => {
            report.result = json!({
                "hypothesis_met": false,
                "hypothesis": msg,
                "sparsify": sparsify,
                "d": value(&d),
            });
            return Ok(Outcome { report, code: EXIT_OK, summary: vec![format!("hypothesis not met: {msg}")] });
        }
        Err(e) => return Err(e.into()),
    };
    clock.lap(&mut report, "verify");
    let witness = match schur_witness(&problem, &d, eps) {
        Ok(k) => {
            let (lambda_min, norm) = witness_extremes(&k);
            json!({ "lambda_min": lambda_min, "norm": norm, "psd": lambda_min >= -1e-8 * norm.max(1.0) })
        }
        Err(Error::HypothesisViolated(msg)) => json!({ "unavailable": msg }),
        Err(e) => return Err(e.into()),
    };
    clock.lap(&mut report, "witness");

    let ok = verification.all_within && verification.a_cert.meets_epsilon && verification.v_cert.meets_epsilon;
    let summary = vec![
        format!("residuals {:?}", verification.residuals),
        format!("bounds    {:?}", verification.bounds),
        format!("all within = {}, witness = {}", verification.all_within, witness),
    ];
    report.result = json!({
        "hypothesis_met": true,
        "sparsify": sparsify,
        "d": value(&d),
        "verification": value(&verification),
        "witness": witness,
    });
    let code = if args.common.strict() && !ok { EXIT_HYPOTHESIS } else { EXIT_OK };
    Ok(Outcome { report, code, summary })
}

pub fn cmd_john(args: &JohnArgs) -> Result<Outcome, CliError> {
    check_epsilon(args.common.epsilon)?;
    let mut report = RunReport::new("john", params(args));
    let mut clock = Stopwatch::start();
    let j: JohnDecomposition = match (&args.decomposition, args.builtin) {
        (Some(path), None) => {
            let text = read_input(&mut report, "decomposition", path)?;
            JohnDecomposition::from_json(&text, crate::john::DEFAULT_JOHN_TOL)?
        }
        (None, Some(body)) => {
            let dim = args.dim.ok_or_else(|| input_error("--builtin needs --dim".into()))?;
            let j = canonical_john(body.into(), dim)?;
            report.add_input("builtin", to_json_string(&j).as_bytes());
            j
        }
        _ => return Err(input_error("give either a decomposition file or --builtin".into())),
    };
    clock.lap(&mut report, "load");
    let r = john_sparsify(&j, args.common.epsilon, &args.common.options())?;
    clock.lap(&mut report, "sparsify");
    write_reweighting(&args.d_out, &r.d)?;
    report.result = value(&r);
    let summary = vec![
        format!("|σ| = {} of {} points, multiplicities {:?}", r.sigma_size, j.len(), r.sigma),
        format!("‖u‖ = {:.3e} vs bound {:.3e}", r.u_norm, r.u_bound),
        format!("sandwich [{:.6}, {:.6}], meets ε = {}", r.alpha_achieved, r.beta_achieved, r.sandwich_meets),
    ];
    Ok(Outcome { report, code: EXIT_OK, summary })
}

pub fn cmd_check(args: &CheckArgs) -> Result<Outcome, CliError> {
    check_epsilon(args.common.epsilon)?;
    let mut report = RunReport::new("check", params(args));
    let mut clock = Stopwatch::start();
    let a = read_matrix(&mut report, "matrix", &args.matrix)?;
    let d = read_reweighting(&mut report, "d", &args.d)?;
    clock.lap(&mut report, "parse");
    let cert = approx_membership_with_tol(&a, &d, args.common.epsilon, args.common.tol)?
        .with_mode(args.common.mode.into(), true);
    clock.lap(&mut report, "check");
    report.result = value(&cert);
    let summary = vec![format!(
        "alpha = {}, beta = {}, meets ε = {}",
        cert.alpha_achieved, cert.beta_achieved, cert.meets_epsilon
    )];
    let code = if args.common.strict() && !cert.meets_epsilon { EXIT_HYPOTHESIS } else { EXIT_OK };
    Ok(Outcome { report, code, summary })
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Sparsify(a) => cmd_sparsify(a),
        Command::Constrain(a) => cmd_constrain(a),
        Command::John(a) => cmd_john(a),
        Command::Check(a) => cmd_check(a),
    }
}

fn out_path(cli: &Cli) -> Option<&PathBuf> {
    match &cli.command {
        Command::Sparsify(a) => a.common.out.as_ref(),
        Command::Constrain(a) => a.common.out.as_ref(),
        Command::John(a) => a.common.out.as_ref(),
        Command::Check(a) => a.common.out.as_ref(),
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let text = outcome.report.to_json() + "\n";
            let written = match out_path(&cli) {
                Some(path) => fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(msg) = written {
                let _ = writeln!(stderr, "error: {msg}");
                return EXIT_INPUT;
            }
            for line in &outcome.summary {
                let _ = writeln!(stderr, "{line}");
            }
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}
