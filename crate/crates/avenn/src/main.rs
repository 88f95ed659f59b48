//! Command-line front end for the `avenn` library.
//!
//! Exit codes: `0` on success, `2` when a trajectory diverges or a
//! certificate is (or stays) infeasible, `1` for usage and input
//! errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use avenn::ave::{self, AveProblem};
use avenn::dde::DdeError;
use avenn::harness::{
    self, CertificateSource, ExperimentSpec, HarnessError, ModelKind, DEFAULT_BOUND_SLACK,
    DEFAULT_RATE, DEFAULT_STEP,
};
use avenn::linalg::Vector;
use avenn::lmi::{self, Certificate, FeasibilitySearchOptions, SearchOutcome};

#[derive(Parser)]
#[command(
    name = "avenn",
    version,
    about = "Solve absolute value equations by delayed neural-network models, \
             with certificates of exponential convergence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a model and check the run against its certificate.
    Run(RunArgs),
    /// Assemble, verify, or search convergence certificates.
    #[command(subcommand)]
    Lmi(LmiCommand),
    /// Enumerate the solution set of a problem by sign patterns.
    Enumerate(EnumerateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Built-in example name; see --list.
    #[arg(long, conflicts_with = "problem")]
    example: Option<String>,
    /// List the built-in examples and exit.
    #[arg(long)]
    list: bool,
    /// Problem file: matrix text (`rows cols` header, one row per
    /// line) followed by one line with the right-hand side.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Model to integrate: "mixed" or "discrete".
    #[arg(long)]
    model: Option<String>,
    /// Discrete delay.
    #[arg(long)]
    tau1: Option<f64>,
    /// Distributed-delay horizon (mixed model).
    #[arg(long)]
    tau2: Option<f64>,
    /// Decay rate targeted by a certificate search.
    #[arg(long)]
    k: Option<f64>,
    /// Integration step (adjusted to divide the delays when needed).
    #[arg(long)]
    step: Option<f64>,
    /// Integration horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Initial function: cos:2,2,-5 | const:1,0,-1 |
    /// linear:v1,..@s1,.. | table:FILE.
    #[arg(long)]
    history: Option<String>,
    /// Certificate source: "paper" (the certificate bundled with the
    /// built-in example), "search", or a certificate file path.
    #[arg(long)]
    cert: Option<String>,
    /// Seed for the certificate search.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference solution, comma-separated (overrides the built-in one).
    #[arg(long)]
    solution: Option<String>,
    /// Directory for run artifacts (trajectory.csv, summary.txt,
    /// certificate.txt, plot.gp).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LmiCommand {
    /// Verify a certificate file against a problem.
    Verify(VerifyArgs),
    /// Search for a feasible certificate by projected subgradient
    /// descent.
    Search(SearchArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Certificate file.
    #[arg(long)]
    cert: PathBuf,
    /// Problem file.
    #[arg(long)]
    problem: PathBuf,
    /// Required negative-definiteness margin.
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
}

#[derive(Args)]
struct SearchArgs {
    /// Problem file.
    #[arg(long)]
    problem: PathBuf,
    /// Model the certificate is for: "mixed" or "discrete".
    #[arg(long)]
    model: String,
    /// Discrete delay.
    #[arg(long)]
    tau1: f64,
    /// Distributed-delay horizon (mixed model).
    #[arg(long)]
    tau2: Option<f64>,
    /// Decay rate to certify.
    #[arg(long, default_value_t = DEFAULT_RATE)]
    k: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration budget.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Write the certificate here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Built-in example name.
    #[arg(long, conflicts_with = "problem")]
    example: Option<String>,
    /// Problem file.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Acceptance tolerance for candidates.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not usage errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Lmi(LmiCommand::Verify(args)) => cmd_verify(args),
        Command::Lmi(LmiCommand::Search(args)) => cmd_search(args),
        Command::Enumerate(args) => cmd_enumerate(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(err: &HarnessError) -> u8 {
    match err {
        HarnessError::Dde(DdeError::Diverged { .. }) => 2,
        HarnessError::SearchFailed { .. } => 2,
        _ => 1,
    }
}

fn parse_solution(text: &str) -> Result<Vector, HarnessError> {
    let mut vals = Vec::new();
    for part in text.split(',') {
        vals.push(part.trim().parse::<f64>().map_err(|_| {
            HarnessError::Parse(format!("bad number {part:?} in solution {text:?}"))
        })?);
    }
    Vector::new(vals).map_err(|e| HarnessError::Parse(e.to_string()))
}

fn read_problem(path: &PathBuf) -> Result<AveProblem, HarnessError> {
    let text = fs::read_to_string(path)?;
    Ok(AveProblem::from_text(&text)?)
}

fn read_certificate(path: &PathBuf) -> Result<Certificate, HarnessError> {
    let text = fs::read_to_string(path)?;
    Ok(Certificate::from_text(&text)?)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, HarnessError> {
    if args.list {
        for name in harness::builtin_names() {
            let ex = harness::load_builtin(name)?;
            println!("{name:14} {}", ex.summary);
        }
        return Ok(ExitCode::SUCCESS);
    }

    let mut spec = build_spec(&args)?;
    if let Some(text) = &args.cert {
        spec.certificate = parse_cert_source(text, &args, &spec)?;
    }
    let outcome = harness::run_experiment(&spec)?;
    if let Some(dir) = &args.out {
        harness::write_artifacts(&spec, &outcome, dir)?;
        eprintln!("artifacts written to {}", dir.display());
    }
    print!("{}", outcome.report.to_text());
    eprintln!(
        "integration took {:.3} s over {} nodes",
        outcome.integration_seconds,
        outcome.trajectory.num_nodes()
    );
    if !outcome.report.certificate_feasible {
        eprintln!("warning: the certificate is not feasible for this problem");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn build_spec(args: &RunArgs) -> Result<ExperimentSpec, HarnessError> {
    let mut spec = if let Some(name) = &args.example {
        harness::load_builtin(name)?.spec()
    } else {
        let path = args.problem.as_ref().ok_or_else(|| {
            HarnessError::BadSpec("pass --example NAME or --problem FILE".to_string())
        })?;
        let problem = read_problem(path)?;
        let model: ModelKind = args
            .model
            .as_deref()
            .ok_or_else(|| {
                HarnessError::BadSpec("custom problems need --model mixed|discrete".to_string())
            })?
            .parse()?;
        let history_text = args.history.as_deref().ok_or_else(|| {
            HarnessError::BadSpec(
                "custom problems need --history, e.g. --history cos:2,2,-5".to_string(),
            )
        })?;
        let history = harness::parse_history(history_text, problem.dim())?;
        let tau1 = args
            .tau1
            .ok_or_else(|| HarnessError::BadSpec("custom problems need --tau1".to_string()))?;
        let tau2 = match model {
            ModelKind::Mixed => Some(args.tau2.ok_or_else(|| {
                HarnessError::BadSpec("the mixed model needs --tau2".to_string())
            })?),
            ModelKind::Discrete => None,
        };
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".to_string());
        ExperimentSpec {
            name,
            problem,
            model,
            tau1,
            tau2,
            k: DEFAULT_RATE,
            step: DEFAULT_STEP,
            horizon: 30.0,
            quad_panels: avenn::dde::DEFAULT_QUAD_PANELS,
            bound_slack: DEFAULT_BOUND_SLACK,
            history,
            known_solution: None,
            certificate: CertificateSource::Search { seed: args.seed },
        }
    };

    if let Some(tau1) = args.tau1 {
        spec.tau1 = tau1;
    }
    if let Some(tau2) = args.tau2 {
        spec.tau2 = Some(tau2);
    }
    if let Some(k) = args.k {
        spec.k = k;
    }
    if let Some(step) = args.step {
        spec.step = step;
    }
    if let Some(horizon) = args.horizon {
        spec.horizon = horizon;
    }
    if let Some(history) = &args.history {
        spec.history = harness::parse_history(history, spec.problem.dim())?;
    }
    if let Some(solution) = &args.solution {
        spec.known_solution = Some(parse_solution(solution)?);
    }
    Ok(spec)
}

fn parse_cert_source(
    text: &str,
    args: &RunArgs,
    spec: &ExperimentSpec,
) -> Result<CertificateSource, HarnessError> {
    match text {
        "paper" => {
            let name = args.example.as_ref().ok_or_else(|| {
                HarnessError::BadSpec(
                    "--cert paper refers to the certificate bundled with a built-in \
                     example; custom problems need --cert search or a file"
                        .to_string(),
                )
            })?;
            let _ = spec;
            Ok(CertificateSource::Provided(
                harness::load_builtin(name)?.certificate,
            ))
        }
        "search" => Ok(CertificateSource::Search { seed: args.seed }),
        path => Ok(CertificateSource::File(PathBuf::from(path))),
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, HarnessError> {
    let cert = read_certificate(&args.cert)?;
    let problem = read_problem(&args.problem)?;
    let report = cert.verify(problem.matrix(), args.tol)?;
    println!(
        "kind = {}",
        if cert.is_mixed() { "mixed" } else { "discrete" }
    );
    println!("dim = {}", cert.dim());
    println!("feasible = {}", report.feasible);
    println!("lambda_max = {:.16e}", report.lambda_max);
    println!("p_margin = {:.16e}", report.p_margin);
    println!("q_margin = {:.16e}", report.q_margin);
    if let Some(h) = report.h_margin {
        println!("h_margin = {h:.16e}");
    }
    println!("d_margin = {:.16e}", report.d_margin);
    match cert.gamma() {
        Ok(g) => println!("gamma = {g:.16e}"),
        Err(_) => println!("gamma = undefined"),
    }
    if report.feasible {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn cmd_search(args: SearchArgs) -> Result<ExitCode, HarnessError> {
    let problem = read_problem(&args.problem)?;
    let model: ModelKind = args.model.parse()?;
    let mut opts = FeasibilitySearchOptions {
        seed: args.seed,
        ..FeasibilitySearchOptions::default()
    };
    if let Some(iters) = args.max_iters {
        opts.max_iters = iters;
    }
    let a = problem.matrix();
    let (cert, iterations, lambda_max) = match model {
        ModelKind::Mixed => {
            let tau2 = args
                .tau2
                .ok_or_else(|| HarnessError::BadSpec("the mixed model needs --tau2".to_string()))?;
            match lmi::search_mixed_certificate(a, args.tau1, tau2, args.k, &opts)? {
                SearchOutcome::Found {
                    certificate,
                    iterations,
                    lambda_max,
                } => (Certificate::Mixed(certificate), iterations, lambda_max),
                SearchOutcome::Exhausted {
                    best_lambda_max,
                    iterations,
                } => {
                    return Err(HarnessError::SearchFailed {
                        best_lambda_max,
                        iterations,
                    })
                }
            }
        }
        ModelKind::Discrete => {
            match lmi::search_discrete_certificate(a, args.tau1, args.k, &opts)? {
                SearchOutcome::Found {
                    certificate,
                    iterations,
                    lambda_max,
                } => (Certificate::Discrete(certificate), iterations, lambda_max),
                SearchOutcome::Exhausted {
                    best_lambda_max,
                    iterations,
                } => {
                    return Err(HarnessError::SearchFailed {
                        best_lambda_max,
                        iterations,
                    })
                }
            }
        }
    };
    eprintln!(
        "feasible certificate after {iterations} iterations (largest eigenvalue {lambda_max:.6e})"
    );
    match &args.out {
        Some(path) => fs::write(path, cert.to_text())?,
        None => print!("{}", cert.to_text()),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_enumerate(args: EnumerateArgs) -> Result<ExitCode, HarnessError> {
    let problem = if let Some(name) = &args.example {
        harness::load_builtin(name)?.problem
    } else {
        let path = args.problem.as_ref().ok_or_else(|| {
            HarnessError::BadSpec("pass --example NAME or --problem FILE".to_string())
        })?;
        read_problem(path)?
    };
    let report = ave::enumerate_solutions(&problem, args.tol)?;
    println!("isolated_solutions = {}", report.isolated_solutions().len());
    for x in report.isolated_solutions() {
        println!("x = {}", x.to_text());
    }
    println!("singular_patterns = {}", report.singular_patterns().len());
    for pattern in report.singular_patterns() {
        let rendered: Vec<&str> = pattern
            .iter()
            .map(|s| if *s > 0 { "+" } else { "-" })
            .collect();
        println!("pattern = {}", rendered.join(" "));
    }
    Ok(ExitCode::SUCCESS)
}
