use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nxfem::study::convergence::write_summary;
use nxfem::study::{run_convergence_study, ConstrainedMethod, ExampleId, ExampleOverrides, RunConfig};
use nxfem::{ControlBounds, LinearSolverConfig, LinearSolverMethod};

#[derive(Parser, Debug)]
#[command(name = "nxfem", version, about = "Nitsche-XFEM solver for elliptic interface optimal control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a convergence study for one benchmark example.
    Solve(SolveArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Solver {
    Direct,
    Cg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    FixedPoint,
    Newton,
}

#[derive(clap::Args, Debug)]
struct SolveArgs {
    /// Benchmark example: 1, 2, 3 (or "smooth", the interface-free check).
    #[arg(long, value_parser = parse_example)]
    example: ExampleId,
    /// Single mesh size (cells per side).
    #[arg(long, conflicts_with = "n_list", required_unless_present = "n_list")]
    n: Option<usize>,
    /// Comma-separated increasing mesh sizes, e.g. 16,32,64.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Penalty coefficient: λ = lambda_coef / h.
    #[arg(long)]
    lambda_coef: Option<f64>,
    /// Control regularization parameter a.
    #[arg(long)]
    a: Option<f64>,
    /// Control bounds "lo,hi" or "none".
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    bounds: Option<ControlBounds>,
    #[arg(long, value_enum, default_value_t = Solver::Direct)]
    solver: Solver,
    /// Iteration for box constraints.
    #[arg(long, value_enum, default_value_t = Method::FixedPoint)]
    method: Method,
    /// Stopping tolerance of the constrained iteration and of CG.
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap of the constrained iteration and of CG.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write integration_mesh.csv for the finest mesh.
    #[arg(long)]
    dump_geometry: bool,
    /// Progress logging and per-level iteration logs.
    #[arg(long)]
    verbose: bool,
}

fn parse_example(s: &str) -> Result<ExampleId, String> {
    s.parse().map_err(|e: nxfem::Error| e.to_string())
}

fn parse_bounds(s: &str) -> Result<ControlBounds, String> {
    if s.trim().eq_ignore_ascii_case("none") {
        return Ok(ControlBounds::unbounded());
    }
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected \"lo,hi\" or \"none\", got \"{s}\""))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("invalid bound \"{v}\": {e}"));
    ControlBounds::new(parse(lo)?, parse(hi)?).map_err(|e| e.to_string())
}

fn run_config(args: &SolveArgs) -> RunConfig {
    let n_list = match (&args.n_list, args.n) {
        (Some(list), _) => list.clone(),
        (None, Some(n)) => vec![n],
        (None, None) => unreachable!("clap requires --n or --n-list"),
    };
    let mut cfg = RunConfig::new(args.example, n_list);
    cfg.overrides = ExampleOverrides {
        lambda_coef: args.lambda_coef,
        regularization: args.a,
        bounds: args.bounds,
    };
    cfg.linear = match args.solver {
        Solver::Direct => LinearSolverConfig::direct(),
        Solver::Cg => LinearSolverConfig::cg(),
    };
    cfg.method = match args.method {
        Method::FixedPoint => ConstrainedMethod::FixedPoint,
        Method::Newton => ConstrainedMethod::SemiSmoothNewton,
    };
    if let Some(tol) = args.tol {
        cfg.iteration.tol = tol;
        if cfg.linear.method == LinearSolverMethod::ConjugateGradient {
            cfg.linear.tol = tol;
        }
    }
    if let Some(max_iter) = args.max_iter {
        cfg.iteration.max_iter = max_iter;
        if cfg.linear.method == LinearSolverMethod::ConjugateGradient {
            cfg.linear.max_iter = max_iter;
        }
    }
    cfg.out_dir = Some(args.out.clone());
    cfg.dump_geometry = args.dump_geometry;
    cfg.verbose = args.verbose;
    cfg
}

fn solve(args: &SolveArgs) -> nxfem::Result<bool> {
    let cfg = run_config(args);
    let table = run_convergence_study(&cfg)?;
    write_summary(&args.out.join("summary.csv"), &table)?;
    print!("{}", table.render_text());
    let all_converged = table.rows.iter().all(|r| r.converged);
    if !all_converged {
        log::warn!("some levels did not reach the iteration tolerance; see summary.csv");
    }
    Ok(all_converged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Solve(args) = cli.command;
    let level = if args.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match solve(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
