//! `dpg`: convergence studies and unisolvency diagnostics.
//!
//! Exit codes: 0 success, 3 when a system was found singular, 4 for
//! configuration or I/O errors (including bad arguments).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use dpg_core::diagnostics::run_diagnostics;
use dpg_core::experiment::{emit_table, run_case_with, DEFAULT_DOF_BUDGET};
use dpg_core::{
    Case, CaseConfig, CaseSpec, DpgError, ExactSolution, LoadRule, OutputFormat, RowStatus, RunSpec,
};

const EXIT_SINGULAR: u8 = 3;
const EXIT_ERROR: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "dpg",
    version,
    about = "Primal DPG convergence studies on the unit square"
)]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank sweep of single-element flux moment matrices and the square
    /// moment systems of P_k.
    Diagnose {
        #[arg(long, default_value_t = 4)]
        kq_max: usize,
        #[arg(long, default_value_t = 6)]
        kv_max: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CaseArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    Custom,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Degree family: 1 = (k, k-1, k+1), 2 = (k-1, k-1, k), 3 = (k, k-1, k).
    #[arg(long, value_enum)]
    case: Option<CaseArg>,

    #[arg(long)]
    k: Option<usize>,

    /// Explicit degrees KU,KQ,KV for --case custom.
    #[arg(long, value_delimiter = ',')]
    degrees: Option<Vec<usize>>,

    /// Mesh subdivisions, each twice the previous.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,

    #[arg(long)]
    quad_degree: Option<usize>,

    /// Replace f by its elementwise Lagrange interpolant of this degree.
    #[arg(long)]
    load_degree: Option<usize>,

    /// Relative residual tolerance of the CG solve.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,

    /// Largest number of trial unknowns per mesh.
    #[arg(long, default_value_t = DEFAULT_DOF_BUDGET)]
    dof_budget: usize,

    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Suppress per-mesh progress on stderr.
    #[arg(long, short)]
    quiet: bool,
}

fn build_spec(args: &RunArgs) -> Result<RunSpec, DpgError> {
    let case = args
        .case
        .ok_or_else(|| DpgError::InvalidParameter("--case is required".into()))?;
    let case_spec = match case {
        CaseArg::Custom => {
            let d = args
                .degrees
                .as_deref()
                .filter(|d| d.len() == 3)
                .ok_or_else(|| {
                    DpgError::InvalidParameter("--case custom needs --degrees KU,KQ,KV".into())
                })?;
            CaseSpec::Custom(CaseConfig::new(d[0], d[1], d[2])?)
        }
        other => {
            let k = args.k.ok_or_else(|| {
                DpgError::InvalidParameter("--k is required for cases 1-3".into())
            })?;
            let case = match other {
                CaseArg::One => Case::One,
                CaseArg::Two => Case::Two,
                _ => Case::Three,
            };
            if case.may_be_singular(k) {
                eprintln!(
                    "warning: case {} with even k = {k} may produce a singular system",
                    case.number()
                );
            }
            CaseSpec::Standard { case, k }
        }
    };
    let mut spec = RunSpec::new(case_spec);
    if let Some(n_list) = &args.n_list {
        spec.n_list = n_list.clone();
    }
    spec.quad_degree = args.quad_degree;
    if let Some(d) = args.load_degree {
        spec.load = LoadRule::Interpolated(d);
    }
    spec.tol = args.tol;
    spec.dof_budget = args.dof_budget;
    spec.validate()?;
    Ok(spec)
}

fn run(args: &RunArgs) -> Result<bool, DpgError> {
    let spec = build_spec(args)?;
    let quiet = args.quiet;
    let start = Instant::now();
    let table = run_case_with(&spec, &ExactSolution::sine(), |row| {
        if quiet {
            return;
        }
        match row.status {
            RowStatus::Solved {
                h1_error,
                l2_error,
                iterations,
                ..
            } => eprintln!(
                "n = {:>3}: H1 {h1_error:.3e}  L2 {l2_error:.3e}  ({iterations} CG iterations, {:.1?})",
                row.n,
                start.elapsed()
            ),
            RowStatus::Singular => eprintln!("n = {:>3}: SINGULAR", row.n),
        }
    })?;
    let format = match args.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Markdown => OutputFormat::Markdown,
    };
    let text = emit_table(&table, format, args.out.as_deref())?;
    if args.out.is_none() {
        print!("{text}");
    }
    Ok(!table.any_singular())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Some(Command::Diagnose { kq_max, kv_max }) => {
            run_diagnostics(*kq_max, *kv_max).map(|report| {
                print!("{}", report.to_text());
                true
            })
        }
        None => run(&cli.run),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_SINGULAR),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_singular() {
                EXIT_SINGULAR
            } else {
                EXIT_ERROR
            })
        }
    }
}
