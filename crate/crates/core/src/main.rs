use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use deformq::cli::{emit_report, load_problem, run_command, CliError, Command, Overrides};
use deformq::Exec;

/// Exact star-product and quantization-obstruction workbench.
#[derive(Parser, Debug)]
#[command(name = "deformq", version)]
struct Args {
    /// Problem file (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// check-poisson, assoc-check, commutator-table, obstruction, eliminate or extend-star.
    #[arg(long)]
    command: String,
    /// Order N (defaults to the problem's params.order, then the star order).
    #[arg(long)]
    order: Option<usize>,
    /// Coefficient-degree bound of the solver ansatz.
    #[arg(long)]
    degree_bound: Option<u32>,
    /// Operator-order bound of the solver ansatz.
    #[arg(long)]
    op_order_bound: Option<u32>,
    /// Seed for randomized cross-checks (recorded in the report).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Disable data-parallel evaluation.
    #[arg(long)]
    sequential: bool,
}

fn run(args: &Args) -> Result<(), CliError> {
    let command: Command = args.command.parse()?;
    let problem = load_problem(&args.problem)?;
    let overrides = Overrides {
        order: args.order,
        degree_bound: args.degree_bound,
        op_order_bound: args.op_order_bound,
        seed: args.seed,
        exec: if args.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        },
    };
    let report = run_command(command, &problem, &overrides)?;
    emit_report(&report, args.out.as_deref())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
