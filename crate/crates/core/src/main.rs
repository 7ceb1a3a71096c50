use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gridxpand::case::{load_case, scale_to_peak};
use gridxpand::cli::{
    load_inputs, parse_peaks, render_fits, render_plan, render_rating, run_plan, run_sweep, write_json, write_lp_file, CliError,
    SweepSpec,
};
use gridxpand::milp::Mode;
use gridxpand::solve::{Backend, SolveConfig};

#[derive(Parser)]
#[command(name = "gridxpand", version, about = "Generation and transmission expansion planning with dynamic line ratings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a case file and list every violated rule.
    Validate {
        #[arg(long)]
        case: PathBuf,
    },
    /// Solve one planning problem.
    Plan {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value = "dc_det")]
        mode: Mode,
        /// Override the annual peak demand, MW.
        #[arg(long)]
        peak: Option<f64>,
        #[command(flatten)]
        solver: SolverFlags,
        /// Result file (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the model in CPLEX LP format.
        #[arg(long)]
        write_lp: Option<PathBuf>,
    },
    /// Solve a range of peak demands in one or more modes.
    Sweep {
        #[command(flatten)]
        inputs: Inputs,
        /// Comma-separated list or `start:end:step`, MW.
        #[arg(long)]
        peaks: String,
        #[arg(long, value_delimiter = ',', default_value = "dc_det")]
        mode: Vec<Mode>,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the heat balance of a line at its ampacity.
    Rate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        line: String,
        #[arg(long)]
        period: Option<String>,
    },
    /// Print the fitted segments and their error certificates.
    Fit {
        #[arg(long, default_value_t = 0.75)]
        emissivity: f64,
        #[arg(long, default_value_t = 2.5e-9)]
        kr: f64,
        /// K
        #[arg(long, default_value_t = 298.0)]
        ambient: f64,
    },
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    case: PathBuf,
    /// Robust parameters and weather overrides (JSON).
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long, value_enum, default_value = "external")]
    backend: Backend,
    /// s
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
}

impl SolverFlags {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            backend: self.backend,
            time_limit: self.time_limit,
            mip_gap: self.gap,
            ..SolveConfig::default()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { case } => {
            let c = load_case(&case)?;
            println!(
                "{}: valid ({} buses, {} lines, {} generators, {} periods)",
                case.display(),
                c.buses.len(),
                c.lines.len(),
                c.generators.len(),
                c.periods.len()
            );
        }
        Command::Plan {
            inputs,
            mode,
            peak,
            solver,
            out,
            write_lp,
        } => {
            let (mut case, params) = load_inputs(&inputs.case, inputs.scenario.as_deref())?;
            if let Some(p) = peak {
                case = scale_to_peak(&case, p)?;
            }
            if let Some(path) = write_lp {
                write_lp_file(&case, &params, mode, &path)?;
            }
            let run = run_plan(&case, &params, mode, &solver.config())?;
            print!("{}", render_plan(&run));
            if let Some(path) = out {
                write_json(&run, &path)?;
            }
        }
        Command::Sweep {
            inputs,
            peaks,
            mode,
            solver,
            out,
        } => {
            let (case, params) = load_inputs(&inputs.case, inputs.scenario.as_deref())?;
            let spec = SweepSpec {
                peaks: parse_peaks(&peaks).map_err(CliError::Sweep)?,
                modes: mode,
                out,
            };
            let report = run_sweep(&case, &params, &spec, &solver.config())?;
            print!("{}", report.table);
            if let Some(path) = &spec.out {
                write_json(&report, path)?;
            }
        }
        Command::Rate { inputs, line, period } => {
            let (case, _) = load_inputs(&inputs.case, inputs.scenario.as_deref())?;
            print!("{}", render_rating(&case, &line, period.as_deref())?);
        }
        Command::Fit { emissivity, kr, ambient } => {
            print!("{}", render_fits(emissivity, kr, ambient)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
