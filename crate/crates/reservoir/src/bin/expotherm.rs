//! Command-line driver: single simulations, convergence studies and self checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use expotherm_reservoir::output::{self, emit_outputs};
use expotherm_reservoir::scenario::{ConfigError, DriverScheme, ScenarioConfig};
use expotherm_reservoir::simulate::{prepare, run_simulation, SimError};
use expotherm_reservoir::study::convergence_study;
use expotherm_reservoir::{selftest, study};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "expotherm", version, about = "Geothermal reservoir simulator with exponential and Rosenbrock time stepping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write the final state and the per-step log.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Error and cost of several schemes over a list of time steps.
    Study {
        scenario: PathBuf,
        /// Comma-separated scheme labels, e.g. "Implicittheta=1,EREMKrylov,ROS2".
        #[arg(long, value_delimiter = ',', required = true)]
        schemes: Vec<String>,
        /// Comma-separated splitting steps in days.
        #[arg(long, value_delimiter = ',', required = true)]
        taus: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Quick oracle checks of the numerical kernels.
    Selftest,
    /// Print the default desk-scale scenario.
    Example,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<output::OutputError> for Failure {
    fn from(e: output::OutputError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn sim_failure(e: SimError, out: &std::path::Path, grid: Option<&expotherm_reservoir::grid::StructuredGrid>) -> Failure {
    match e {
        SimError::Config(c) => c.into(),
        SimError::Numerical { t, message, state } => {
            if let Some(g) = grid {
                let dump = out.join("failure_state.csv");
                if output::write_file(&dump, &output::state_csv(g, &state)).is_ok() {
                    eprintln!("last accepted state written to {}", dump.display());
                }
            }
            Failure::Numerical(format!("numerical failure at t = {t} s: {message}"))
        }
    }
}

fn simulate(path: PathBuf, out: PathBuf) -> Result<(), Failure> {
    let cfg = ScenarioConfig::from_file(&path)?;
    let grid = cfg.grid()?;
    let prep = prepare(&cfg).map_err(|e| sim_failure(e, &out, Some(&grid)))?;
    let run = run_simulation(&prep.reservoir, &prep.initial, &prep.options)
        .map_err(|e| sim_failure(e, &out, Some(&grid)))?;
    output::write_file(&out.join("initial_state.csv"), &output::state_csv(&grid, &prep.initial))?;
    output::write_file(&out.join("final_state.csv"), &output::state_csv(&grid, &run.state))?;
    output::write_file(&out.join("run_log.csv"), &output::run_log_csv(&run))?;
    output::write_file(&out.join("scenario.echo"), &cfg.to_toml_string())?;
    let w = run.total_work();
    println!(
        "{}: {} steps, {:.3} s, {} matvecs, {} linear solves, {} Newton iterations, {} clamp warnings",
        prep.options.scheme.label,
        run.log.len(),
        run.cpu_s,
        w.matvecs,
        w.linear_solves,
        w.newton_iterations,
        run.clamp_warnings
    );
    Ok(())
}

fn run_study(path: PathBuf, schemes: Vec<String>, taus_days: Vec<f64>, out: PathBuf) -> Result<(), Failure> {
    let cfg = ScenarioConfig::from_file(&path)?;
    let schemes = schemes
        .iter()
        .map(|s| DriverScheme::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    if taus_days.iter().any(|t| !(*t > 0.0)) {
        return Err(Failure::Config("time steps must be positive".into()));
    }
    let taus: Vec<f64> = taus_days.iter().map(|d| d * 86_400.0).collect();
    let prep = prepare(&cfg).map_err(|e| sim_failure(e, &out, None))?;
    let report = convergence_study(&prep, &schemes, &taus).map_err(|e| sim_failure(e, &out, None))?;
    emit_outputs(&report, &out, &cfg.to_toml_string())?;
    for s in &schemes {
        let (t, e): (Vec<f64>, Vec<f64>) = report
            .rows_for(&s.label)
            .filter_map(|r| r.err_t_rel.map(|e| (r.tau_s, e)))
            .unzip();
        if t.len() >= 2 {
            println!("{:<20} observed order {:.2}", s.label, study::observed_order(&t, &e));
        }
    }
    let failed = report.rows.iter().filter(|r| r.failure.is_some()).count();
    println!("{} rows written to {}", report.rows.len(), out.join("results.csv").display());
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} run(s) aborted, see failures.txt")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { scenario, out } => simulate(scenario, out),
        Command::Study {
            scenario,
            schemes,
            taus,
            out,
        } => run_study(scenario, schemes, taus, out),
        Command::Selftest => {
            let checks = selftest::run();
            for c in &checks {
                println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                Ok(())
            } else {
                Err(Failure::Numerical("self checks failed".into()))
            }
        }
        Command::Example => {
            print!("{}", ScenarioConfig::desk().to_toml_string());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
