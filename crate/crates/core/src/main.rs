use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use thevenin_ambient::harness::{
    corrupt_trial, recommend, run_montecarlo_to, run_tracking, simulate_trial, theory_sweep, trial_seed,
    write_tracking, ExperimentConfig, Sweep,
};
use thevenin_ambient::io::{read_series_file, write_results, write_series_file, write_table, ResultRow};
use thevenin_ambient::{Error, Method, RegressorConfig, RegressorKind};

#[derive(Parser)]
#[command(version, about = "Thévenin equivalent identification from ambient port measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a clean simulated series.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Trial whose seed is used.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Apply the configured measurement corruption to a series.
    Corrupt {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Estimate the Thévenin parameters of a series and print one result row.
    Identify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        method: Method,
        #[arg(long, default_value = "ols")]
        regressor: RegressorKind,
    },
    /// Run the configured Monte Carlo experiment.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `run.output_dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Write a closed-form curve.
    Theory {
        #[arg(long)]
        sweep: Sweep,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recommend a window length and method for a measured series.
    Recommend {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Follow a drifting network with rolling-window estimates.
    Track {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &Error, estimating: bool) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) => 1,
        Error::EstimationInfeasible(_)
        | Error::InfeasibleSolution(_)
        | Error::NoConvergence { .. }
        | Error::RankDeficient { .. }
        | Error::DegenerateCollinearity
        | Error::InconsistentQuadratic { .. }
        | Error::InfeasibleOperatingPoint { .. }
            if estimating =>
        {
            3
        }
        _ => 2,
    }
}

fn config(path: &std::path::Path) -> Result<ExperimentConfig, Error> {
    ExperimentConfig::from_file(path)
}

fn run(command: Command) -> Result<(), (Error, bool)> {
    let plain = |e: Error| (e, false);
    match command {
        Command::Simulate { config: c, out, trial } => {
            let cfg = config(&c).map_err(plain)?;
            let series = simulate_trial(&cfg, trial).map_err(plain)?;
            write_series_file(&series, &out).map_err(plain)
        }
        Command::Corrupt { config: c, input, out, trial } => {
            let cfg = config(&c).map_err(plain)?;
            let series = read_series_file(&input).map_err(plain)?;
            let corrupted = corrupt_trial(&cfg, trial, &series).map_err(plain)?;
            write_series_file(&corrupted, &out).map_err(plain)
        }
        Command::Identify { config: c, input, method, regressor } => {
            let cfg = config(&c).map_err(plain)?;
            let series = read_series_file(&input).map_err(plain)?;
            let regressor = match regressor {
                RegressorKind::Ridge(_) => RegressorKind::Ridge(cfg.run.ridge_lambda),
                k => k,
            };
            let result = thevenin_ambient::estimate::identify_with_cleaning(
                &series,
                method,
                &cfg.window,
                &RegressorConfig::new(regressor),
                cfg.clean.mad_factor,
            )
            .map_err(|e| (e, true))?;
            let row = ResultRow::from_result(&result, trial_seed(cfg.run.base_seed, 0));
            write_results(&[row], std::io::stdout().lock(), true).map_err(plain)
        }
        Command::Montecarlo { config: c, out_dir } => {
            let cfg = config(&c).map_err(plain)?;
            let dir = out_dir.unwrap_or_else(|| cfg.run.output_dir.clone());
            let report = run_montecarlo_to(&cfg, &dir).map_err(plain)?;
            if !report.failures.is_empty() {
                eprintln!("{} failed estimates:", report.failures.len());
                for (trial, label, err) in &report.failures {
                    eprintln!("  trial {trial} {label}: {err}");
                }
            }
            Ok(())
        }
        Command::Theory { sweep, config: c, out } => {
            let cfg = config(&c).map_err(plain)?;
            let (header, rows) = theory_sweep(&cfg, sweep).map_err(plain)?;
            let file = std::fs::File::create(&out).map_err(|e| plain(e.into()))?;
            write_table(&header, &rows, file).map_err(plain)
        }
        Command::Recommend { input } => {
            let series = read_series_file(&input).map_err(plain)?;
            let rec = recommend(&series).map_err(plain)?;
            println!("tau_c,w,w_min,w_max,snr_db,delay_steps,r_pq,method");
            println!(
                "{},{},{},{},{},{},{},{}",
                rec.tau_c, rec.w, rec.w_min, rec.w_max, rec.snr_db, rec.delay_steps, rec.r_pq, rec.method
            );
            Ok(())
        }
        Command::Track { config: c, out } => {
            let cfg = config(&c).map_err(plain)?;
            let points = run_tracking(&cfg).map_err(plain)?;
            let file = std::fs::File::create(&out).map_err(|e| plain(e.into()))?;
            write_tracking(&points, file).map_err(plain)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((err, estimating)) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err, estimating))
        }
    }
}
