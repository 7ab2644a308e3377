//! Experiment configuration, Monte Carlo execution, distribution summaries
//! and the closed-form sweeps behind the command-line tool.

mod config;
mod montecarlo;
mod recommend;
mod sweep;
mod tracking;

pub use config::{CleanConfig, ExperimentConfig, RunConfig, ScheduleConfig, TheoryConfig};
pub use montecarlo::{
    corrupt_trial, identify_all, quantile_sorted, result_rows, run_montecarlo, run_montecarlo_to, run_trial,
    run_trials, simulate_trial, summarize, summarize_trials, trial_metrics, trial_seed, write_summary, MethodOutcome,
    MonteCarloReport, Summary, SummaryRow, TrialResult, CORRUPT_STREAM, PARAMETERS, SCHEDULE_STREAM, SIM_STREAM,
    SUMMARY_HEADER,
};
pub use recommend::{estimate_delay, recommend, Recommendation, MAX_DELAY_SEARCH};
pub use sweep::{theory_sweep, Sweep};
pub use tracking::{run_tracking, write_tracking, TrackPoint, TRACK_HEADER};
