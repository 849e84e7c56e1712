//! Experiment execution: single runs, parallel sweeps, results files and
//! rate / bound / quantile analysis.

mod algo;
pub mod analysis;
mod output;
mod run;
mod sweep;

pub use algo::{AlgoSpec, PriorKind};
pub use analysis::{
    build_reports, compare_bound, complexity, final_regrets, fit_power_law, fit_rate, gamma_grid,
    optimized_bound, quantile, quantile_report, BoundMargin, FinalRegrets, FitEntry, KPolicy,
    QuantileRow, QuantileSeries, RateFit, Report, Statistic, MIN_FIT_HORIZON, QUANTILE_DELTAS,
};
pub use output::{read_csv, read_csv_file, records, write_csv, write_csv_file, TraceRecord, CSV_HEADER};
pub use run::{run_once, run_with_oracle, Certificate, RunOptions, RunOutput};
pub use sweep::{sweep, worker_count, CellFailure, SweepConfig, SweepResult, THREADS_ENV};
