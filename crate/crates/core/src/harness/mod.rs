//! Experiment plumbing: config files, sweeps, CSV and SVG output, and the
//! invariant self-check suite.

mod check;
mod config;
mod csvio;
mod plot;
mod sweep;

pub use check::{check_names, run_checks, CheckResult, DEFAULT_AUDIT_SEED};
pub use config::{
    apply_overrides, config_keys, merge, parse_assignment, parse_run_file, parse_value, resolve_seed, RunFile,
    FILE_KEYS, SEED_ENV,
};
pub use csvio::{
    format_f64, read_aggregates, read_trace, trace_to_string, write_aggregates, write_trace, AggregateRow,
    AGGREGATE_METRICS, TRACE_HEADER,
};
pub use plot::{chart_from_csv, render_svg, Chart, Series};
pub use sweep::{
    default_seeds, mean_stderr, run_sweep, trace_file_name, AggregateRecord, Axis, GridPoint, RunSummary,
    SweepOptions, SweepSpec, CRITIC_STEPS, HORIZONS, META_STEPS, PRESETS,
};
