//! A small sweep written as CSV and drawn as SVG, all in a temp directory.
//!
//! ```bash
//! cargo run --release --example sweep_and_plot -- [OUT_DIR]
//! ```

use std::fs;
use std::path::PathBuf;

use accelpo::agents::RunConfig;
use accelpo::agents::SearchKind;
use accelpo::harness::{
    chart_from_csv, render_svg, run_sweep, trace_file_name, write_aggregates, Axis, SweepOptions, SweepSpec,
};
use accelpo::mdp::default_maze;
use accelpo::Result;

fn main() -> Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("accelpo_sweep"));
    fs::create_dir_all(&out).map_err(|e| accelpo::Error::io(&out, e))?;

    let base = RunConfig {
        episodes: 60,
        ..RunConfig::forward_search(SearchKind::Eval, 0.1, 0)
    };
    let spec = SweepSpec::new(
        "demo",
        base,
        vec![Axis::new("critic_step", [0.1, 0.5]), Axis::new("horizon", [0, 1, 2, 4])],
        vec![1, 2, 3],
    )?;
    let opts = SweepOptions {
        jobs: 0,
        trace_dir: Some(out.join("traces")),
    };
    let records = run_sweep(&default_maze(), &spec, &opts)?;
    let rows: Vec<_> = records.iter().map(|r| r.to_row()).collect();

    let mut csv = Vec::new();
    write_aggregates(&rows, &mut csv)?;
    let csv = String::from_utf8(csv).expect("csv is utf-8");
    print!("{csv}");
    let agg_path = out.join("aggregate.csv");
    fs::write(&agg_path, &csv).map_err(|e| accelpo::Error::io(&agg_path, e))?;

    let chart = chart_from_csv(&[(agg_path.display().to_string(), csv)])?;
    fs::write(out.join("aggregate.svg"), render_svg(&chart)).map_err(|e| accelpo::Error::io(&out, e))?;

    let trace_path = out.join("traces").join(trace_file_name(0, 1));
    let text = fs::read_to_string(&trace_path).map_err(|e| accelpo::Error::io(&trace_path, e))?;
    let chart = chart_from_csv(&[(trace_path.display().to_string(), text)])?;
    fs::write(out.join("trace.svg"), render_svg(&chart)).map_err(|e| accelpo::Error::io(&out, e))?;
    println!("wrote {}", out.display());
    Ok(())
}
