use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use accelpo::agents::run;
use accelpo::error::{Error, Result};
use accelpo::harness::{
    apply_overrides, chart_from_csv, parse_assignment, parse_run_file, render_svg, resolve_seed, run_checks,
    run_sweep, write_aggregates, write_trace, RunFile, SweepOptions, SweepSpec, DEFAULT_AUDIT_SEED, SEED_ENV,
};
use accelpo::mdp::{default_maze, path_length, value_iteration, MazeSpec, DEFAULT_DISCOUNT, DEFAULT_MAP};
use accelpo::TabularMdp;

#[derive(Parser)]
#[command(name = "accelpo", version, about = "Accelerated policy optimization experiments on gridworld mazes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a maze exactly and print J*, the optimal path length and policy.
    Solve {
        /// ASCII map; the bundled 48-state maze when omitted.
        map: Option<PathBuf>,
    },
    /// Run one agent and write its regret trace as CSV.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV (stdout when omitted and the config names none).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        map: Option<PathBuf>,
        /// Override a config key, e.g. `--set horizon=4`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run a grid of configs over seeds and write one aggregate row per config.
    Sweep {
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Also write every run's trace into this directory.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
        #[arg(long)]
        map: Option<PathBuf>,
        /// Override a key of the base config.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the randomized invariant suite.
    Check {
        /// Audit seed.
        #[arg(long, default_value_t = DEFAULT_AUDIT_SEED)]
        seed: u64,
    },
    /// Render CSV traces or aggregates as an SVG line chart.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_mdp(map: Option<&Path>) -> Result<TabularMdp> {
    match map {
        Some(p) => MazeSpec::parse(&read(p)?)?.to_mdp(DEFAULT_DISCOUNT),
        None => Ok(default_maze()),
    }
}

fn output(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = fs::File::create(p).map_err(|e| Error::io(p, e))?;
            let mut w = io::BufWriter::new(file);
            write(&mut w)?;
            w.flush().map_err(|e| Error::io(p, e))
        }
        None => write(&mut io::stdout().lock()),
    }
}

fn solve(map: Option<PathBuf>) -> Result<()> {
    let text = match &map {
        Some(p) => read(p)?,
        None => DEFAULT_MAP.to_string(),
    };
    let maze = MazeSpec::parse(&text)?;
    let mdp = maze.to_mdp(DEFAULT_DISCOUNT)?;
    let vi = value_iteration(&mdp, 1e-10)?;
    println!("states: {}", mdp.n_states());
    println!("actions: {}", mdp.n_actions());
    println!("discount: {}", mdp.discount());
    println!("J*: {:.12}", vi.j_star);
    match path_length(&mdp, &vi.greedy, mdp.n_states() + 1) {
        Some(l) => println!("optimal path length: {l}"),
        None => println!("optimal path length: none (goal never reached)"),
    }
    print!("{}", maze.render_actions(&vi.greedy));
    Ok(())
}

fn run_cmd(
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    map: Option<PathBuf>,
    overrides: Vec<String>,
) -> Result<()> {
    let file = match &config {
        Some(p) => parse_run_file(&read(p)?)?,
        None => parse_run_file("")?,
    };
    let RunFile {
        config: base,
        out: file_out,
        map: file_map,
        has_seed,
    } = file;
    let overrides = overrides.iter().map(|s| parse_assignment(s)).collect::<Result<Vec<_>>>()?;
    let mut cfg = apply_overrides(&base, &overrides)?;
    let configured = (has_seed || overrides.iter().any(|(k, _)| k == "seed")).then_some(cfg.seed);
    let env = std::env::var(SEED_ENV).ok();
    if let Some(s) = resolve_seed(seed, configured, env.as_deref())? {
        cfg.seed = s;
    }
    cfg.validate()?;
    let mdp = load_mdp(map.or(file_map).as_deref())?;
    let trace = run(&mdp, &cfg)?;
    if trace.truncated {
        eprintln!("warning: step cap {} reached after {} episodes", cfg.max_steps, trace.episodes.len());
    }
    output(out.or(file_out).as_deref(), |w| write_trace(&trace, w))
}

#[allow(clippy::too_many_arguments)]
fn sweep_cmd(
    preset: Option<String>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    jobs: usize,
    trace_dir: Option<PathBuf>,
    map: Option<PathBuf>,
    overrides: Vec<String>,
) -> Result<()> {
    let spec = match (preset, config) {
        (Some(p), _) => SweepSpec::preset(&p)?,
        (None, Some(c)) => SweepSpec::parse(&read(&c)?)?,
        (None, None) => return Err(Error::InvalidConfig("sweep needs --preset or --config".into())),
    };
    let mut table = toml::Table::new();
    for s in &overrides {
        let (k, v) = parse_assignment(s)?;
        table.insert(k, v);
    }
    let spec = spec.with_base_overrides(&table)?;
    let mdp = load_mdp(map.as_deref())?;
    let opts = SweepOptions { jobs, trace_dir };
    let records = run_sweep(&mdp, &spec, &opts)?;
    let truncated: usize = records.iter().flat_map(|r| &r.runs).filter(|r| r.truncated).count();
    if truncated > 0 {
        eprintln!("warning: {truncated} runs hit the step cap");
    }
    let rows: Vec<_> = records.iter().map(|r| r.to_row()).collect();
    output(out.as_deref(), |w| write_aggregates(&rows, w))
}

fn check_cmd(seed: u64) -> bool {
    let results = run_checks(seed);
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &results {
        let verdict = if r.passed { "pass" } else { "FAIL" };
        println!("{:width$}  {verdict}", r.name);
        if !r.passed {
            println!("{:width$}  {}", "", r.detail);
        }
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} checks, {} failed (audit seed {seed})", results.len(), failed);
    failed == 0
}

fn plot_cmd(csv: Vec<PathBuf>, out: PathBuf) -> Result<()> {
    let files = csv
        .iter()
        .map(|p| Ok((p.display().to_string(), read(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let chart = chart_from_csv(&files)?;
    fs::write(&out, render_svg(&chart)).map_err(|e| Error::io(&out, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { map } => solve(map),
        Command::Run {
            config,
            seed,
            out,
            map,
            overrides,
        } => run_cmd(config, seed, out, map, overrides),
        Command::Sweep {
            preset,
            config,
            out,
            jobs,
            trace_dir,
            map,
            overrides,
        } => sweep_cmd(preset, config, out, jobs, trace_dir, map, overrides),
        Command::Check { seed } => {
            return if check_cmd(seed) { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
        Command::Plot { csv, out } => plot_cmd(csv, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
