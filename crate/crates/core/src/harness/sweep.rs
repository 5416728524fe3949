//! Grid sweeps over run configs with seeded replication.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use toml::{Table, Value};

use super::config::merge;
use super::csvio::{write_trace, AggregateRow};
use crate::agents::{run, Algorithm, RunConfig, SearchKind, TargetKind};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

/// Meta step sizes swept by the meta-gradient presets.
pub const META_STEPS: [f64; 5] = [0.001, 0.003, 0.01, 0.03, 0.1];
pub const CRITIC_STEPS: [f64; 4] = [0.01, 0.1, 0.5, 0.9];
pub const HORIZONS: [i64; 6] = [0, 1, 2, 4, 8, 16];

pub const PRESETS: [&str; 7] = ["fig2a", "fig2b", "fig3a", "fig3b", "fig3c", "pg_baseline", "ac_baseline"];

pub fn default_seeds() -> Vec<u64> {
    (1..=10).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<Value>,
}

impl Axis {
    pub fn new(name: &str, values: impl IntoIterator<Item = impl Into<Value>>) -> Self {
        Self {
            name: name.to_string(),
            values: values.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub base: RunConfig,
    /// Outermost axis first.
    pub axes: Vec<Axis>,
    pub seeds: Vec<u64>,
}

/// One configuration of the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub config_id: String,
    pub axes: Vec<(String, String)>,
    pub config: RunConfig,
}

fn display_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl SweepSpec {
    pub fn new(name: &str, base: RunConfig, axes: Vec<Axis>, seeds: Vec<u64>) -> Result<Self> {
        let spec = Self {
            name: name.to_string(),
            base,
            axes,
            seeds,
        };
        spec.points()?;
        Ok(spec)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let meta = || Axis::new("meta_step", META_STEPS);
        let kinds = || Axis::new("target_kind", ["geometric", "parametric"]);
        let (base, axes) = match name {
            "fig2a" | "fig2b" => {
                let mode = if name == "fig2a" { SearchKind::Eval } else { SearchKind::Greedy };
                (
                    RunConfig::forward_search(mode, 0.01, 0),
                    vec![Axis::new("critic_step", CRITIC_STEPS), Axis::new("horizon", HORIZONS)],
                )
            }
            "fig3a" => (RunConfig::expert_targets(TargetKind::Geometric, 0.01), vec![kinds(), meta()]),
            "fig3b" => (RunConfig::predicted_targets(TargetKind::Geometric, 0.01, 0.1), vec![kinds(), meta()]),
            "fig3c" => (
                RunConfig::predicted_targets(TargetKind::Geometric, 0.01, 0.1),
                vec![Axis::new("critic_step", [0.1, 0.5]), kinds(), meta()],
            ),
            "pg_baseline" => (
                RunConfig {
                    policy_step: 0.1,
                    ..RunConfig::new(Algorithm::Pg)
                },
                vec![Axis::new("algorithm", ["pg"])],
            ),
            "ac_baseline" => (
                RunConfig {
                    policy_step: 0.5,
                    critic_step: 0.1,
                    ..RunConfig::new(Algorithm::Ac)
                },
                vec![Axis::new("critic_step", [0.1, 0.5])],
            ),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown preset {other:?} (known: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Self::new(name, base, axes, default_seeds())
    }

    /// Parse a sweep file:
    ///
    /// ```toml
    /// preset = "fig2a"      # optional starting point
    /// seeds = [1, 2, 3]
    /// [base]
    /// episodes = 100
    /// [grid]
    /// horizon = [0, 4]
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.message().to_string()))?;
        let start = match table.remove("preset") {
            Some(Value::String(p)) => Some(Self::preset(&p)?),
            Some(other) => return Err(Error::InvalidConfig(format!("preset must be a string, got {other}"))),
            None => None,
        };
        let name = match table.remove("name") {
            Some(Value::String(n)) => n,
            Some(other) => return Err(Error::InvalidConfig(format!("name must be a string, got {other}"))),
            None => start.as_ref().map_or_else(|| "sweep".to_string(), |s| s.name.clone()),
        };
        let seeds = match table.remove("seeds") {
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                    other => Err(Error::InvalidConfig(format!("seed {other} is not an unsigned integer"))),
                })
                .collect::<Result<Vec<_>>>()?,
            Some(other) => return Err(Error::InvalidConfig(format!("seeds must be a list, got {other}"))),
            None => start.as_ref().map_or_else(default_seeds, |s| s.seeds.clone()),
        };
        let base_start = start.as_ref().map_or_else(RunConfig::default, |s| s.base.clone());
        let base = match table.remove("base") {
            Some(Value::Table(t)) => merge(&base_start, &t)?,
            Some(other) => return Err(Error::InvalidConfig(format!("[base] must be a table, got {other}"))),
            None => base_start,
        };
        let axes = match table.remove("grid") {
            Some(Value::Table(t)) => t
                .into_iter()
                .map(|(k, v)| match v {
                    Value::Array(values) => Ok(Axis { name: k, values }),
                    single => Ok(Axis {
                        name: k,
                        values: vec![single],
                    }),
                })
                .collect::<Result<Vec<_>>>()?,
            Some(other) => return Err(Error::InvalidConfig(format!("[grid] must be a table, got {other}"))),
            None => start.map_or_else(Vec::new, |s| s.axes),
        };
        if !table.is_empty() {
            return Err(Error::UnknownKeys(table.keys().cloned().collect()));
        }
        Self::new(&name, base, axes, seeds)
    }

    /// Apply the same overrides to the base config.
    pub fn with_base_overrides(mut self, overrides: &Table) -> Result<Self> {
        self.base = merge(&self.base, overrides)?;
        self.points()?;
        Ok(self)
    }

    pub fn n_points(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Grid points in row-major order (last axis fastest). Every point is
    /// validated.
    pub fn points(&self) -> Result<Vec<GridPoint>> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one seed".into()));
        }
        if let Some(a) = self.axes.iter().find(|a| a.values.is_empty()) {
            return Err(Error::InvalidConfig(format!("axis {} has no values", a.name)));
        }
        let mut points = Vec::with_capacity(self.n_points());
        let mut idx = vec![0usize; self.axes.len()];
        loop {
            let mut entries = Table::new();
            let mut axes = Vec::with_capacity(self.axes.len());
            for (axis, &i) in self.axes.iter().zip(&idx) {
                entries.insert(axis.name.clone(), axis.values[i].clone());
                axes.push((axis.name.clone(), display_value(&axis.values[i])));
            }
            let config = merge(&self.base, &entries)?;
            config.validate()?;
            let mut config_id = config.algorithm.name().to_string();
            for (k, v) in &axes {
                config_id.push_str(&format!(";{k}={v}"));
            }
            points.push(GridPoint { config_id, axes, config });

            let mut d = self.axes.len();
            loop {
                if d == 0 {
                    return Ok(points);
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < self.axes[d].values.len() {
                    break;
                }
                idx[d] = 0;
            }
        }
    }
}

/// Summary of one seeded run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub final_regret: f64,
    pub total_regret: f64,
    pub truncated: bool,
}

/// Sample mean and standard error (`sd / sqrt(n)`, zero for one sample).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty(), "no samples");
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRecord {
    pub config_id: String,
    pub axes: Vec<(String, String)>,
    /// Sorted by seed, so aggregates do not depend on seed order.
    pub runs: Vec<RunSummary>,
}

impl AggregateRecord {
    pub fn new(config_id: String, axes: Vec<(String, String)>, mut runs: Vec<RunSummary>) -> Self {
        assert!(!runs.is_empty(), "aggregate needs at least one run");
        runs.sort_by_key(|r| r.seed);
        Self { config_id, axes, runs }
    }

    pub fn final_regrets(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.final_regret).collect()
    }

    pub fn total_regrets(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.total_regret).collect()
    }

    pub fn final_regret(&self) -> (f64, f64) {
        mean_stderr(&self.final_regrets())
    }

    pub fn total_regret(&self) -> (f64, f64) {
        mean_stderr(&self.total_regrets())
    }

    pub fn axis(&self, name: &str) -> Option<&str> {
        self.axes.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    pub fn to_row(&self) -> AggregateRow {
        let (fm, fs) = self.final_regret();
        let (tm, ts) = self.total_regret();
        AggregateRow {
            config_id: self.config_id.clone(),
            axes: self.axes.clone(),
            final_regret_mean: fm,
            final_regret_stderr: fs,
            total_regret_mean: tm,
            total_regret_stderr: ts,
            seeds: self.runs.len(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    /// Write every run's trace as `<dir>/<point>_seed<seed>.csv`.
    pub trace_dir: Option<PathBuf>,
}

pub fn trace_file_name(point: usize, seed: u64) -> String {
    format!("{point:03}_seed{seed}.csv")
}

fn run_one(mdp: &TabularMdp, point: &GridPoint, index: usize, seed: u64, dir: Option<&Path>) -> Result<RunSummary> {
    let cfg = RunConfig {
        seed,
        ..point.config.clone()
    };
    let trace = run(mdp, &cfg)?;
    if let Some(dir) = dir {
        let path = dir.join(trace_file_name(index, seed));
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_trace(&trace, std::io::BufWriter::new(file))?;
    }
    Ok(RunSummary {
        seed,
        final_regret: trace.final_regret(),
        total_regret: trace.total_regret(),
        truncated: trace.truncated,
    })
}

/// Run every (grid point, seed) pair and aggregate per point, in grid order.
pub fn run_sweep(mdp: &TabularMdp, spec: &SweepSpec, opts: &SweepOptions) -> Result<Vec<AggregateRecord>> {
    let points = spec.points()?;
    if let Some(dir) = &opts.trace_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| spec.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let dir = opts.trace_dir.as_deref();
    let summaries: Vec<Result<RunSummary>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, seed)| run_one(mdp, &points[p], p, seed, dir))
            .collect()
    });
    let mut summaries = summaries.into_iter();
    let mut out = Vec::with_capacity(points.len());
    for point in points {
        let runs = summaries
            .by_ref()
            .take(spec.seeds.len())
            .collect::<Result<Vec<_>>>()?;
        out.push(AggregateRecord::new(point.config_id, point.axes, runs));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig2a_grid_size() {
        let spec = SweepSpec::preset("fig2a").unwrap();
        assert_eq!(spec.n_points(), 24);
        assert_eq!(spec.points().unwrap().len() * spec.seeds.len(), 240);
    }

    #[test]
    fn grid_order_is_row_major() {
        let spec = SweepSpec::preset("fig2b").unwrap();
        let pts = spec.points().unwrap();
        assert_eq!(pts[0].axes, vec![("critic_step".into(), "0.01".into()), ("horizon".into(), "0".into())]);
        assert_eq!(pts[1].config.horizon, 1);
        assert_eq!(pts[6].config.critic_step, 0.1);
        assert_eq!(pts[6].config.search_mode, SearchKind::Greedy);
        assert_eq!(pts[6].config_id, "fws;critic_step=0.1;horizon=0");
    }

    #[test]
    fn every_preset_is_valid() {
        for p in PRESETS {
            SweepSpec::preset(p).unwrap();
        }
        assert!(SweepSpec::preset("fig9").is_err());
    }

    #[test]
    fn parses_sweep_files() {
        let spec = SweepSpec::parse("preset = \"fig2a\"\nseeds = [3, 4]\n[base]\nepisodes = 7\n[grid]\nhorizon = [2, 4]\n").unwrap();
        assert_eq!(spec.seeds, vec![3, 4]);
        assert_eq!(spec.base.episodes, 7);
        assert_eq!(spec.n_points(), 2);
        assert!(matches!(SweepSpec::parse("bogus = 1"), Err(Error::UnknownKeys(_))));
        assert!(SweepSpec::parse("[grid]\nhorizon = []").is_err());
        assert!(SweepSpec::parse("[grid]\nnope = [1]").is_err());
    }

    #[test]
    fn stderr_definition() {
        assert_eq!(mean_stderr(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }
}
