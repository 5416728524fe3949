//! Actor-critic agents whose critic is sharpened by a depth-h search
//! through the model, in evaluation and greedy mode.
//!
//! ```bash
//! cargo run --release --example forward_search
//! ```

use accelpo::agents::{run, Algorithm, RunConfig, SearchKind};
use accelpo::harness::mean_stderr;
use accelpo::mdp::default_maze;
use accelpo::Result;

fn main() -> Result<()> {
    let mdp = default_maze();
    let seeds = 1..=3;
    let episodes = 100;

    let pg = RunConfig {
        policy_step: 0.5,
        episodes,
        ..RunConfig::new(Algorithm::Pg)
    };
    report("pg (exact critic)", &mdp, &pg, seeds.clone())?;

    for mode in [SearchKind::Eval, SearchKind::Greedy] {
        for h in [0, 2, 8] {
            let cfg = RunConfig {
                episodes,
                ..RunConfig::forward_search(mode, 0.1, h)
            };
            report(&format!("fws {mode:?} h={h}"), &mdp, &cfg, seeds.clone())?;
        }
    }
    Ok(())
}

fn report(
    label: &str,
    mdp: &accelpo::TabularMdp,
    cfg: &RunConfig,
    seeds: std::ops::RangeInclusive<u64>,
) -> Result<()> {
    let mut totals = Vec::new();
    let mut finals = Vec::new();
    for seed in seeds {
        let trace = run(mdp, &RunConfig { seed, ..cfg.clone() })?;
        totals.push(trace.total_regret());
        finals.push(trace.final_regret());
    }
    let (t, ts) = mean_stderr(&totals);
    let (f, fs) = mean_stderr(&finals);
    println!("{label:<22} total {t:>10.1} ± {ts:<8.1} final {f:.4} ± {fs:.4}");
    Ok(())
}
