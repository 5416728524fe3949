//! Meta-learned policy gradient: a learned table `eta` replaces the critic
//! in the score-function update and is trained to move the learner towards
//! a target policy.
//!
//! The first part checks the analytic meta-gradient on a single rollout;
//! the second runs the full agents on the maze.
//!
//! ```bash
//! cargo run --release --example meta_gradient
//! ```

use accelpo::agents::{make_target, meta_gradient, meta_objective, run, Algorithm, MetaBuffer, RunConfig, TargetKind};
use accelpo::mdp::{default_maze, exact_q, sample_rollout};
use accelpo::{QTable, Result, TabularPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mdp = default_maze();
    let (n_s, n_a) = mdp.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let pi = TabularPolicy::uniform(n_s, n_a);
    let rollout = sample_rollout(&mdp, &pi, 0, 8, &mut rng);
    let mut buffer = MetaBuffer::new(1);
    buffer.push(rollout, pi.clone());
    let target = make_target(TargetKind::Geometric, &pi, &exact_q(&mdp, &pi)?, 1.0, 0.1, &buffer);
    let eta = QTable::zeros(n_s, n_a);
    let grad = meta_gradient(&eta, 0.1, &target, &buffer)?;

    // Central difference along the gradient direction.
    let eps = 1e-6;
    let norm = grad.sup_norm();
    let dir = grad.scale(1.0 / norm);
    let fd = (meta_objective(&eta.add_scaled(eps, &dir), 0.1, &target, &buffer)
        - meta_objective(&eta.add_scaled(-eps, &dir), 0.1, &target, &buffer))
        / (2.0 * eps);
    let analytic: f64 = grad.as_slice().iter().zip(dir.as_slice()).map(|(g, d)| g * d).sum();
    println!("directional derivative: analytic {analytic:.8e}, finite difference {fd:.8e}");

    let episodes = 150;
    let configs = [
        ("pg", RunConfig { policy_step: 0.1, episodes, ..RunConfig::new(Algorithm::Pg) }),
        ("opg expert geometric", RunConfig { episodes, ..RunConfig::expert_targets(TargetKind::Geometric, 0.01) }),
        ("opg expert parametric", RunConfig { episodes, ..RunConfig::expert_targets(TargetKind::Parametric, 0.01) }),
        ("opg pred geometric", RunConfig { episodes, ..RunConfig::predicted_targets(TargetKind::Geometric, 0.01, 0.1) }),
    ];
    for (label, cfg) in configs {
        let trace = run(&mdp, &RunConfig { seed: 1, ..cfg })?;
        println!(
            "{label:<22} regret at episode {episodes}: {:.4}, total {:.1}",
            trace.final_regret(),
            trace.total_regret()
        );
    }
    Ok(())
}
