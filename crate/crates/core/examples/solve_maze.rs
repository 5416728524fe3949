//! Build the bundled maze, solve it exactly and compare a few policies.
//!
//! ```bash
//! cargo run --release --example solve_maze
//! ```

use accelpo::bellman::greedy_policy;
use accelpo::mdp::{default_maze, exact_q, load_maze, path_length, performance, value_iteration, MazeSpec, DEFAULT_MAP};
use accelpo::{DirectPolicy, Result};

fn main() -> Result<()> {
    let maze = MazeSpec::parse(DEFAULT_MAP)?;
    let mdp = default_maze();
    println!("{} free cells, {} actions, gamma = {}", mdp.n_states(), mdp.n_actions(), mdp.discount());

    let vi = value_iteration(&mdp, 1e-10)?;
    println!("value iteration: {} sweeps, J* = {:.6}", vi.iterations, vi.j_star);
    println!("shortest path: {:?} steps", path_length(&mdp, &vi.greedy, 100));
    print!("{}", maze.render_actions(&vi.greedy));

    let uniform = DirectPolicy::uniform(mdp.n_states(), mdp.n_actions());
    let j_uniform = performance(&mdp, &uniform)?;
    println!("uniform policy: J = {j_uniform:.6}, regret = {:.6}", vi.j_star - j_uniform);

    // Two rounds of policy iteration from the uniform policy.
    let mut pi = uniform;
    for k in 1..=2 {
        pi = greedy_policy(&exact_q(&mdp, &pi)?);
        println!("policy iteration {k}: regret = {:.3e}", vi.j_star - performance(&mdp, &pi)?);
    }

    // Any ASCII map works; here the goal sits next to the start.
    let tiny = load_maze("SG\n")?;
    let j = value_iteration(&tiny, 1e-12)?.j_star;
    println!("two-cell maze: J* = {j:.6} (1/(1-gamma) = {:.6})", 1.0 / (1.0 - tiny.discount()));
    Ok(())
}
