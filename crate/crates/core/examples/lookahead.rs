//! Bellman operators and depth-h search values.
//!
//! Evaluation-mode search applies `T_pi` h times and so approaches `Q_pi`
//! geometrically; greedy search applies `T` and approaches `Q*`.
//!
//! ```bash
//! cargo run --release --example lookahead
//! ```

use accelpo::bellman::{lookahead_recursion_check, search_values, t_opt, SearchMode};
use accelpo::mdp::{default_maze, exact_q, value_iteration};
use accelpo::{QTable, Result, TabularPolicy};

fn main() -> Result<()> {
    let mdp = default_maze();
    let (n_s, n_a) = mdp.shape();
    let pi = TabularPolicy::uniform(n_s, n_a);
    let q_pi = exact_q(&mdp, &pi)?;
    let q_star = value_iteration(&mdp, 1e-10)?.q_star;
    let leaf = QTable::zeros(n_s, n_a);

    println!("   h   |U_eval - Q_pi|   gamma^h |Q_pi|   |U_greedy - Q*|");
    for h in [0, 1, 2, 4, 8, 16, 64, 256] {
        let eval = search_values(&mdp, &leaf, h, SearchMode::Eval(&pi));
        let greedy = search_values(&mdp, &leaf, h, SearchMode::Greedy);
        println!(
            "{h:4}   {:14.6e}   {:14.6e}   {:14.6e}",
            eval.sup_distance(&q_pi),
            mdp.discount().powi(h as i32) * q_pi.sup_norm(),
            greedy.sup_distance(&q_star)
        );
    }

    let tq = t_opt(&mdp, &q_pi);
    println!("\n|T Q_pi - Q_pi| = {:.4e} (zero only at an optimal policy)", tq.sup_distance(&q_pi));
    for h in [1, 3, 10] {
        println!("recursive lookahead h = {h}: {}", lookahead_recursion_check(&mdp, &pi, &q_pi.scale(0.5), h));
    }
    Ok(())
}
