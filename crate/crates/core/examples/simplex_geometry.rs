//! Softmax mirror steps, simplex projection and the two improvement steps
//! they induce on the maze.
//!
//! ```bash
//! cargo run --release --example simplex_geometry
//! ```

use accelpo::mdp::{default_maze, exact_q, performance, value_iteration};
use accelpo::policy::{euclidean_project, mirror_step, projected_ascent_step};
use accelpo::{DirectPolicy, Policy, QTable, Result, TabularPolicy};

fn main() -> Result<()> {
    println!("project [0.5, 0.9, -0.2] -> {:?}", euclidean_project(&[0.5, 0.9, -0.2]));
    println!("project [3, 0, 0]        -> {:?}", euclidean_project(&[3.0, 0.0, 0.0]));

    // pi' ∝ pi exp(alpha U) ignores constants added to a row of U.
    let pi = TabularPolicy::uniform(1, 3);
    let u = QTable::from_rows(&[vec![1.0, 0.0, -1.0]])?;
    let shifted = QTable::from_rows(&[vec![101.0, 100.0, 99.0]])?;
    println!("mirror step:         {:?}", mirror_step(&pi, &u, 1.0).row(0));
    println!("mirror step shifted: {:?}", mirror_step(&pi, &shifted, 1.0).row(0));

    let mdp = default_maze();
    let j_star = value_iteration(&mdp, 1e-10)?.j_star;
    let (n_s, n_a) = mdp.shape();
    let mut soft = TabularPolicy::uniform(n_s, n_a);
    let mut direct = DirectPolicy::uniform(n_s, n_a);
    println!("\niter   NPG regret   projected regret");
    for t in 0..=40 {
        if t % 5 == 0 {
            println!(
                "{t:4}   {:10.4e}   {:10.4e}",
                j_star - performance(&mdp, &soft)?,
                j_star - performance(&mdp, &direct)?
            );
        }
        soft = mirror_step(&soft, &exact_q(&mdp, &soft)?, 1.0);
        direct = projected_ascent_step(&direct, &exact_q(&mdp, &direct)?, 1.0);
    }
    Ok(())
}
