//! Exact-gradient mirror ascent with vanilla, momentum, optimistic and
//! extra-gradient update rules.
//!
//! ```bash
//! cargo run --release --example accelerated_ascent
//! ```

use accelpo::mdp::{default_maze, value_iteration};
use accelpo::updates::{accelerated_mirror_ascent, AccelRule};
use accelpo::Result;

fn main() -> Result<()> {
    let mdp = default_maze();
    let j_star = value_iteration(&mdp, 1e-10)?.j_star;
    let iterations = 60;
    let (mu, beta, alpha) = (0.5, 1.0, 1.0);
    let rules = [
        ("vanilla", AccelRule::Vanilla),
        ("momentum", AccelRule::Momentum),
        ("optimistic h=1", AccelRule::Optimistic { horizon: 1 }),
        ("optimistic h=4", AccelRule::Optimistic { horizon: 4 }),
        ("extra-gradient", AccelRule::ExtraGradient { recompute_target: false }),
    ];
    print!("{:>16}", "iteration");
    for t in (0..iterations).step_by(10) {
        print!("{t:>11}");
    }
    println!();
    for (name, rule) in rules {
        let regrets = accelerated_mirror_ascent(&mdp, rule, mu, beta, alpha, iterations, j_star)?;
        print!("{name:>16}");
        for r in regrets.iter().step_by(10) {
            print!("{r:>11.3e}");
        }
        println!();
    }
    Ok(())
}
