//! Independent oracles and random instances shared by the integration tests.
#![allow(dead_code)]

use accelpo::{Policy, QTable, TabularMdp, TabularPolicy};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random MDP with 1..=max_states states and 1..=3 actions.
pub fn random_mdp(rng: &mut impl Rng, max_states: usize) -> TabularMdp {
    let n_s = rng.gen_range(1..=max_states);
    let n_a = rng.gen_range(1..=3);
    let gamma = rng.gen_range(0.5..0.95);
    TabularMdp::random(n_s, n_a, gamma, rng)
}

pub fn random_table(rng: &mut impl Rng, n_s: usize, n_a: usize, scale: f64) -> QTable {
    QTable::from_fn(n_s, n_a, |_, _| rng.gen_range(-scale..scale))
}

pub fn random_policy(rng: &mut impl Rng, n_s: usize, n_a: usize) -> TabularPolicy {
    TabularPolicy::from_logits(random_table(rng, n_s, n_a, 2.0))
}

/// `Q_pi` from the state-action system `(I - gamma P Pi) q = r`, solved with
/// a dense LU of size `|S||A|`.
pub fn q_oracle(mdp: &TabularMdp, pi: &(impl Policy + ?Sized)) -> QTable {
    let (n_s, n_a) = mdp.shape();
    let n = n_s * n_a;
    let gamma = mdp.discount();
    let mut m = DMatrix::<f64>::identity(n, n);
    let mut r = DVector::<f64>::zeros(n);
    for s in 0..n_s {
        for a in 0..n_a {
            let i = s * n_a + a;
            r[i] = mdp.reward(s, a);
            for s2 in 0..n_s {
                let p = mdp.transition(s, a, s2);
                if p == 0.0 {
                    continue;
                }
                for a2 in 0..n_a {
                    m[(i, s2 * n_a + a2)] -= gamma * p * pi.prob(s2, a2);
                }
            }
        }
    }
    let q = m.lu().solve(&r).expect("I - gamma P Pi is invertible");
    QTable::from_vec(n_s, n_a, q.iter().copied().collect()).unwrap()
}

/// `J(pi) = sum_s rho(s) sum_a pi(a|s) Q_pi(s, a)` through [`q_oracle`].
pub fn j_oracle(mdp: &TabularMdp, pi: &(impl Policy + ?Sized)) -> f64 {
    let q = q_oracle(mdp, pi);
    (0..mdp.n_states())
        .map(|s| {
            let v: f64 = (0..mdp.n_actions()).map(|a| pi.prob(s, a) * q[(s, a)]).sum();
            mdp.initial_dist()[s] * v
        })
        .sum()
}
