mod common;

use accelpo::mdp::value_iteration;
use accelpo::policy::mirror_step;
use accelpo::updates::{
    accelerated_mirror_ascent, extragrad_half_step, extragrad_update, momentum_update, optimistic_update,
    vanilla_update, AccelRule, UpdateState,
};
use accelpo::{QTable, TabularMdp, TabularPolicy};
use common::{random_table, rng};
use proptest::prelude::*;
use rand::Rng;

fn state(n_s: usize, n_a: usize, mu: f64, beta: f64, alpha: f64) -> UpdateState {
    UpdateState::new(n_s, n_a, mu, beta, alpha).unwrap()
}

fn two_state_chain() -> TabularMdp {
    // state 0: a trickle of reward, or move on; state 1: the real reward
    TabularMdp::new(
        vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]]],
        vec![vec![0.1, 0.0], vec![1.0, 0.0]],
        0.9,
        vec![1.0, 0.0],
    )
    .unwrap()
}

#[test]
fn momentum_reaches_its_geometric_limit() {
    let g = QTable::from_rows(&[vec![1.0, -2.0, 0.5]]).unwrap();
    let (mu, beta) = (0.5, 0.8);
    let mut st = state(1, 3, mu, beta, 1.0);
    for _ in 0..60 {
        st = momentum_update(&st, &g).1;
    }
    assert!(st.u_prev.sup_distance(&g.scale(beta / (1.0 - mu))) < 1e-8);
}

#[test]
fn optimistic_special_cases() {
    let mut r = rng(1);
    let g_next = random_table(&mut r, 2, 3, 1.0);
    let g_curr = random_table(&mut r, 2, 3, 1.0);
    let mut st = state(2, 3, 0.0, 1.5, 1.0);
    st.u_prev = random_table(&mut r, 2, 3, 1.0);
    assert_eq!(optimistic_update(&st, &g_next, &g_curr).0, g_next.scale(1.5));
    let fresh = state(2, 3, 0.7, 1.5, 1.0);
    assert_eq!(optimistic_update(&fresh, &g_next, &QTable::zeros(2, 3)).0, g_next.scale(1.5));
}

#[test]
fn chained_predictions_cancel_the_correction() {
    // feeding back the previous prediction keeps u_t - beta g_{t+1} at zero
    let mut r = rng(4);
    let mut st = state(2, 2, 0.8, 0.7, 1.0);
    for _ in 0..20 {
        let g_next = random_table(&mut r, 2, 2, 3.0);
        let g_curr = st.g_prev.clone();
        let (u, next) = optimistic_update(&st, &g_next, &g_curr);
        assert!(u.sup_distance(&g_next.scale(0.7)) < 1e-12);
        st = next;
    }
    let mdp = two_state_chain();
    let j_star = value_iteration(&mdp, 1e-12).unwrap().j_star;
    let runs: Vec<Vec<f64>> = [0.0, 0.5, 0.9]
        .iter()
        .map(|&mu| accelerated_mirror_ascent(&mdp, AccelRule::Optimistic { horizon: 1 }, mu, 1.0, 0.5, 50, j_star).unwrap())
        .collect();
    for run in &runs[1..] {
        for (a, b) in run.iter().zip(&runs[0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn extragrad_shares_the_optimistic_formula() {
    let mut r = rng(2);
    let mut st = state(3, 2, 0.6, 0.9, 1.0);
    st.u_prev = random_table(&mut r, 3, 2, 1.0);
    let g_half = random_table(&mut r, 3, 2, 1.0);
    let g_curr = random_table(&mut r, 3, 2, 1.0);
    assert_eq!(extragrad_update(&st, &g_half, &g_curr), optimistic_update(&st, &g_half, &g_curr));
    let mut st = state(3, 2, 0.0, 1.0, 1.0);
    st.u_prev = random_table(&mut r, 3, 2, 1.0);
    assert_eq!(extragrad_update(&st, &g_half, &g_curr).0, g_half);
}

#[test]
fn half_step_is_a_mirror_step() {
    let mut r = rng(3);
    let z = random_table(&mut r, 3, 4, 2.0);
    let u = random_table(&mut r, 3, 4, 2.0);
    let pi = TabularPolicy::from_logits(z.clone());
    assert_eq!(extragrad_half_step(&z, &u, 0.3), mirror_step(&pi, &u, 0.3));
    let unchanged = extragrad_half_step(&z, &QTable::zeros(3, 4), 0.3);
    assert!(unchanged.probs().sup_distance(pi.probs()) < 1e-15);
    let mut spike = QTable::zeros(1, 3);
    spike[(0, 2)] = 1e6;
    let greedy = extragrad_half_step(&QTable::zeros(1, 3), &spike, 1.0);
    assert_eq!(greedy.probs().as_slice(), &[0.0, 0.0, 1.0]);
}

#[test]
fn extragrad_beats_vanilla_on_a_chain() {
    let mdp = two_state_chain();
    let j_star = value_iteration(&mdp, 1e-12).unwrap().j_star;
    let (mu, beta, alpha) = (0.5, 1.0, 0.5);
    let vanilla: f64 = accelerated_mirror_ascent(&mdp, AccelRule::Vanilla, mu, beta, alpha, 200, j_star)
        .unwrap()
        .iter()
        .sum();
    let eg: f64 = accelerated_mirror_ascent(
        &mdp,
        AccelRule::ExtraGradient { recompute_target: true },
        mu,
        beta,
        alpha,
        200,
        j_star,
    )
    .unwrap()
    .iter()
    .sum();
    assert!(eg < vanilla, "{eg} vs vanilla {vanilla}");
}

#[test]
fn invalid_hyperparameters_are_rejected() {
    assert!(UpdateState::new(1, 1, 1.0, 1.0, 1.0).is_err());
    assert!(UpdateState::new(1, 1, 0.5, 0.0, 1.0).is_err());
    assert!(UpdateState::new(1, 1, 0.5, 1.0, -1.0).is_err());
}

/// Runs the u-space rule and, independently, the dual recursion written in
/// logits; returns the largest gap between the two logit trajectories.
fn dual_gap(seed: u64, optimistic: bool) -> f64 {
    let mut r = rng(seed);
    let (n_s, n_a) = (r.gen_range(1..4), r.gen_range(1..4));
    let (mu, beta, alpha) = (r.gen_range(0.0..0.95), r.gen_range(0.1..2.0), r.gen_range(0.1..2.0));
    let grads: Vec<QTable> = (0..=50).map(|_| random_table(&mut r, n_s, n_a, 2.0)).collect();

    let mut st = state(n_s, n_a, mu, beta, alpha);
    let mut z = random_table(&mut r, n_s, n_a, 1.0);
    // dual iterates: previous z_{t-1} and z_{t-1/2}, initially equal (u_{-1} = 0)
    let (mut z_prev, mut z_half_prev) = (z.clone(), z.clone());
    let mut z_dual = z.clone();
    let mut worst: f64 = 0.0;
    for t in 0..50 {
        let u = if optimistic {
            let g_curr = if t == 0 { QTable::zeros(n_s, n_a) } else { grads[t].clone() };
            let (u, next) = optimistic_update(&st, &grads[t + 1], &g_curr);
            st = next;
            u
        } else {
            let (u, next) = momentum_update(&st, &grads[t]);
            st = next;
            u
        };
        let z_half = z.add_scaled(alpha, &u);

        let drift = z_half_prev.sub(&z_prev).scale(mu);
        let push = if optimistic {
            let g_curr = if t == 0 { QTable::zeros(n_s, n_a) } else { grads[t].clone() };
            grads[t + 1].add_scaled(-mu, &g_curr).scale(alpha * beta)
        } else {
            grads[t].scale(alpha * beta)
        };
        let z_half_dual = z_dual.add_scaled(1.0, &drift).add_scaled(1.0, &push);
        worst = worst.max(z_half.sup_distance(&z_half_dual) / z_half.sup_norm().max(1.0));

        z_prev = z_dual.clone();
        z_half_prev = z_half_dual.clone();
        z_dual = z_half_dual;
        z = z_half;
    }
    worst
}

#[test]
fn dual_form_of_optimism_carries_the_decayed_prediction() {
    // z_{t+1/2} = z_t + mu (z_{t-1/2} - z_{t-1}) + alpha beta (g_{t+1} - g_t)
    // only matches u_t = beta g_{t+1} + mu (u_{t-1} - beta g_t) with mu g_t
    // in place of g_t: one step differs by alpha beta (1 - mu) g_t.
    let (mu, beta, alpha) = (0.4, 1.3, 0.7);
    let mut r = rng(9);
    let g_curr = random_table(&mut r, 2, 2, 1.0);
    let g_next = random_table(&mut r, 2, 2, 1.0);
    let mut st = state(2, 2, mu, beta, alpha);
    st.u_prev = random_table(&mut r, 2, 2, 1.0);
    let (u, _) = optimistic_update(&st, &g_next, &g_curr);
    let literal = st.u_prev.scale(alpha * mu).add_scaled(alpha * beta, &g_next.sub(&g_curr));
    let gap = u.scale(alpha).sub(&literal);
    assert!(gap.sup_distance(&g_curr.scale(alpha * beta * (1.0 - mu))) < 1e-12);
}

proptest! {
    #[test]
    fn momentum_dual_recursion(seed in any::<u64>()) {
        prop_assert!(dual_gap(seed, false) < 1e-10);
    }

    #[test]
    fn optimistic_dual_recursion(seed in any::<u64>()) {
        prop_assert!(dual_gap(seed, true) < 1e-10);
    }

    #[test]
    fn rules_are_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut r = rng(seed);
        let (n_s, n_a) = (r.gen_range(1..4), r.gen_range(1..4));
        let (mu, beta) = (r.gen_range(0.0..0.95), r.gen_range(0.1..2.0));
        let g1 = random_table(&mut r, n_s, n_a, 2.0);
        let g2 = random_table(&mut r, n_s, n_a, 2.0);
        let h1 = random_table(&mut r, n_s, n_a, 2.0);
        let h2 = random_table(&mut r, n_s, n_a, 2.0);
        let mix = |x: &QTable, y: &QTable| x.scale(a).add_scaled(b, y);
        let tol = |u: &QTable| 1e-12 * u.sup_norm().max(1.0);

        // zero carried state: linear in the gradients
        let st = state(n_s, n_a, mu, beta, 1.0);
        let u = vanilla_update(&st, &mix(&g1, &g2)).0;
        prop_assert!(u.sup_distance(&mix(&vanilla_update(&st, &g1).0, &vanilla_update(&st, &g2).0)) <= tol(&u));
        let u = momentum_update(&st, &mix(&g1, &g2)).0;
        prop_assert!(u.sup_distance(&mix(&momentum_update(&st, &g1).0, &momentum_update(&st, &g2).0)) <= tol(&u));
        let u = optimistic_update(&st, &mix(&g1, &g2), &mix(&h1, &h2)).0;
        let parts = mix(&optimistic_update(&st, &g1, &h1).0, &optimistic_update(&st, &g2, &h2).0);
        prop_assert!(u.sup_distance(&parts) <= tol(&u));

        // carried state mixed the same way: still linear
        let mut s1 = st.clone();
        s1.u_prev = random_table(&mut r, n_s, n_a, 2.0);
        let mut s2 = st.clone();
        s2.u_prev = random_table(&mut r, n_s, n_a, 2.0);
        let mut s12 = st.clone();
        s12.u_prev = mix(&s1.u_prev, &s2.u_prev);
        let u = momentum_update(&s12, &mix(&g1, &g2)).0;
        prop_assert!(u.sup_distance(&mix(&momentum_update(&s1, &g1).0, &momentum_update(&s2, &g2).0)) <= tol(&u));
        let u = optimistic_update(&s12, &mix(&g1, &g2), &mix(&h1, &h2)).0;
        let parts = mix(&optimistic_update(&s1, &g1, &h1).0, &optimistic_update(&s2, &g2, &h2).0);
        prop_assert!(u.sup_distance(&parts) <= tol(&u));
    }
}
