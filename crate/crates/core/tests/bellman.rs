mod common;

use accelpo::bellman::{
    expected_values, greedy_policy, opi_eval_step, search_advantage, search_values, t_opt, t_pi, SearchMode,
};
use accelpo::mdp::{default_maze, exact_q, value_iteration};
use accelpo::{QTable, TabularPolicy};
use common::{q_oracle, random_mdp, random_policy, random_table, rng};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn fixed_points_on_the_maze() {
    let mdp = default_maze();
    let vi = value_iteration(&mdp, 1e-10).unwrap();
    assert!(t_opt(&mdp, &vi.q_star).sup_distance(&vi.q_star) < 1e-9);
    let pi = TabularPolicy::uniform(48, 4);
    let q = exact_q(&mdp, &pi).unwrap();
    assert!(t_pi(&mdp, &pi, &q).sup_distance(&q) < 1e-9);
    // greedy search from Q* stays at Q*
    let u = search_values(&mdp, &vi.q_star, 8, SearchMode::Greedy);
    assert!(u.sup_distance(&vi.q_star) < 1e-8);
}

#[test]
fn opi_relaxation() {
    let q = QTable::from_rows(&[vec![1.0, 2.0]]).unwrap();
    let t = QTable::from_rows(&[vec![3.0, 0.0]]).unwrap();
    assert_eq!(opi_eval_step(&q, &t, 1.0), t);
    assert_eq!(opi_eval_step(&q, &t, 0.5).as_slice(), &[2.0, 1.0]);
}

#[test]
fn zero_horizon_search_returns_the_leaf() {
    let mdp = default_maze();
    let leaf = random_table(&mut rng(4), 48, 4, 1.0);
    assert_eq!(search_values(&mdp, &leaf, 0, SearchMode::Greedy), leaf);
}

proptest! {
    #[test]
    fn operators_contract_and_are_monotone(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp(&mut r, 5);
        let (n_s, n_a) = mdp.shape();
        let pi = random_policy(&mut r, n_s, n_a);
        let a = random_table(&mut r, n_s, n_a, 10.0);
        let b = random_table(&mut r, n_s, n_a, 10.0);
        let gamma = mdp.discount();
        prop_assert!(t_opt(&mdp, &a).sup_distance(&t_opt(&mdp, &b)) <= gamma * a.sup_distance(&b) + 1e-12);
        prop_assert!(t_pi(&mdp, &pi, &a).sup_distance(&t_pi(&mdp, &pi, &b)) <= gamma * a.sup_distance(&b) + 1e-12);
        let lo = a.zip_map(&b, f64::min);
        let hi = a.zip_map(&b, f64::max);
        let (tl, th) = (t_opt(&mdp, &lo), t_opt(&mdp, &hi));
        prop_assert!(tl.as_slice().iter().zip(th.as_slice()).all(|(x, y)| x <= y));
        // T dominates T_pi pointwise
        let tp = t_pi(&mdp, &pi, &a);
        prop_assert!(tp.as_slice().iter().zip(t_opt(&mdp, &a).as_slice()).all(|(x, y)| *x <= y + 1e-12));
    }

    #[test]
    fn eval_search_error_bound(seed in any::<u64>(), h in 0usize..10) {
        let mut r = rng(seed);
        let mdp = random_mdp(&mut r, 5);
        let (n_s, n_a) = mdp.shape();
        let pi = random_policy(&mut r, n_s, n_a);
        let leaf = random_table(&mut r, n_s, n_a, 10.0);
        let q_pi = q_oracle(&mdp, &pi);
        let u = search_values(&mdp, &leaf, h, SearchMode::Eval(&pi));
        let bound = mdp.discount().powi(h as i32) * leaf.sup_distance(&q_pi);
        prop_assert!(u.sup_distance(&q_pi) <= bound + 1e-10);
    }

    #[test]
    fn greedy_search_improves_policies(seed in any::<u64>(), h in 1usize..6) {
        // Greedy w.r.t. T^h Q_pi is at least as good as pi.
        let mut r = rng(seed);
        let mdp = random_mdp(&mut r, 5);
        let (n_s, n_a) = mdp.shape();
        let pi = random_policy(&mut r, n_s, n_a);
        let q_pi = q_oracle(&mdp, &pi);
        let u = search_values(&mdp, &q_pi, h, SearchMode::Greedy);
        let improved = q_oracle(&mdp, &greedy_policy(&u));
        let (v_old, v_new) = (expected_values(&pi, &q_pi), expected_values(&greedy_policy(&u), &improved));
        prop_assert!(v_old.iter().zip(&v_new).all(|(a, b)| *a <= b + 1e-9));
    }

    #[test]
    fn advantages_are_centred(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (n_s, n_a) = (r.gen_range(1..6), r.gen_range(1..5));
        let pi = random_policy(&mut r, n_s, n_a);
        let u = random_table(&mut r, n_s, n_a, 5.0);
        let adv = search_advantage(&u, &pi);
        for centred in expected_values(&pi, &adv) {
            prop_assert!(centred.abs() < 1e-12);
        }
    }
}

