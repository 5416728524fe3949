mod common;

use accelpo::mdp::{
    default_maze, exact_q, exact_v, load_maze, performance, sample_rollout, value_iteration, visitation, MazeSpec,
    DEFAULT_MAP,
};
use accelpo::{DirectPolicy, Error, Policy, TabularMdp, TabularPolicy};
use common::{j_oracle, q_oracle, random_mdp, random_policy, rng};
use proptest::prelude::*;

#[test]
fn maze_state_action_oracle() {
    let mdp = default_maze();
    assert_eq!(mdp.shape(), (48, 4));
    let vi = value_iteration(&mdp, 1e-10).unwrap();
    let mut r = rng(11);
    let policies: Vec<Box<dyn Policy>> = vec![
        Box::new(TabularPolicy::uniform(48, 4)),
        Box::new(random_policy(&mut r, 48, 4)),
        Box::new(vi.pi_star.clone()),
    ];
    for pi in &policies {
        let q = exact_q(&mdp, pi.as_ref()).unwrap();
        let oracle = q_oracle(&mdp, pi.as_ref());
        assert!(q.sup_distance(&oracle) < 1e-9, "{}", q.sup_distance(&oracle));
    }
    assert!((vi.j_star - j_oracle(&mdp, &vi.pi_star)).abs() < 1e-9);
}

#[test]
fn closed_form_optimal_values() {
    // Entering the goal pays 1 and restarts at S, so "SG" pays 1 every step
    // and "S.G" every second step.
    let gamma: f64 = 0.99;
    let sg = load_maze("SG").unwrap();
    assert!((value_iteration(&sg, 1e-12).unwrap().j_star - 1.0 / (1.0 - gamma)).abs() < 1e-8);
    let corridor = load_maze("S.G").unwrap();
    let expected = gamma / (1.0 - gamma * gamma);
    assert!((value_iteration(&corridor, 1e-12).unwrap().j_star - expected).abs() < 1e-8);
}

#[test]
fn default_map_geometry() {
    let maze = MazeSpec::parse(DEFAULT_MAP).unwrap();
    assert_eq!((maze.rows(), maze.cols()), (6, 9));
    assert_eq!(maze.n_states(), 48);
    let mdp = maze.to_mdp(0.99).unwrap();
    assert_eq!(mdp.initial_dist()[maze.start_state()], 1.0);
}

#[test]
fn goal_entry_ends_episode_and_restarts() {
    let maze = MazeSpec::parse("S.G").unwrap();
    let mdp = maze.to_mdp(0.9).unwrap();
    let right = 3;
    let before_goal = maze.state_at(0, 1).unwrap();
    assert!(mdp.is_episode_end(before_goal, right));
    assert_eq!(mdp.reward(before_goal, right), 1.0);
    assert_eq!(mdp.successors(before_goal, right), &[(maze.start_state(), 1.0)]);
    let mut r = rng(1);
    let pi = DirectPolicy::deterministic(4, &[right; 3]);
    let rollout = sample_rollout(&mdp, &pi, maze.start_state(), 6, &mut r);
    let ends: Vec<bool> = rollout.transitions().iter().map(|t| t.episode_end).collect();
    assert_eq!(ends, vec![false, true, false, true, false, true]);
}

#[test]
fn malformed_maps_are_rejected() {
    for bad in ["", "..G", "S..", "S.X.G", "SSG", "S#G\n###"] {
        assert!(matches!(load_maze(bad), Err(Error::InvalidMaze(_))), "{bad:?}");
    }
}

#[test]
fn unit_discount_is_rejected() {
    let err = TabularMdp::new(vec![vec![vec![1.0]]], vec![vec![1.0]], 1.0, vec![1.0]);
    assert!(err.is_err());
    assert!(TabularMdp::new(vec![vec![vec![0.5]]], vec![vec![1.0]], 0.9, vec![1.0]).is_err());
}

#[test]
fn rollouts_are_seeded() {
    let mdp = default_maze();
    let pi = TabularPolicy::uniform(48, 4);
    let a = sample_rollout(&mdp, &pi, 0, 50, &mut rng(5));
    let b = sample_rollout(&mdp, &pi, 0, 50, &mut rng(5));
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn exact_q_matches_dense_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp(&mut r, 6);
        let (n_s, n_a) = mdp.shape();
        let pi = random_policy(&mut r, n_s, n_a);
        let q = exact_q(&mdp, &pi).unwrap();
        prop_assert!(q.sup_distance(&q_oracle(&mdp, &pi)) < 1e-9);
        prop_assert!((performance(&mdp, &pi).unwrap() - j_oracle(&mdp, &pi)).abs() < 1e-9);
    }

    #[test]
    fn visitation_is_a_stationary_distribution(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp(&mut r, 6);
        let (n_s, n_a) = mdp.shape();
        let pi = random_policy(&mut r, n_s, n_a);
        let d = visitation(&mdp, &pi).unwrap();
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(d.iter().all(|&x| x >= -1e-15));
        // d = (1 - gamma) rho + gamma P_pi^T d
        let gamma = mdp.discount();
        for s2 in 0..n_s {
            let inflow: f64 = (0..n_s)
                .flat_map(|s| (0..n_a).map(move |a| (s, a)))
                .map(|(s, a)| d[s] * pi.prob(s, a) * mdp.transition(s, a, s2))
                .sum();
            let rhs = (1.0 - gamma) * mdp.initial_dist()[s2] + gamma * inflow;
            prop_assert!((d[s2] - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn value_iteration_dominates_every_policy(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp(&mut r, 5);
        let (n_s, n_a) = mdp.shape();
        let vi = value_iteration(&mdp, 1e-10).unwrap();
        let v_star = exact_v(&mdp, &vi.pi_star).unwrap();
        for _ in 0..5 {
            let v = exact_v(&mdp, &random_policy(&mut r, n_s, n_a)).unwrap();
            prop_assert!(v.iter().zip(&v_star).all(|(a, b)| *a <= b + 1e-8));
        }
    }
}
