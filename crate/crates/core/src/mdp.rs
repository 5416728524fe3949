//! Finite discounted MDPs with exact solvers and seeded rollout sampling.

mod maze;

pub use maze::{default_maze, load_maze, Cell, MazeSpec, Move, DEFAULT_DISCOUNT, DEFAULT_MAP};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::bellman::{greedy_actions, max_values, QTable};
use crate::error::{Error, Result};
use crate::policy::{DirectPolicy, Policy};

const PROB_TOL: f64 = 1e-12;

/// Finite MDP `(S, A, P, r, gamma, rho)`.
///
/// Immutable after construction. Transitions are kept both as a dense
/// `[s][a][s']` tensor and as sparse successor lists for the backups.
#[derive(Clone, Debug)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    transitions: Vec<f64>,
    successors: Vec<Vec<(usize, f64)>>,
    rewards: QTable,
    discount: f64,
    initial_dist: Vec<f64>,
    episode_ends: Vec<bool>,
}

impl TabularMdp {
    pub fn new(
        transitions: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<f64>>,
        discount: f64,
        initial_dist: Vec<f64>,
    ) -> Result<Self> {
        let n_states = transitions.len();
        if n_states == 0 {
            return Err(Error::InvalidMdp("no states".into()));
        }
        let n_actions = transitions[0].len();
        if n_actions == 0 {
            return Err(Error::InvalidMdp("no actions".into()));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidMdp(format!(
                "discount must lie in [0, 1), got {discount}"
            )));
        }
        if rewards.len() != n_states || initial_dist.len() != n_states {
            return Err(Error::InvalidMdp("reward/initial shapes do not match the state count".into()));
        }

        let mut dense = Vec::with_capacity(n_states * n_actions * n_states);
        let mut successors = Vec::with_capacity(n_states * n_actions);
        for (s, per_action) in transitions.iter().enumerate() {
            if per_action.len() != n_actions {
                return Err(Error::InvalidMdp(format!("state {s} has {} actions", per_action.len())));
            }
            for (a, row) in per_action.iter().enumerate() {
                check_distribution(row, n_states).map_err(|msg| {
                    Error::InvalidMdp(format!("transition row ({s}, {a}): {msg}"))
                })?;
                dense.extend_from_slice(row);
                successors.push(
                    row.iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(next, &p)| (next, p))
                        .collect(),
                );
            }
        }
        check_distribution(&initial_dist, n_states)
            .map_err(|msg| Error::InvalidMdp(format!("initial distribution: {msg}")))?;
        let rewards = QTable::from_rows(&rewards)?;
        rewards.ensure_shape((n_states, n_actions))?;
        if !rewards.is_finite() {
            return Err(Error::InvalidMdp("rewards must be finite".into()));
        }

        Ok(Self {
            n_states,
            n_actions,
            transitions: dense,
            successors,
            rewards,
            discount,
            initial_dist,
            episode_ends: vec![false; n_states * n_actions],
        })
    }

    /// Mark `(s, a)` pairs whose transition completes an episode. The MDP
    /// itself stays continuing; the flags only drive episode bookkeeping.
    pub fn with_episode_ends(mut self, ends: Vec<bool>) -> Result<Self> {
        if ends.len() != self.n_states * self.n_actions {
            return Err(Error::InvalidMdp("episode-end flags have the wrong length".into()));
        }
        self.episode_ends = ends;
        Ok(self)
    }

    /// Random MDP with dense transition rows and rewards in `[0, 1]`.
    pub fn random(n_states: usize, n_actions: usize, discount: f64, rng: &mut impl Rng) -> Self {
        let mut random_dist = |n: usize| {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect::<Vec<_>>()
        };
        let transitions = (0..n_states)
            .map(|_| (0..n_actions).map(|_| random_dist(n_states)).collect())
            .collect();
        let initial = random_dist(n_states);
        let rewards = (0..n_states)
            .map(|_| (0..n_actions).map(|_| rng.gen::<f64>()).collect())
            .collect();
        Self::new(transitions, rewards, discount, initial).expect("random MDP is valid")
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_states, self.n_actions)
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn rewards(&self) -> &QTable {
        &self.rewards
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[(s, a)]
    }

    pub fn r_max(&self) -> f64 {
        self.rewards.as_slice().iter().copied().fold(0.0, f64::max)
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn transition(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transitions[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn successors(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.successors[s * self.n_actions + a]
    }

    pub fn is_episode_end(&self, s: usize, a: usize) -> bool {
        self.episode_ends[s * self.n_actions + a]
    }

    /// `gamma sum_s' P(s'|s,a) v(s')` for every `(s, a)`.
    pub fn propagate(&self, v: &[f64]) -> QTable {
        QTable::from_fn(self.n_states, self.n_actions, |s, a| {
            self.discount
                * self
                    .successors(s, a)
                    .iter()
                    .map(|&(next, p)| p * v[next])
                    .sum::<f64>()
        })
    }

    /// `r(s,a) + gamma sum_s' P(s'|s,a) v(s')`.
    pub fn backup(&self, v: &[f64]) -> QTable {
        let mut q = self.propagate(v);
        for (out, r) in q.as_mut_slice().iter_mut().zip(self.rewards.as_slice()) {
            *out += r;
        }
        q
    }

    fn policy_matrix(&self, policy: &(impl Policy + ?Sized), transpose: bool) -> DMatrix<f64> {
        let n = self.n_states;
        let mut m = DMatrix::<f64>::identity(n, n);
        for s in 0..n {
            for (a, &pa) in policy.row(s).iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                for &(next, p) in self.successors(s, a) {
                    let entry = self.discount * pa * p;
                    if transpose {
                        m[(next, s)] -= entry;
                    } else {
                        m[(s, next)] -= entry;
                    }
                }
            }
        }
        m
    }

    fn check_policy(&self, policy: &(impl Policy + ?Sized)) {
        assert_eq!(
            (policy.n_states(), policy.n_actions()),
            self.shape(),
            "policy shape does not match the MDP"
        );
    }
}

fn check_distribution(row: &[f64], n: usize) -> std::result::Result<(), String> {
    if row.len() != n {
        return Err(format!("expected {n} entries, got {}", row.len()));
    }
    if let Some(p) = row.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(format!("entry {p} is not a probability"));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(format!("sums to {total}"));
    }
    Ok(())
}

fn solve(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Vec<f64>> {
    matrix
        .lu()
        .solve(&rhs)
        .map(|x| x.iter().copied().collect())
        .ok_or(Error::SingularSystem)
}

/// `V_pi`, from the state-space system `(I - gamma P_pi) V = r_pi`.
pub fn exact_v(mdp: &TabularMdp, policy: &(impl Policy + ?Sized)) -> Result<Vec<f64>> {
    mdp.check_policy(policy);
    let r_pi = DVector::from_fn(mdp.n_states, |s, _| {
        policy
            .row(s)
            .iter()
            .zip(mdp.rewards.row(s))
            .map(|(p, r)| p * r)
            .sum()
    });
    solve(mdp.policy_matrix(policy, false), r_pi)
}

/// `Q_pi`, the fixed point of `T_pi`.
///
/// Solved through `V_pi` and one backup, `Q_pi = r + gamma P V_pi`, which
/// is the same fixed point as the `|S||A|` system at a fraction of the cost.
pub fn exact_q(mdp: &TabularMdp, policy: &(impl Policy + ?Sized)) -> Result<QTable> {
    Ok(mdp.backup(&exact_v(mdp, policy)?))
}

/// Discounted visitation `d_pi = (1 - gamma) rho^T (I - gamma P_pi)^{-1}`.
pub fn visitation(mdp: &TabularMdp, policy: &(impl Policy + ?Sized)) -> Result<Vec<f64>> {
    mdp.check_policy(policy);
    let rhs = DVector::from_fn(mdp.n_states, |s, _| (1.0 - mdp.discount) * mdp.initial_dist[s]);
    let d = solve(mdp.policy_matrix(policy, true), rhs)?;
    Ok(d.into_iter().map(|x| x.max(0.0)).collect())
}

/// `J(pi) = E_{S ~ rho}[V_pi(S)]`, without a `(1 - gamma)` factor.
pub fn performance(mdp: &TabularMdp, policy: &(impl Policy + ?Sized)) -> Result<f64> {
    let v = exact_v(mdp, policy)?;
    Ok(mdp.initial_dist.iter().zip(&v).map(|(r, v)| r * v).sum())
}

#[derive(Clone, Debug)]
pub struct ValueIterationResult {
    pub q_star: QTable,
    pub pi_star: DirectPolicy,
    pub greedy: Vec<usize>,
    pub j_star: f64,
    pub iterations: usize,
}

/// Value iteration until `||T Q - Q||_inf <= tol`, followed by one exact
/// evaluation of the greedy policy, which is kept when its residual is no
/// worse (it lands on `Q*` to solver precision once the greedy policy is
/// optimal).
pub fn value_iteration(mdp: &TabularMdp, tol: f64) -> Result<ValueIterationResult> {
    assert!(tol > 0.0, "tolerance must be positive");
    let mut q = QTable::zeros(mdp.n_states, mdp.n_actions);
    let mut iterations = 0;
    let residual = loop {
        let next = mdp.backup(&max_values(&q));
        let residual = next.sup_distance(&q);
        q = next;
        iterations += 1;
        if residual <= tol {
            break mdp.backup(&max_values(&q)).sup_distance(&q);
        }
    };

    let greedy = greedy_actions(&q);
    let pi_star = DirectPolicy::deterministic(mdp.n_actions, &greedy);
    let polished = exact_q(mdp, &pi_star)?;
    let polished_residual = mdp.backup(&max_values(&polished)).sup_distance(&polished);
    if polished_residual <= residual {
        q = polished;
    }
    let greedy = greedy_actions(&q);
    let pi_star = DirectPolicy::deterministic(mdp.n_actions, &greedy);
    let j_star = performance(mdp, &pi_star)?;
    Ok(ValueIterationResult {
        q_star: q,
        pi_star,
        greedy,
        j_star,
        iterations,
    })
}

/// Number of steps a deterministic policy needs from the most likely start
/// state until a transition flagged as episode end, following the most
/// likely successor each step. `None` if it loops for `max_steps`.
pub fn path_length(mdp: &TabularMdp, actions: &[usize], max_steps: usize) -> Option<usize> {
    let mut s = crate::bellman::argmax(&mdp.initial_dist);
    for step in 1..=max_steps {
        let a = actions[s];
        if mdp.is_episode_end(s, a) {
            return Some(step);
        }
        s = mdp
            .successors(s, a)
            .iter()
            .fold((0, -1.0), |best, &(n, p)| if p > best.1 { (n, p) } else { best })
            .0;
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    /// The transition completed an episode (goal reached, agent restarted).
    pub episode_end: bool,
}

/// Ordered batch of consecutive transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    transitions: Vec<Transition>,
}

impl Rollout {
    pub fn from_transitions(transitions: Vec<Transition>) -> Self {
        Self { transitions }
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        self.transitions.iter().map(|t| t.state)
    }

    pub fn last_state(&self) -> Option<usize> {
        self.transitions.last().map(|t| t.next_state)
    }
}

/// Inverse-CDF draw over ascending indices.
fn sample_index(probs: impl IntoIterator<Item = (usize, f64)>, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs {
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        last_positive = i;
        if u < cumulative {
            return i;
        }
    }
    last_positive
}

/// Sample `n` consecutive transitions under `policy` starting at `start`.
/// Episode ends do not truncate the rollout.
pub fn sample_rollout(
    mdp: &TabularMdp,
    policy: &(impl Policy + ?Sized),
    start: usize,
    n: usize,
    rng: &mut impl Rng,
) -> Rollout {
    assert!(n >= 1, "rollout length must be positive");
    let mut transitions = Vec::with_capacity(n);
    let mut s = start;
    for _ in 0..n {
        let a = sample_index(policy.row(s).iter().copied().enumerate(), rng);
        let next = sample_index(mdp.successors(s, a).iter().copied(), rng);
        transitions.push(Transition {
            state: s,
            action: a,
            reward: mdp.reward(s, a),
            next_state: next,
            episode_end: mdp.is_episode_end(s, a),
        });
        s = next;
    }
    Rollout { transitions }
}

/// Draw a start state from `rho`.
pub fn sample_initial_state(mdp: &TabularMdp, rng: &mut impl Rng) -> usize {
    sample_index(mdp.initial_dist.iter().copied().enumerate(), rng)
}
