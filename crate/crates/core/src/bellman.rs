//! Bellman evaluation and optimality operators, their h-fold powers, and the
//! search values built from them.
//!
//! Everything here works on [`QTable`]s, dense `|S| x |A|` arrays stored row
//! major. Tree search is an exhaustive backup through the exact model, so a
//! depth-`h` search is exactly the `h`-th power of the corresponding operator.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::policy::{DirectPolicy, Policy};

/// Dense action-value table (also used for logits, advantages and
/// meta-parameters, which all share the `[s][a]` shape).
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self::filled(n_states, n_actions, 0.0)
    }

    pub fn filled(n_states: usize, n_actions: usize, value: f64) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![value; n_states * n_actions],
        }
    }

    pub fn from_vec(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_actions {
            return Err(Error::ShapeMismatch {
                expected: (n_states, n_actions),
                actual: (values.len(), 1),
            });
        }
        Ok(Self {
            n_states,
            n_actions,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_actions = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_actions) {
            return Err(Error::ShapeMismatch {
                expected: (rows.len(), n_actions),
                actual: (rows.len(), bad.len()),
            });
        }
        Ok(Self {
            n_states: rows.len(),
            n_actions,
            values: rows.concat(),
        })
    }

    /// Build a table by evaluating `f(s, a)` for every entry.
    pub fn from_fn(n_states: usize, n_actions: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n_states * n_actions);
        for s in 0..n_states {
            for a in 0..n_actions {
                values.push(f(s, a));
            }
        }
        Self {
            n_states,
            n_actions,
            values,
        }
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

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn row_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_actions.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn ensure_shape(&self, expected: (usize, usize)) -> Result<()> {
        if self.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                actual: self.shape(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination; panics on shape mismatch.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.shape(), other.shape(), "QTable shape mismatch");
        Self {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| k * v)
    }

    /// `self + k * other`.
    pub fn add_scaled(&self, k: f64, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + k * b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "QTable shape mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for QTable {
    type Output = f64;

    fn index(&self, (s, a): (usize, usize)) -> &f64 {
        &self.values[s * self.n_actions + a]
    }
}

impl IndexMut<(usize, usize)> for QTable {
    fn index_mut(&mut self, (s, a): (usize, usize)) -> &mut f64 {
        &mut self.values[s * self.n_actions + a]
    }
}

/// `V(s) = sum_a pi(a|s) Q(s, a)`.
pub fn expected_values(policy: &(impl Policy + ?Sized), q: &QTable) -> Vec<f64> {
    (0..q.n_states())
        .map(|s| {
            policy
                .row(s)
                .iter()
                .zip(q.row(s))
                .map(|(p, v)| p * v)
                .sum()
        })
        .collect()
}

/// `V(s) = max_a Q(s, a)`.
pub fn max_values(q: &QTable) -> Vec<f64> {
    q.rows()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = a;
        }
    }
    best
}

pub fn greedy_actions(q: &QTable) -> Vec<usize> {
    q.rows().map(argmax).collect()
}

/// Deterministic policy that is greedy with respect to `q`.
pub fn greedy_policy(q: &QTable) -> DirectPolicy {
    DirectPolicy::deterministic(q.n_actions(), &greedy_actions(q))
}

/// `(T_pi Q)(s,a) = r(s,a) + gamma sum_s' P(s'|s,a) sum_a' pi(a'|s') Q(s',a')`.
pub fn t_pi(mdp: &TabularMdp, policy: &(impl Policy + ?Sized), q: &QTable) -> QTable {
    mdp.backup(&expected_values(policy, q))
}

/// `(T Q)(s,a) = r(s,a) + gamma sum_s' P(s'|s,a) max_a' Q(s',a')`.
pub fn t_opt(mdp: &TabularMdp, q: &QTable) -> QTable {
    mdp.backup(&max_values(q))
}

/// Optimistic policy iteration relaxation `Q - lambda (Q - target)`.
pub fn opi_eval_step(q: &QTable, target: &QTable, lambda: f64) -> QTable {
    assert!(lambda > 0.0 && lambda <= 1.0, "lambda must lie in (0, 1]");
    if lambda == 1.0 {
        return target.clone();
    }
    q.zip_map(target, |q, t| q - lambda * (q - t))
}

/// Backup used inside the search tree.
#[derive(Clone, Copy)]
pub enum SearchMode<'a> {
    /// Bootstrap with a fixed tree policy: `T_pi^h`.
    Eval(&'a dyn Policy),
    /// Greedify inside the tree: `T^h`.
    Greedy,
}

/// Depth-`h` exhaustive search through the model, bootstrapping on `q_leaf`.
pub fn search_values(mdp: &TabularMdp, q_leaf: &QTable, h: usize, mode: SearchMode<'_>) -> QTable {
    let mut u = q_leaf.clone();
    for _ in 0..h {
        u = match mode {
            SearchMode::Eval(pi) => t_pi(mdp, pi, &u),
            SearchMode::Greedy => t_opt(mdp, &u),
        };
    }
    u
}

/// `A(s,a) = U(s,a) - sum_b pi_b(b|s) U(s,b)`.
pub fn search_advantage(u: &QTable, pi_b: &(impl Policy + ?Sized)) -> QTable {
    let baseline = expected_values(pi_b, u);
    QTable::from_fn(u.n_states(), u.n_actions(), |s, a| u[(s, a)] - baseline[s])
}

/// Computes `U^(h)` through the recursion
/// `U^(k) = Q_{t+1} + gamma E_{pi_b}[U^(k-1) - Q_t]`, `Q_{t+1} = T_{pi_b} Q_t`.
pub fn lookahead_by_recursion(mdp: &TabularMdp, pi_b: &(impl Policy + ?Sized), q_t: &QTable, h: usize) -> QTable {
    assert!(h >= 1, "lookahead recursion needs h >= 1");
    let q_next = t_pi(mdp, pi_b, q_t);
    let mut u = q_next.clone();
    for _ in 1..h {
        let diff = u.sub(q_t);
        let correction = mdp.propagate(&expected_values(pi_b, &diff));
        u = q_next.add_scaled(1.0, &correction);
    }
    u
}

/// True iff the lookahead recursion reproduces the direct `h`-fold power
/// of `T_{pi_b}` within `1e-10` (relative to the magnitude of the values).
pub fn lookahead_recursion_check(mdp: &TabularMdp, pi_b: &(impl Policy + ?Sized), q_t: &QTable, h: usize) -> bool {
    let recursive = lookahead_by_recursion(mdp, pi_b, q_t, h);
    let mut direct = q_t.clone();
    for _ in 0..h {
        direct = t_pi(mdp, pi_b, &direct);
    }
    let scale = direct.sup_norm().max(1.0);
    recursive.sup_distance(&direct) <= 1e-10 * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::TabularMdp;
    use crate::policy::TabularPolicy;

    fn chain() -> TabularMdp {
        // two states, two actions: action 0 stays, action 1 swaps; reward on swapping out of state 1
        TabularMdp::new(
            vec![
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            ],
            vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            0.9,
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn zero_reward_constant_q_scales_by_gamma() {
        let mdp = TabularMdp::new(
            vec![vec![vec![0.5, 0.5]], vec![vec![1.0, 0.0]]],
            vec![vec![0.0], vec![0.0]],
            0.7,
            vec![1.0, 0.0],
        )
        .unwrap();
        let pi = TabularPolicy::uniform(2, 1);
        let out = t_pi(&mdp, &pi, &QTable::filled(2, 1, 3.0));
        for v in out.as_slice() {
            assert!((v - 0.7 * 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn opi_step_endpoints() {
        let q = QTable::zeros(1, 1);
        let target = QTable::filled(1, 1, 2.0);
        assert_eq!(opi_eval_step(&q, &target, 1.0), target);
        assert_eq!(opi_eval_step(&q, &target, 0.5)[(0, 0)], 1.0);
    }

    #[test]
    fn search_with_zero_horizon_is_identity() {
        let mdp = chain();
        let q = QTable::from_rows(&[vec![0.3, -1.0], vec![2.0, 0.5]]).unwrap();
        assert_eq!(search_values(&mdp, &q, 0, SearchMode::Greedy), q);
        let pi = TabularPolicy::uniform(2, 2);
        assert_eq!(search_values(&mdp, &q, 0, SearchMode::Eval(&pi)), q);
    }

    #[test]
    fn advantage_centering_examples() {
        let u = QTable::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let a = search_advantage(&u, &TabularPolicy::uniform(1, 2));
        assert_eq!(a.row(0), &[0.5, -0.5]);

        let det = DirectPolicy::deterministic(2, &[0]);
        let a = search_advantage(&u, &det);
        assert_eq!(a[(0, 0)], 0.0);

        let flat = QTable::filled(1, 2, 4.0);
        assert_eq!(search_advantage(&flat, &TabularPolicy::uniform(1, 2)).sup_norm(), 0.0);
    }

    #[test]
    fn lookahead_h1_is_single_backup() {
        let mdp = chain();
        let pi = TabularPolicy::uniform(2, 2);
        let q = QTable::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        assert_eq!(lookahead_by_recursion(&mdp, &pi, &q, 1), t_pi(&mdp, &pi, &q));
        assert!(lookahead_recursion_check(&mdp, &pi, &q, 1));
        assert!(lookahead_recursion_check(&mdp, &pi, &q, 7));
    }

    #[test]
    fn single_action_max_equals_evaluation() {
        let mdp = TabularMdp::new(
            vec![vec![vec![0.25, 0.75]], vec![vec![0.6, 0.4]]],
            vec![vec![1.0], vec![0.5]],
            0.8,
            vec![0.5, 0.5],
        )
        .unwrap();
        let q = QTable::from_rows(&[vec![1.5], vec![-2.0]]).unwrap();
        let pi = TabularPolicy::uniform(2, 1);
        assert_eq!(t_opt(&mdp, &q), t_pi(&mdp, &pi, &q));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }
}
