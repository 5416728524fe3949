//! Meta-learned update rules: the learner moves along the score-function
//! update built from a learned table `U_eta`, and `eta` is trained so that
//! the post-update policy lands close to a policy target.

use std::collections::VecDeque;

use super::config::{MetaOptimizer, TargetKind};
use crate::bellman::QTable;
use crate::error::{Error, Result};
use crate::mdp::Rollout;
use crate::optim::AdamState;
use crate::policy::{kl_support_violation, mirror_step, sampled_policy_gradient, weighted_kl, Policy, TabularPolicy};

/// One rollout together with the learner policy it was sampled from.
#[derive(Clone, Debug)]
pub struct MetaEntry {
    pub rollout: Rollout,
    pub policy: TabularPolicy,
}

/// FIFO of the rollouts since the last meta update.
#[derive(Clone, Debug)]
pub struct MetaBuffer {
    capacity: usize,
    entries: VecDeque<MetaEntry>,
}

impl MetaBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "meta buffer needs capacity >= 1");
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    /// Append, dropping the oldest entry when full.
    pub fn push(&mut self, rollout: Rollout, policy: TabularPolicy) {
        if self.is_full() {
            self.entries.pop_front();
        }
        self.entries.push_back(MetaEntry { rollout, policy });
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = &MetaEntry> + '_ {
        self.entries.iter()
    }

    pub fn latest(&self) -> Option<&MetaEntry> {
        self.entries.back()
    }

    /// Every visited state, with multiplicity, oldest first.
    pub fn states(&self) -> Vec<usize> {
        self.entries.iter().flat_map(|e| e.rollout.states()).collect()
    }

    /// Empirical state weights `count(s) / m` over all buffered transitions.
    pub fn state_weights(&self, n_states: usize) -> Vec<f64> {
        let states = self.states();
        let mut w = vec![0.0; n_states];
        for &s in &states {
            w[s] += 1.0;
        }
        let m = states.len().max(1) as f64;
        w.iter_mut().for_each(|x| *x /= m);
        w
    }
}

enum MetaOptimizerState {
    Sgd { lr: f64 },
    Adam(AdamState),
}

/// The table `U_eta` and its optimizer.
pub struct MetaLearner {
    eta: QTable,
    optimizer: MetaOptimizerState,
}

impl MetaLearner {
    pub fn new(eta: QTable, optimizer: MetaOptimizer, lr: f64) -> Self {
        let optimizer = match optimizer {
            MetaOptimizer::Sgd => MetaOptimizerState::Sgd { lr },
            MetaOptimizer::Adam => MetaOptimizerState::Adam(AdamState::new(eta.as_slice().len(), lr)),
        };
        Self { eta, optimizer }
    }

    pub fn eta(&self) -> &QTable {
        &self.eta
    }

    /// One descent step on the meta loss.
    pub fn descend(&mut self, grad: &QTable) {
        let eta = self.eta.as_mut_slice();
        match &mut self.optimizer {
            MetaOptimizerState::Sgd { lr } => {
                for (e, g) in eta.iter_mut().zip(grad.as_slice()) {
                    *e -= *lr * g;
                }
            }
            MetaOptimizerState::Adam(adam) => {
                for (e, d) in eta.iter_mut().zip(adam.step(grad.as_slice())) {
                    *e -= d;
                }
            }
        }
    }
}

/// Learner update `theta + xi u_eta` on one rollout.
pub fn learner_step(policy: &TabularPolicy, rollout: &Rollout, eta: &QTable, xi: f64) -> TabularPolicy {
    let u = sampled_policy_gradient(rollout, policy, eta);
    TabularPolicy::from_logits(policy.logits().add_scaled(xi, &u))
}

/// Meta loss: mean KL from the post-update learner to `target` over the
/// buffered states, where the update replays the latest buffered rollout
/// from its behaviour policy.
pub fn meta_objective(eta: &QTable, xi: f64, target: &(impl Policy + ?Sized), buffer: &MetaBuffer) -> f64 {
    let last = buffer.latest().expect("empty meta buffer");
    let next = learner_step(&last.policy, &last.rollout, eta, xi);
    weighted_kl(&next, target, &buffer.state_weights(eta.n_states()))
}

/// Analytic gradient of [`meta_objective`] with respect to `eta`.
///
/// With `e_i = onehot(A_i) - pi_t(.|S_i)` the update is linear in `eta`,
/// `d theta'(s,b) / d eta(s,c) = xi/n sum_{i: S_i = s} e_i(b) e_i(c)`, and the
/// KL term contributes `w_s p_b (log p_b - log q_b - KL_s)`.
pub fn meta_gradient(eta: &QTable, xi: f64, target: &(impl Policy + ?Sized), buffer: &MetaBuffer) -> Result<QTable> {
    let (n_s, n_a) = eta.shape();
    let last = buffer.latest().expect("empty meta buffer");
    let pi_t = &last.policy;
    let next = learner_step(pi_t, &last.rollout, eta, xi);
    let weights = buffer.state_weights(n_s);
    if let Some((state, action)) = kl_support_violation(&next, target, &weights) {
        return Err(Error::SupportViolation { state, action });
    }

    let mut g_theta = QTable::zeros(n_s, n_a);
    for (s, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let p = next.row(s);
        let q = target.row(s);
        let kl: f64 = p
            .iter()
            .zip(q)
            .filter(|(&pb, _)| pb > 0.0)
            .map(|(&pb, &qb)| pb * (pb.ln() - qb.ln()))
            .sum();
        for b in 0..n_a {
            if p[b] > 0.0 {
                g_theta[(s, b)] = w * p[b] * (p[b].ln() - q[b].ln() - kl);
            }
        }
    }

    let mut grad = QTable::zeros(n_s, n_a);
    let scale = xi / last.rollout.len() as f64;
    let mut e = vec![0.0; n_a];
    for tr in last.rollout.transitions() {
        let s = tr.state;
        for (b, eb) in e.iter_mut().enumerate() {
            *eb = if b == tr.action { 1.0 } else { 0.0 } - pi_t.prob(s, b);
        }
        let proj: f64 = e.iter().zip(g_theta.row(s)).map(|(a, b)| a * b).sum();
        for (c, g) in grad.row_mut(s).iter_mut().enumerate() {
            *g += scale * e[c] * proj;
        }
    }
    Ok(grad)
}

/// Policy target one step ahead of the updated learner `theta_next`.
///
/// Geometric: `pi ∝ pi_{theta_next} exp(alpha Q)`. Parametric: one sampled
/// policy-gradient step per buffered rollout, in order, from `theta_next`.
pub fn make_target(
    kind: TargetKind,
    theta_next: &TabularPolicy,
    q_target: &QTable,
    alpha: f64,
    xi: f64,
    buffer: &MetaBuffer,
) -> TabularPolicy {
    match kind {
        TargetKind::Geometric => mirror_step(theta_next, q_target, alpha),
        TargetKind::Parametric => {
            assert!(!buffer.is_empty(), "parametric targets need rollouts");
            buffer.entries().fold(theta_next.clone(), |theta, entry| {
                learner_step(&theta, &entry.rollout, q_target, xi)
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Transition;

    fn tr(state: usize, action: usize) -> Transition {
        Transition {
            state,
            action,
            reward: 0.0,
            next_state: state,
            episode_end: false,
        }
    }

    fn buffer(policy: &TabularPolicy, steps: &[(usize, usize)]) -> MetaBuffer {
        let mut buf = MetaBuffer::new(1);
        let rollout = Rollout::from_transitions(steps.iter().map(|&(s, a)| tr(s, a)).collect());
        buf.push(rollout, policy.clone());
        buf
    }

    #[test]
    fn zero_policy_step_gives_zero_gradient() {
        let pi = TabularPolicy::from_logits(QTable::from_rows(&[vec![0.3, -0.2, 0.1]]).unwrap());
        let buf = buffer(&pi, &[(0, 1), (0, 2)]);
        let target = TabularPolicy::uniform(1, 3);
        let eta = QTable::from_rows(&[vec![1.0, 0.0, -1.0]]).unwrap();
        let g = meta_gradient(&eta, 0.0, &target, &buf).unwrap();
        assert_eq!(g.sup_norm(), 0.0);
    }

    #[test]
    fn target_at_post_update_policy_is_stationary() {
        let pi = TabularPolicy::uniform(2, 2);
        let buf = buffer(&pi, &[(0, 0), (1, 1)]);
        let eta = QTable::from_rows(&[vec![0.5, -0.5], vec![0.2, 0.0]]).unwrap();
        let target = learner_step(&pi, &buf.latest().unwrap().rollout, &eta, 0.4);
        let g = meta_gradient(&eta, 0.4, &target, &buf).unwrap();
        assert!(g.sup_norm() < 1e-15, "{g:?}");
    }

    #[test]
    fn support_violation_is_reported() {
        let pi = TabularPolicy::uniform(1, 2);
        let buf = buffer(&pi, &[(0, 0)]);
        let target = crate::policy::DirectPolicy::deterministic(2, &[0]);
        let err = meta_gradient(&QTable::zeros(1, 2), 0.1, &target, &buf).unwrap_err();
        assert!(matches!(err, Error::SupportViolation { state: 0, action: 1 }));
        assert!(meta_objective(&QTable::zeros(1, 2), 0.1, &target, &buf).is_infinite());
    }

    #[test]
    fn geometric_target_ignores_row_constants() {
        let pi = TabularPolicy::from_logits(QTable::from_rows(&[vec![0.1, 0.7]]).unwrap());
        let q = QTable::from_rows(&[vec![3.0, 3.0]]).unwrap();
        let t = make_target(TargetKind::Geometric, &pi, &q, 1.0, 0.5, &MetaBuffer::new(1));
        assert!((t.prob(0, 0) - pi.prob(0, 0)).abs() < 1e-15);
    }

    #[test]
    fn geometric_target_closed_form() {
        let pi = TabularPolicy::uniform(1, 2);
        let q = QTable::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let t = make_target(TargetKind::Geometric, &pi, &q, 1.0, 0.5, &MetaBuffer::new(1));
        let e = std::f64::consts::E;
        assert!((t.prob(0, 0) - e / (e + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn parametric_target_with_flat_advantage_is_identity() {
        let pi = TabularPolicy::from_logits(QTable::from_rows(&[vec![0.4, -0.4]]).unwrap());
        let buf = buffer(&pi, &[(0, 0), (0, 1)]);
        let q = QTable::from_rows(&[vec![2.0, 2.0]]).unwrap();
        let t = make_target(TargetKind::Parametric, &pi, &q, 1.0, 0.5, &buf);
        assert_eq!(t, pi);
    }

    #[test]
    fn buffer_is_fifo_with_capacity() {
        let pi = TabularPolicy::uniform(3, 1);
        let mut buf = MetaBuffer::new(2);
        for s in 0..3 {
            buf.push(Rollout::from_transitions(vec![tr(s, 0)]), pi.clone());
        }
        assert_eq!(buf.len(), 2);
        assert_eq!(buf.states(), vec![1, 2]);
        assert_eq!(buf.state_weights(3), vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn sgd_meta_step_descends() {
        let mut ml = MetaLearner::new(QTable::zeros(1, 2), MetaOptimizer::Sgd, 0.5);
        ml.descend(&QTable::from_rows(&[vec![1.0, -2.0]]).unwrap());
        assert_eq!(ml.eta().row(0), &[-0.5, 1.0]);
        let mut ml = MetaLearner::new(QTable::zeros(1, 1), MetaOptimizer::Adam, 0.01);
        ml.descend(&QTable::from_rows(&[vec![3.0]]).unwrap());
        assert!((ml.eta()[(0, 0)] + 0.01).abs() < 1e-8);
    }
}
