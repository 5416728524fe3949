//! Tabular policies on the product of action simplices.
//!
//! Two representations: [`TabularPolicy`] keeps softmax logits next to the
//! probabilities (the mirror map is `exp`, its inverse `log`), while
//! [`DirectPolicy`] stores probabilities only and uses Euclidean projection.

use crate::bellman::{expected_values, QTable};
use crate::error::{Error, Result};
use crate::mdp::Rollout;

const SIMPLEX_TOL: f64 = 1e-9;

/// Anything that assigns a distribution over actions to every state.
pub trait Policy: Send + Sync {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn row(&self, s: usize) -> &[f64];

    fn prob(&self, s: usize, a: usize) -> f64 {
        self.row(s)[a]
    }
}

/// Softmax policy with its dual coordinates (logits).
#[derive(Clone, Debug, PartialEq)]
pub struct TabularPolicy {
    logits: QTable,
    probs: QTable,
}

impl TabularPolicy {
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self::from_logits(QTable::zeros(n_states, n_actions))
    }

    pub fn from_logits(logits: QTable) -> Self {
        let mut probs = QTable::zeros(logits.n_states(), logits.n_actions());
        for s in 0..logits.n_states() {
            softmax_into(logits.row(s), probs.row_mut(s));
        }
        Self { logits, probs }
    }

    pub fn logits(&self) -> &QTable {
        &self.logits
    }

    pub fn probs(&self) -> &QTable {
        &self.probs
    }

    pub fn into_logits(self) -> QTable {
        self.logits
    }
}

impl Policy for TabularPolicy {
    fn n_states(&self) -> usize {
        self.probs.n_states()
    }

    fn n_actions(&self) -> usize {
        self.probs.n_actions()
    }

    fn row(&self, s: usize) -> &[f64] {
        self.probs.row(s)
    }
}

/// Policy stored directly as probabilities; zero entries are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectPolicy {
    probs: QTable,
}

impl DirectPolicy {
    pub fn new(probs: QTable) -> Result<Self> {
        for (s, row) in probs.rows().enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::InvalidMdp(format!(
                    "policy row {s} is not a distribution (sum {total})"
                )));
            }
        }
        Ok(Self { probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            probs: QTable::filled(n_states, n_actions, 1.0 / n_actions as f64),
        }
    }

    /// One-hot policy picking `actions[s]` in state `s`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Self {
        Self {
            probs: QTable::from_fn(actions.len(), n_actions, |s, a| {
                if actions[s] == a {
                    1.0
                } else {
                    0.0
                }
            }),
        }
    }

    pub fn from_policy(policy: &(impl Policy + ?Sized)) -> Self {
        Self {
            probs: QTable::from_fn(policy.n_states(), policy.n_actions(), |s, a| policy.prob(s, a)),
        }
    }

    pub fn probs(&self) -> &QTable {
        &self.probs
    }
}

impl Policy for DirectPolicy {
    fn n_states(&self) -> usize {
        self.probs.n_states()
    }

    fn n_actions(&self) -> usize {
        self.probs.n_actions()
    }

    fn row(&self, s: usize) -> &[f64] {
        self.probs.row(s)
    }
}

/// Numerically stable softmax of `z` written into `out`.
pub fn softmax_into(z: &[f64], out: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Closed-form mirror ascent (natural policy gradient) step
/// `pi' ∝ pi exp(alpha U)`, computed in logit space.
///
/// The returned logits have their row maximum subtracted, so they stay
/// bounded; policies are equivalence classes under per-row shifts anyway.
pub fn mirror_step(policy: &TabularPolicy, u: &QTable, alpha: f64) -> TabularPolicy {
    assert!(alpha > 0.0, "mirror step size must be positive");
    let mut z = policy.logits().add_scaled(alpha, u);
    for s in 0..z.n_states() {
        let row = z.row_mut(s);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in row.iter_mut() {
            *v -= max;
        }
    }
    TabularPolicy::from_logits(z)
}

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn euclidean_project(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "cannot project an empty vector");
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        cumulative += x;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            threshold = t;
        }
    }
    v.iter().map(|&x| (x - threshold).max(0.0)).collect()
}

/// Projected gradient ascent for the direct parametrization,
/// `P_Pi(pi + alpha Q)` applied per state.
pub fn projected_ascent_step(policy: &DirectPolicy, q: &QTable, alpha: f64) -> DirectPolicy {
    let mut probs = QTable::zeros(policy.n_states(), policy.n_actions());
    for s in 0..policy.n_states() {
        let moved: Vec<f64> = policy
            .row(s)
            .iter()
            .zip(q.row(s))
            .map(|(p, g)| p + alpha * g)
            .collect();
        probs.row_mut(s).copy_from_slice(&euclidean_project(&moved));
    }
    DirectPolicy { probs }
}

/// First `(state, action)` where `q` is zero while `p` has mass on a state
/// with positive weight.
pub fn kl_support_violation(p: &(impl Policy + ?Sized), q: &(impl Policy + ?Sized), d: &[f64]) -> Option<(usize, usize)> {
    for (s, &w) in d.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        for a in 0..p.n_actions() {
            if p.prob(s, a) > 0.0 && q.prob(s, a) <= 0.0 {
                return Some((s, a));
            }
        }
    }
    None
}

/// `sum_s d(s) sum_a p(a|s) (log p(a|s) - log q(a|s))`.
///
/// Returns `f64::INFINITY` when `q` misses part of the support of `p`; use
/// [`kl_support_violation`] to locate the offending entry.
pub fn weighted_kl(p: &(impl Policy + ?Sized), q: &(impl Policy + ?Sized), d: &[f64]) -> f64 {
    if kl_support_violation(p, q, d).is_some() {
        return f64::INFINITY;
    }
    let mut total = 0.0;
    for (s, &w) in d.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let row: f64 = p
            .row(s)
            .iter()
            .zip(q.row(s))
            .filter(|(&pa, _)| pa > 0.0)
            .map(|(&pa, &qa)| pa * (pa.ln() - qa.ln()))
            .sum();
        total += w * row;
    }
    total
}

/// Soft policy iteration mixing `(1 - alpha) pi_t + alpha pi_plus`.
pub fn soft_pi_mix(pi_t: &DirectPolicy, pi_plus: &DirectPolicy, alpha: f64) -> DirectPolicy {
    assert!(alpha > 0.0 && alpha <= 1.0, "mixing rate must lie in (0, 1]");
    if alpha == 1.0 {
        return pi_plus.clone();
    }
    DirectPolicy {
        probs: pi_t.probs.zip_map(&pi_plus.probs, |a, b| (1.0 - alpha) * a + alpha * b),
    }
}

/// Exact gradient of the softmax objective w.r.t. the logits,
/// `d(s) pi(a|s) (Q(s,a) - sum_b pi(b|s) Q(s,b))`.
pub fn softmax_policy_gradient(policy: &TabularPolicy, q: &QTable, d: &[f64]) -> QTable {
    let baseline = expected_values(policy, q);
    QTable::from_fn(q.n_states(), q.n_actions(), |s, a| {
        d[s] * policy.prob(s, a) * (q[(s, a)] - baseline[s])
    })
}

/// Score-function estimate over a rollout:
/// `1/n sum_i grad log pi(A_i|S_i) (U(S_i,A_i) - E_pi[U(S_i,.)])`.
pub fn sampled_policy_gradient(rollout: &Rollout, policy: &TabularPolicy, u: &QTable) -> QTable {
    let mut grad = QTable::zeros(policy.n_states(), policy.n_actions());
    let n = rollout.len();
    assert!(n > 0, "empty rollout");
    for tr in rollout.transitions() {
        let s = tr.state;
        let pi = policy.row(s);
        let baseline: f64 = pi.iter().zip(u.row(s)).map(|(p, v)| p * v).sum();
        let advantage = u[(s, tr.action)] - baseline;
        let row = grad.row_mut(s);
        for (b, g) in row.iter_mut().enumerate() {
            let indicator = if b == tr.action { 1.0 } else { 0.0 };
            *g += (indicator - pi[b]) * advantage;
        }
    }
    grad.scale(1.0 / n as f64)
}
