//! Auto-regressive update rules for accelerated mirror ascent.
//!
//! Each rule maps gradient estimates to a policy update `u_t`, which moves
//! the logits as `z_{t+1/2} = z_t + alpha u_t`. [`UpdateState`] is a value:
//! every step returns the new state instead of mutating in place.

use crate::bellman::{search_values, QTable, SearchMode};
use crate::error::{Error, Result};
use crate::mdp::{exact_q, performance, TabularMdp};
use crate::policy::{mirror_step, TabularPolicy};

#[derive(Clone, Debug, PartialEq)]
pub struct UpdateState {
    /// `u_{t-1}`
    pub u_prev: QTable,
    /// Previous prediction `g_t`.
    pub g_prev: QTable,
    /// `z_{t-1}`
    pub z_prev: QTable,
    /// `z_{t-1/2}`
    pub z_half_prev: QTable,
    pub mu: f64,
    pub beta: f64,
    pub alpha: f64,
}

impl UpdateState {
    /// Fresh state with `u_{-1} = 0` and `g_0 = 0`.
    pub fn new(n_states: usize, n_actions: usize, mu: f64, beta: f64, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&mu) {
            return Err(Error::InvalidConfig(format!("momentum decay must lie in [0, 1), got {mu}")));
        }
        if !(beta > 0.0) || !(alpha > 0.0) {
            return Err(Error::InvalidConfig("step sizes must be positive".into()));
        }
        let zeros = QTable::zeros(n_states, n_actions);
        Ok(Self {
            u_prev: zeros.clone(),
            g_prev: zeros.clone(),
            z_prev: zeros.clone(),
            z_half_prev: zeros,
            mu,
            beta,
            alpha,
        })
    }

    fn advance(&self, u: &QTable, g: &QTable) -> Self {
        Self {
            u_prev: u.clone(),
            g_prev: g.clone(),
            ..self.clone()
        }
    }

    /// Remember `z_t` and `z_{t+1/2}` for the dual-space recursions.
    pub fn with_logits(&self, z: &QTable, z_half: &QTable) -> Self {
        Self {
            z_prev: z.clone(),
            z_half_prev: z_half.clone(),
            ..self.clone()
        }
    }
}

/// `u_t = g_t` (inexact NPG).
pub fn vanilla_update(state: &UpdateState, g_hat: &QTable) -> (QTable, UpdateState) {
    let u = g_hat.clone();
    let next = state.advance(&u, g_hat);
    (u, next)
}

/// Heavy-ball: `u_t = mu u_{t-1} + beta g_t`.
pub fn momentum_update(state: &UpdateState, g_hat: &QTable) -> (QTable, UpdateState) {
    let u = state.u_prev.scale(state.mu).add_scaled(state.beta, g_hat);
    let next = state.advance(&u, g_hat);
    (u, next)
}

/// Optimism: `u_t = beta g_{t+1} + mu (u_{t-1} - beta g_t)`.
pub fn optimistic_update(state: &UpdateState, g_next: &QTable, g_curr: &QTable) -> (QTable, UpdateState) {
    let correction = state.u_prev.add_scaled(-state.beta, g_curr);
    let u = g_next.scale(state.beta).add_scaled(state.mu, &correction);
    let next = state.advance(&u, g_next);
    (u, next)
}

/// Half-step proposal `pi_{t+1/2} ∝ exp(z_t + alpha u_{t-1})`.
pub fn extragrad_half_step(z: &QTable, u_prev: &QTable, alpha: f64) -> TabularPolicy {
    mirror_step(&TabularPolicy::from_logits(z.clone()), u_prev, alpha)
}

/// Extra-gradient: the optimistic rule with the prediction evaluated at the
/// half-step proposal.
pub fn extragrad_update(state: &UpdateState, g_half: &QTable, g_curr: &QTable) -> (QTable, UpdateState) {
    optimistic_update(state, g_half, g_curr)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AccelRule {
    Vanilla,
    Momentum,
    /// Prediction `g_{t+1} = T^h Q_{pi_t}` from a greedy lookahead.
    Optimistic { horizon: usize },
    /// When `recompute_target` is false the next iterate is the half-step
    /// proposal, as practical implementations do.
    ExtraGradient { recompute_target: bool },
}

/// Exact-gradient accelerated mirror ascent on a known MDP. Gradients are
/// the functional ones, `g_t = Q_{pi_t}`. Returns `J(pi*) - J(pi_t)` for
/// `t = 0..iterations`.
pub fn accelerated_mirror_ascent(
    mdp: &TabularMdp,
    rule: AccelRule,
    mu: f64,
    beta: f64,
    alpha: f64,
    iterations: usize,
    j_star: f64,
) -> Result<Vec<f64>> {
    let (n_s, n_a) = mdp.shape();
    let mut state = UpdateState::new(n_s, n_a, mu, beta, alpha)?;
    let mut policy = TabularPolicy::uniform(n_s, n_a);
    let mut regrets = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        regrets.push(j_star - performance(mdp, &policy)?);
        let z = policy.logits().clone();
        let (next_policy, next_state) = match rule {
            AccelRule::Vanilla => {
                let g = exact_q(mdp, &policy)?;
                let (u, st) = vanilla_update(&state, &g);
                (mirror_step(&policy, &u, alpha), st)
            }
            AccelRule::Momentum => {
                let g = exact_q(mdp, &policy)?;
                let (u, st) = momentum_update(&state, &g);
                (mirror_step(&policy, &u, alpha), st)
            }
            AccelRule::Optimistic { horizon } => {
                let q = exact_q(mdp, &policy)?;
                let g_next = search_values(mdp, &q, horizon, SearchMode::Greedy);
                let g_curr = state.g_prev.clone();
                let (u, st) = optimistic_update(&state, &g_next, &g_curr);
                (mirror_step(&policy, &u, alpha), st)
            }
            AccelRule::ExtraGradient { recompute_target } => {
                let half = extragrad_half_step(&z, &state.u_prev, alpha);
                let g_half = exact_q(mdp, &half)?;
                let g_curr = state.g_prev.clone();
                let (u, st) = extragrad_update(&state, &g_half, &g_curr);
                if recompute_target {
                    (mirror_step(&policy, &u, alpha), st)
                } else {
                    (half, st)
                }
            }
        };
        let z_half = z.add_scaled(alpha, &next_state.u_prev);
        state = next_state.with_logits(&z, &z_half);
        policy = next_policy;
    }
    Ok(regrets)
}
