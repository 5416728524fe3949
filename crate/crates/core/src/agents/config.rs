use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Policy gradient with the exact critic `Q_{pi_t}`.
    Pg,
    /// Actor-critic with an expected-SARSA TD(0) critic.
    Ac,
    /// Actor-critic whose gradient and critic targets use depth-`h` search values.
    Fws,
    /// Optimistic policy gradient, meta-learned from exact post-update values.
    OpgExpert,
    /// Optimistic policy gradient, meta-learned from a TD critic.
    OpgPred,
    /// Exact-gradient mirror ascent (no acceleration).
    Npg,
    /// Exact-gradient heavy-ball mirror ascent.
    Momentum,
    /// Exact-gradient optimistic mirror ascent with a greedy lookahead prediction.
    Optimistic,
    /// Exact-gradient extra-gradient mirror ascent.
    Extragrad,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::Pg,
        Algorithm::Ac,
        Algorithm::Fws,
        Algorithm::OpgExpert,
        Algorithm::OpgPred,
        Algorithm::Npg,
        Algorithm::Momentum,
        Algorithm::Optimistic,
        Algorithm::Extragrad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pg => "pg",
            Algorithm::Ac => "ac",
            Algorithm::Fws => "fws",
            Algorithm::OpgExpert => "opg_expert",
            Algorithm::OpgPred => "opg_pred",
            Algorithm::Npg => "npg",
            Algorithm::Momentum => "momentum",
            Algorithm::Optimistic => "optimistic",
            Algorithm::Extragrad => "extragrad",
        }
    }

    /// Runs on a known model with exact gradients instead of sampled rollouts.
    pub fn is_exact_template(self) -> bool {
        matches!(
            self,
            Algorithm::Npg | Algorithm::Momentum | Algorithm::Optimistic | Algorithm::Extragrad
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchKind {
    /// `U = T_{pi_t}^h Q_w`
    Eval,
    /// `U = T^h Q_w`
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Parametric,
    Geometric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaOptimizer {
    Sgd,
    Adam,
}

/// Full configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    /// Policy step size (xi).
    pub policy_step: f64,
    /// Critic step size (zeta).
    pub critic_step: f64,
    /// Meta-learner step size (nu).
    pub meta_step: f64,
    /// Mirror-ascent step size used by geometric targets and the exact templates (alpha).
    pub target_step: f64,
    /// Lookahead horizon, or the number of rollouts between meta updates.
    pub horizon: usize,
    pub rollout_len: usize,
    /// Episode budget (iterations for the exact templates).
    pub episodes: usize,
    pub seed: u64,
    pub search_mode: SearchKind,
    pub target_kind: TargetKind,
    pub meta_optimizer: MetaOptimizer,
    /// Extra-gradient: recompute the target from the full update instead of
    /// continuing from the half-step proposal.
    pub recompute_target: bool,
    /// Momentum decay for the exact templates (mu).
    pub momentum: f64,
    /// Update step size for the exact templates (beta).
    pub update_step: f64,
    /// Safety cap on environment steps per run.
    pub max_steps: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Pg,
            policy_step: 0.5,
            critic_step: 0.1,
            meta_step: 0.01,
            target_step: 1.0,
            horizon: 1,
            rollout_len: 2,
            episodes: 500,
            seed: 0,
            search_mode: SearchKind::Eval,
            target_kind: TargetKind::Geometric,
            meta_optimizer: MetaOptimizer::Adam,
            recompute_target: false,
            momentum: 0.9,
            update_step: 1.0,
            max_steps: 2_000_000,
        }
    }
}

impl RunConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    /// Forward-search settings (policy step 0.5, rollouts of 2).
    pub fn forward_search(mode: SearchKind, critic_step: f64, horizon: usize) -> Self {
        Self {
            algorithm: Algorithm::Fws,
            policy_step: 0.5,
            critic_step,
            horizon,
            search_mode: mode,
            ..Self::default()
        }
    }

    /// Meta-gradient settings with exact post-update targets (policy step 0.1).
    pub fn expert_targets(kind: TargetKind, meta_step: f64) -> Self {
        Self {
            algorithm: Algorithm::OpgExpert,
            policy_step: 0.1,
            meta_step,
            target_step: 1.0,
            horizon: 1,
            target_kind: kind,
            ..Self::default()
        }
    }

    /// Meta-gradient settings with TD-critic targets (policy step 0.5).
    pub fn predicted_targets(kind: TargetKind, meta_step: f64, critic_step: f64) -> Self {
        Self {
            algorithm: Algorithm::OpgPred,
            policy_step: 0.5,
            critic_step,
            meta_step,
            target_step: 1.0,
            horizon: 1,
            target_kind: kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        if self.rollout_len == 0 {
            return Err(Error::InvalidConfig("rollout_len must be at least 1".into()));
        }
        if self.episodes == 0 {
            return Err(Error::InvalidConfig("episodes must be at least 1".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be at least 1".into()));
        }
        match self.algorithm {
            Algorithm::Pg => positive("policy_step", self.policy_step)?,
            Algorithm::Ac | Algorithm::Fws => {
                positive("policy_step", self.policy_step)?;
                if !(self.critic_step >= 0.0) {
                    return Err(Error::InvalidConfig("critic_step must be non-negative".into()));
                }
            }
            Algorithm::OpgExpert | Algorithm::OpgPred => {
                positive("policy_step", self.policy_step)?;
                positive("meta_step", self.meta_step)?;
                positive("target_step", self.target_step)?;
                if self.horizon == 0 {
                    return Err(Error::InvalidConfig(
                        "meta-gradient agents need horizon >= 1".into(),
                    ));
                }
                if self.algorithm == Algorithm::OpgPred && !(self.critic_step >= 0.0) {
                    return Err(Error::InvalidConfig("critic_step must be non-negative".into()));
                }
            }
            Algorithm::Npg | Algorithm::Momentum | Algorithm::Optimistic | Algorithm::Extragrad => {
                positive("target_step", self.target_step)?;
                positive("update_step", self.update_step)?;
                if !(0.0..1.0).contains(&self.momentum) {
                    return Err(Error::InvalidConfig("momentum must lie in [0, 1)".into()));
                }
            }
        }
        Ok(())
    }
}
