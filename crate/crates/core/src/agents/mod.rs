//! Online agents on a tabular MDP and the loop that records their regret.
//!
//! Every agent samples consecutive rollouts of `n` steps from its current
//! softmax policy (rollouts run straight through goal restarts), updates
//! after each rollout, and records `J(pi*) - J(pi_t)` once per environment
//! step and once per completed episode.

mod config;
mod meta;
mod trace;

pub use config::{Algorithm, MetaOptimizer, RunConfig, SearchKind, TargetKind};
pub use meta::{learner_step, make_target, meta_gradient, meta_objective, MetaBuffer, MetaEntry, MetaLearner};
pub use trace::{RegretRecord, RegretTrace};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bellman::{expected_values, search_values, QTable, SearchMode};
use crate::error::{Error, Result};
use crate::mdp::{exact_q, exact_v, sample_initial_state, sample_rollout, value_iteration, Rollout, TabularMdp};
use crate::policy::{sampled_policy_gradient, TabularPolicy};
use crate::updates::{accelerated_mirror_ascent, AccelRule};

/// Tolerance used to compute `J(pi*)` for regret.
pub const OPTIMUM_TOL: f64 = 1e-10;

/// Which critic supplies `Q_target` for the meta-learned agents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetCritic {
    /// `Q_{pi_{t+1}}` from the model.
    Exact,
    /// The TD(0) critic `Q_{w_{t+1}}`.
    TemporalDifference,
}

/// Run `cfg` with an RNG seeded from `cfg.seed`.
pub fn run(mdp: &TabularMdp, cfg: &RunConfig) -> Result<RegretTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    run_with_rng(mdp, cfg, &mut rng)
}

pub fn run_with_rng(mdp: &TabularMdp, cfg: &RunConfig, rng: &mut impl Rng) -> Result<RegretTrace> {
    match cfg.algorithm {
        Algorithm::Pg => run_pg(mdp, cfg, rng),
        Algorithm::Ac => run_ac(mdp, cfg, rng),
        Algorithm::Fws => run_fws(mdp, cfg, rng),
        Algorithm::OpgExpert => run_opg_expert(mdp, cfg, rng),
        Algorithm::OpgPred => run_opg_pred(mdp, cfg, rng),
        Algorithm::Npg | Algorithm::Momentum | Algorithm::Optimistic | Algorithm::Extragrad => {
            run_exact_template(mdp, cfg)
        }
    }
}

fn expect_algorithm(cfg: &RunConfig, allowed: &[Algorithm]) -> Result<()> {
    cfg.validate()?;
    if allowed.contains(&cfg.algorithm) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "algorithm {} cannot run here (expected one of {:?})",
            cfg.algorithm, allowed
        )))
    }
}

trait Learner {
    fn policy(&self) -> &TabularPolicy;

    /// Consume one rollout sampled from `policy()`; `v_pi` is its exact value.
    fn update(&mut self, mdp: &TabularMdp, rollout: &Rollout, v_pi: &[f64]) -> Result<()>;
}

fn drive(
    mdp: &TabularMdp,
    cfg: &RunConfig,
    rng: &mut impl Rng,
    learner: &mut impl Learner,
) -> Result<RegretTrace> {
    let j_star = value_iteration(mdp, OPTIMUM_TOL)?.j_star;
    let mut trace = RegretTrace::new(cfg.algorithm.name(), cfg.seed);
    let mut state = sample_initial_state(mdp, rng);
    loop {
        let v = exact_v(mdp, learner.policy())?;
        let j: f64 = mdp.initial_dist().iter().zip(&v).map(|(r, v)| r * v).sum();
        let regret = j_star - j;
        let rollout = sample_rollout(mdp, learner.policy(), state, cfg.rollout_len, rng);
        for tr in rollout.transitions() {
            trace.push_step(regret);
            if tr.episode_end {
                trace.push_episode(regret);
                if trace.episodes.len() >= cfg.episodes {
                    return Ok(trace);
                }
            }
            if trace.steps.len() as u64 >= cfg.max_steps {
                trace.truncated = true;
                return Ok(trace);
            }
        }
        learner.update(mdp, &rollout, &v)?;
        state = rollout.last_state().expect("non-empty rollout");
    }
}

fn policy_step(policy: &TabularPolicy, rollout: &Rollout, u: &QTable, xi: f64) -> TabularPolicy {
    let g = sampled_policy_gradient(rollout, policy, u);
    TabularPolicy::from_logits(policy.logits().add_scaled(xi, &g))
}

/// Expected-SARSA TD(0) step toward `R + gamma E_pi[boot(S', .)]`, every
/// term computed from the critic before the update.
pub fn td_update(
    mdp: &TabularMdp,
    w: &QTable,
    policy: &TabularPolicy,
    bootstrap: &QTable,
    rollout: &Rollout,
    zeta: f64,
) -> QTable {
    let next_values = expected_values(policy, bootstrap);
    let scale = zeta / rollout.len() as f64;
    let mut out = w.clone();
    for tr in rollout.transitions() {
        let delta = tr.reward + mdp.discount() * next_values[tr.next_state] - w[(tr.state, tr.action)];
        out[(tr.state, tr.action)] += scale * delta;
    }
    out
}

struct ExactCritic {
    policy: TabularPolicy,
    xi: f64,
}

impl Learner for ExactCritic {
    fn policy(&self) -> &TabularPolicy {
        &self.policy
    }

    fn update(&mut self, mdp: &TabularMdp, rollout: &Rollout, v_pi: &[f64]) -> Result<()> {
        let q = mdp.backup(v_pi);
        self.policy = policy_step(&self.policy, rollout, &q, self.xi);
        Ok(())
    }
}

struct SearchCritic {
    policy: TabularPolicy,
    w: QTable,
    xi: f64,
    zeta: f64,
    horizon: usize,
    mode: SearchKind,
}

impl Learner for SearchCritic {
    fn policy(&self) -> &TabularPolicy {
        &self.policy
    }

    fn update(&mut self, mdp: &TabularMdp, rollout: &Rollout, _v_pi: &[f64]) -> Result<()> {
        let mode = match self.mode {
            SearchKind::Eval => SearchMode::Eval(&self.policy),
            SearchKind::Greedy => SearchMode::Greedy,
        };
        let u = search_values(mdp, &self.w, self.horizon, mode);
        let w = td_update(mdp, &self.w, &self.policy, &u, rollout, self.zeta);
        self.policy = policy_step(&self.policy, rollout, &u, self.xi);
        self.w = w;
        Ok(())
    }
}

struct MetaAgent {
    policy: TabularPolicy,
    w: QTable,
    meta: MetaLearner,
    buffer: MetaBuffer,
    critic: TargetCritic,
    kind: TargetKind,
    xi: f64,
    zeta: f64,
    alpha: f64,
}

impl Learner for MetaAgent {
    fn policy(&self) -> &TabularPolicy {
        &self.policy
    }

    fn update(&mut self, mdp: &TabularMdp, rollout: &Rollout, _v_pi: &[f64]) -> Result<()> {
        let next = learner_step(&self.policy, rollout, self.meta.eta(), self.xi);
        if self.critic == TargetCritic::TemporalDifference {
            self.w = td_update(mdp, &self.w, &self.policy, &self.w, rollout, self.zeta);
        }
        self.buffer.push(rollout.clone(), self.policy.clone());
        self.policy = next;
        if self.buffer.is_full() {
            let q_target = match self.critic {
                TargetCritic::Exact => exact_q(mdp, &self.policy)?,
                TargetCritic::TemporalDifference => self.w.clone(),
            };
            let target = make_target(self.kind, &self.policy, &q_target, self.alpha, self.xi, &self.buffer);
            let grad = meta_gradient(self.meta.eta(), self.xi, &target, &self.buffer)?;
            self.meta.descend(&grad);
            self.buffer.clear();
        }
        Ok(())
    }
}

/// Policy gradient with the exact critic `Q_{pi_t}`.
pub fn run_pg(mdp: &TabularMdp, cfg: &RunConfig, rng: &mut impl Rng) -> Result<RegretTrace> {
    expect_algorithm(cfg, &[Algorithm::Pg])?;
    let (n_s, n_a) = mdp.shape();
    let mut learner = ExactCritic {
        policy: TabularPolicy::uniform(n_s, n_a),
        xi: cfg.policy_step,
    };
    drive(mdp, cfg, rng, &mut learner)
}

/// Actor-critic: the policy follows `Q_w`, the critic learns by TD(0).
pub fn run_ac(mdp: &TabularMdp, cfg: &RunConfig, rng: &mut impl Rng) -> Result<RegretTrace> {
    expect_algorithm(cfg, &[Algorithm::Ac])?;
    search_agent(mdp, cfg, 0, SearchKind::Eval, rng)
}

/// Actor-critic whose gradient critic and TD targets come from depth-`h`
/// search through the model, bootstrapping on `Q_w` at the leaves.
pub fn run_fws(mdp: &TabularMdp, cfg: &RunConfig, rng: &mut impl Rng) -> Result<RegretTrace> {
    expect_algorithm(cfg, &[Algorithm::Fws])?;
    search_agent(mdp, cfg, cfg.horizon, cfg.search_mode, rng)
}

fn search_agent(
    mdp: &TabularMdp,
    cfg: &RunConfig,
    horizon: usize,
    mode: SearchKind,
    rng: &mut impl Rng,
) -> Result<RegretTrace> {
    let (n_s, n_a) = mdp.shape();
    let mut learner = SearchCritic {
        policy: TabularPolicy::uniform(n_s, n_a),
        w: QTable::zeros(n_s, n_a),
        xi: cfg.policy_step,
        zeta: cfg.critic_step,
        horizon,
        mode,
    };
    drive(mdp, cfg, rng, &mut learner)
}

/// Meta-learned optimistic policy gradient with targets built from `critic`.
pub fn run_opg(mdp: &TabularMdp, cfg: &RunConfig, critic: TargetCritic, rng: &mut impl Rng) -> Result<RegretTrace> {
    expect_algorithm(cfg, &[Algorithm::OpgExpert, Algorithm::OpgPred])?;
    let (n_s, n_a) = mdp.shape();
    let mut learner = MetaAgent {
        policy: TabularPolicy::uniform(n_s, n_a),
        w: QTable::zeros(n_s, n_a),
        meta: MetaLearner::new(QTable::zeros(n_s, n_a), cfg.meta_optimizer, cfg.meta_step),
        buffer: MetaBuffer::new(cfg.horizon),
        critic,
        kind: cfg.target_kind,
        xi: cfg.policy_step,
        zeta: cfg.critic_step,
        alpha: cfg.target_step,
    };
    drive(mdp, cfg, rng, &mut learner)
}

pub fn run_opg_expert(mdp: &TabularMdp, cfg: &RunConfig, rng: &mut impl Rng) -> Result<RegretTrace> {
    expect_algorithm(cfg, &[Algorithm::OpgExpert])?;
    run_opg(mdp, cfg, TargetCritic::Exact, rng)
}

pub fn run_opg_pred(mdp: &TabularMdp, cfg: &RunConfig, rng: &mut impl Rng) -> Result<RegretTrace> {
    expect_algorithm(cfg, &[Algorithm::OpgPred])?;
    run_opg(mdp, cfg, TargetCritic::TemporalDifference, rng)
}

/// Exact-gradient mirror ascent templates. One iteration counts as one
/// step and one episode.
pub fn run_exact_template(mdp: &TabularMdp, cfg: &RunConfig) -> Result<RegretTrace> {
    expect_algorithm(
        cfg,
        &[Algorithm::Npg, Algorithm::Momentum, Algorithm::Optimistic, Algorithm::Extragrad],
    )?;
    let rule = match cfg.algorithm {
        Algorithm::Npg => AccelRule::Vanilla,
        Algorithm::Momentum => AccelRule::Momentum,
        Algorithm::Optimistic => AccelRule::Optimistic { horizon: cfg.horizon },
        _ => AccelRule::ExtraGradient {
            recompute_target: cfg.recompute_target,
        },
    };
    let j_star = value_iteration(mdp, OPTIMUM_TOL)?.j_star;
    let iterations = cfg.episodes.min(usize::try_from(cfg.max_steps).unwrap_or(usize::MAX));
    let regrets = accelerated_mirror_ascent(
        mdp,
        rule,
        cfg.momentum,
        cfg.update_step,
        cfg.target_step,
        iterations,
        j_star,
    )?;
    let mut trace = RegretTrace::new(cfg.algorithm.name(), cfg.seed);
    for r in regrets {
        trace.push_step(r);
        trace.push_episode(r);
    }
    trace.truncated = iterations < cfg.episodes;
    Ok(trace)
}
