//! Randomized self-checks of the library's invariants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::csvio::{read_trace, trace_to_string};
use crate::agents::{meta_gradient, meta_objective, run, Algorithm, MetaBuffer, RunConfig};
use crate::bellman::{lookahead_recursion_check, search_values, t_opt, t_pi, QTable, SearchMode};
use crate::mdp::{exact_q, performance, sample_rollout, value_iteration, visitation, TabularMdp};
use crate::policy::{euclidean_project, mirror_step, softmax_policy_gradient, weighted_kl, Policy, TabularPolicy};
use crate::updates::{momentum_update, optimistic_update, UpdateState};

pub const DEFAULT_AUDIT_SEED: u64 = 20_240_611;

/// Random instances per property.
const TRIALS: usize = 25;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Counterexample or failure message.
    pub detail: String,
}

type Check = fn(&mut ChaCha8Rng) -> Result<(), String>;

const CHECKS: [(&str, Check); 14] = [
    ("mdp: discount 1 rejected", discount_one_rejected),
    ("mdp: exact Q is the T_pi fixed point", exact_q_fixed_point),
    ("mdp: visitation is a distribution", visitation_is_distribution),
    ("mdp: value iteration is optimal", value_iteration_optimal),
    ("bellman: gamma-contraction", contraction),
    ("bellman: monotonicity", monotonicity),
    ("bellman: lookahead recursion", lookahead_recursion),
    ("bellman: eval-mode error bound", eval_error_bound),
    ("policy: mirror step shift invariance", mirror_shift_invariance),
    ("policy: projection onto the simplex", projection_on_simplex),
    ("policy: gradient matches finite differences", gradient_finite_differences),
    ("updates: update-rule fixed points", update_fixed_points),
    ("agents: meta-gradient matches finite differences", meta_gradient_finite_differences),
    ("agents: determinism, regret sign, csv round trip", agent_runs),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

/// Run every property with RNG streams derived from `audit_seed`.
pub fn run_checks(audit_seed: u64) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(audit_seed ^ ((i as u64 + 1) << 32));
            let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| check(&mut rng)))
                .unwrap_or_else(|_| Err("panicked".to_string()));
            CheckResult {
                name,
                passed: outcome.is_ok(),
                detail: outcome.err().unwrap_or_default(),
            }
        })
        .collect()
}

fn small_mdp(rng: &mut ChaCha8Rng) -> TabularMdp {
    let n_s = rng.gen_range(1..=5);
    let n_a = rng.gen_range(1..=4);
    let gamma = rng.gen_range(0.5..0.95);
    TabularMdp::random(n_s, n_a, gamma, rng)
}

fn random_table(n_s: usize, n_a: usize, scale: f64, rng: &mut ChaCha8Rng) -> QTable {
    QTable::from_fn(n_s, n_a, |_, _| rng.gen_range(-scale..scale))
}

fn random_policy(mdp: &TabularMdp, rng: &mut ChaCha8Rng) -> TabularPolicy {
    TabularPolicy::from_logits(random_table(mdp.n_states(), mdp.n_actions(), 2.0, rng))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn discount_one_rejected(_: &mut ChaCha8Rng) -> Result<(), String> {
    let made = TabularMdp::new(vec![vec![vec![1.0]]], vec![vec![1.0]], 1.0, vec![1.0]);
    ensure(made.is_err(), || "gamma = 1 MDP was accepted".into())
}

fn exact_q_fixed_point(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..TRIALS {
        let mdp = small_mdp(rng);
        let pi = random_policy(&mdp, rng);
        let q = exact_q(&mdp, &pi).map_err(|e| e.to_string())?;
        let gap = t_pi(&mdp, &pi, &q).sup_distance(&q);
        ensure(gap <= 1e-10, || format!("||T_pi Q - Q|| = {gap:e} on {:?}", mdp.shape()))?;
    }
    Ok(())
}

fn visitation_is_distribution(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..TRIALS {
        let mdp = small_mdp(rng);
        let pi = random_policy(&mdp, rng);
        let d = visitation(&mdp, &pi).map_err(|e| e.to_string())?;
        let total: f64 = d.iter().sum();
        ensure((total - 1.0).abs() <= 1e-10 && d.iter().all(|x| *x >= 0.0), || {
            format!("visitation {d:?} sums to {total}")
        })?;
    }
    Ok(())
}

fn value_iteration_optimal(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..TRIALS {
        let mdp = small_mdp(rng);
        let vi = value_iteration(&mdp, 1e-10).map_err(|e| e.to_string())?;
        let pi = random_policy(&mdp, rng);
        let j = performance(&mdp, &pi).map_err(|e| e.to_string())?;
        ensure(j <= vi.j_star + 1e-9, || format!("J(pi) = {j} exceeds J* = {}", vi.j_star))?;
        let residual = t_opt(&mdp, &vi.q_star).sup_distance(&vi.q_star);
        ensure(residual <= 1e-9, || format!("Bellman residual {residual:e}"))?;
    }
    Ok(())
}

fn contraction(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..TRIALS {
        let mdp = small_mdp(rng);
        let (n_s, n_a) = mdp.shape();
        let pi = random_policy(&mdp, rng);
        let q1 = random_table(n_s, n_a, 10.0, rng);
        let q2 = random_table(n_s, n_a, 10.0, rng);
        let bound = mdp.discount() * q1.sup_distance(&q2) + 1e-12;
        let d_pi = t_pi(&mdp, &pi, &q1).sup_distance(&t_pi(&mdp, &pi, &q2));
        let d_opt = t_opt(&mdp, &q1).sup_distance(&t_opt(&mdp, &q2));
        ensure(d_pi <= bound && d_opt <= bound, || {
            format!("distances {d_pi}, {d_opt} exceed gamma bound {bound}")
        })?;
    }
    Ok(())
}

fn monotonicity(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..TRIALS {
        let mdp = small_mdp(rng);
        let (n_s, n_a) = mdp.shape();
        let pi = random_policy(&mdp, rng);
        let q1 = random_table(n_s, n_a, 10.0, rng);
        let bump = QTable::from_fn(n_s, n_a, |_, _| rng.gen_range(0.0..1.0));
        let q2 = q1.add_scaled(1.0, &bump);
        for (lo, hi) in [
            (t_pi(&mdp, &pi, &q1), t_pi(&mdp, &pi, &q2)),
            (t_opt(&mdp, &q1), t_opt(&mdp, &q2)),
        ] {
            ensure(lo.as_slice().iter().zip(hi.as_slice()).all(|(a, b)| a <= b), || {
                "Q1 <= Q2 but T Q1 > T Q2 somewhere".into()
            })?;
        }
    }
    Ok(())
}

fn lookahead_recursion(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..TRIALS {
        let mdp = small_mdp(rng);
        let (n_s, n_a) = mdp.shape();
        let pi = random_policy(&mdp, rng);
        let q = random_table(n_s, n_a, 5.0, rng);
        let h = rng.gen_range(1..=8);
        ensure(lookahead_recursion_check(&mdp, &pi, &q, h), || format!("recursion differs at h = {h}"))?;
    }
    Ok(())
}

fn eval_error_bound(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..TRIALS {
        let mdp = small_mdp(rng);
        let (n_s, n_a) = mdp.shape();
        let pi = random_policy(&mdp, rng);
        let q_pi = exact_q(&mdp, &pi).map_err(|e| e.to_string())?;
        let leaf = random_table(n_s, n_a, 5.0, rng);
        let h = rng.gen_range(0..=8);
        let u = search_values(&mdp, &leaf, h, SearchMode::Eval(&pi));
        let err = u.sup_distance(&q_pi);
        let bound = mdp.discount().powi(h as i32) * leaf.sup_distance(&q_pi);
        ensure(bound - err >= -1e-10, || format!("h = {h}: error {err} above bound {bound}"))?;
    }
    Ok(())
}

fn mirror_shift_invariance(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..TRIALS {
        let n_s = rng.gen_range(1..=5);
        let n_a = rng.gen_range(2..=5);
        let pi = TabularPolicy::from_logits(random_table(n_s, n_a, 2.0, rng));
        let u = random_table(n_s, n_a, 3.0, rng);
        let shifts: Vec<f64> = (0..n_s).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let shifted = QTable::from_fn(n_s, n_a, |s, a| u[(s, a)] + shifts[s]);
        let alpha = rng.gen_range(0.1..5.0);
        let a = mirror_step(&pi, &u, alpha);
        let b = mirror_step(&pi, &shifted, alpha);
        let gap = a.probs().sup_distance(b.probs());
        ensure(gap <= 1e-12, || format!("row shift moved the policy by {gap:e}"))?;
    }
    Ok(())
}

fn projection_on_simplex(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..TRIALS {
        let n = rng.gen_range(1..=6);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let p = euclidean_project(&v);
        let total: f64 = p.iter().sum();
        ensure((total - 1.0).abs() <= 1e-12 && p.iter().all(|x| *x >= 0.0), || {
            format!("projection of {v:?} is {p:?}")
        })?;
        let again = euclidean_project(&p);
        let moved = p.iter().zip(&again).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(moved <= 1e-12, || format!("projection is not idempotent on {p:?}"))?;
    }
    Ok(())
}

fn gradient_finite_differences(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let eps = 1e-5;
    for _ in 0..TRIALS {
        let mdp = small_mdp(rng);
        let pi = random_policy(&mdp, rng);
        let q = exact_q(&mdp, &pi).map_err(|e| e.to_string())?;
        let d = visitation(&mdp, &pi).map_err(|e| e.to_string())?;
        // J carries no (1 - gamma) factor, the visitation does
        let scale = 1.0 / (1.0 - mdp.discount());
        let analytic = softmax_policy_gradient(&pi, &q, &d).scale(scale);
        let (n_s, n_a) = mdp.shape();
        for s in 0..n_s {
            for a in 0..n_a {
                let mut plus = pi.logits().clone();
                plus[(s, a)] += eps;
                let mut minus = pi.logits().clone();
                minus[(s, a)] -= eps;
                let jp = performance(&mdp, &TabularPolicy::from_logits(plus)).map_err(|e| e.to_string())?;
                let jm = performance(&mdp, &TabularPolicy::from_logits(minus)).map_err(|e| e.to_string())?;
                let fd = (jp - jm) / (2.0 * eps);
                let g = analytic[(s, a)];
                ensure((g - fd).abs() <= 1e-5 * fd.abs().max(1.0), || {
                    format!("({s},{a}): analytic {g} vs finite difference {fd}")
                })?;
            }
        }
    }
    Ok(())
}

fn update_fixed_points(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..TRIALS {
        let n_a = rng.gen_range(1..=4);
        let mu = rng.gen_range(0.0..0.99);
        let beta = rng.gen_range(0.1..2.0);
        let g = random_table(1, n_a, 3.0, rng);
        // perfect prediction: u_prev = beta g is a fixed point of the optimistic rule
        let mut st = UpdateState::new(1, n_a, mu, beta, 1.0).map_err(|e| e.to_string())?;
        st.u_prev = g.scale(beta);
        let (u_opt, _) = optimistic_update(&st, &g, &g);
        ensure(u_opt == st.u_prev, || {
            format!("optimistic fixed point moved by {:e}", u_opt.sup_distance(&st.u_prev))
        })?;
        // heavy ball at its own steady state beta g / (1 - mu)
        st.u_prev = g.scale(beta / (1.0 - mu));
        let (u_mom, _) = momentum_update(&st, &g);
        let gap = u_mom.sup_distance(&st.u_prev);
        ensure(gap <= 1e-12 * st.u_prev.sup_norm().max(1.0), || {
            format!("momentum steady state moved by {gap:e} (mu = {mu}, beta = {beta})")
        })?;
    }
    Ok(())
}

fn meta_gradient_finite_differences(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let eps = 1e-6;
    for _ in 0..TRIALS {
        let mdp = small_mdp(rng);
        let (n_s, n_a) = mdp.shape();
        let pi = random_policy(&mdp, rng);
        let target = random_policy(&mdp, rng);
        let eta = random_table(n_s, n_a, 1.0, rng);
        let xi = rng.gen_range(0.05..1.0);
        let mut buffer = MetaBuffer::new(1);
        let start = rng.gen_range(0..n_s);
        let len = rng.gen_range(1..=4);
        buffer.push(sample_rollout(&mdp, &pi, start, len, rng), pi.clone());
        let g = meta_gradient(&eta, xi, &target, &buffer).map_err(|e| e.to_string())?;
        for s in 0..n_s {
            for a in 0..n_a {
                let mut plus = eta.clone();
                plus[(s, a)] += eps;
                let mut minus = eta.clone();
                minus[(s, a)] -= eps;
                let fd = (meta_objective(&plus, xi, &target, &buffer) - meta_objective(&minus, xi, &target, &buffer))
                    / (2.0 * eps);
                let tol = 1e-4 * fd.abs().max(g.sup_norm()).max(1e-6);
                ensure((g[(s, a)] - fd).abs() <= tol, || {
                    format!("({s},{a}): analytic {} vs finite difference {fd}", g[(s, a)])
                })?;
            }
        }
    }
    Ok(())
}

fn agent_runs(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let mdp = crate::mdp::default_maze();
    for algorithm in [Algorithm::Pg, Algorithm::Ac, Algorithm::Fws, Algorithm::OpgExpert, Algorithm::OpgPred] {
        let cfg = RunConfig {
            episodes: 2,
            horizon: 2,
            seed: rng.gen(),
            ..RunConfig::new(algorithm)
        };
        let a = run(&mdp, &cfg).map_err(|e| e.to_string())?;
        let b = run(&mdp, &cfg).map_err(|e| e.to_string())?;
        let text = trace_to_string(&a);
        ensure(text == trace_to_string(&b), || format!("{algorithm}: seed {} not reproducible", cfg.seed))?;
        let back = read_trace(text.as_bytes(), "memory").map_err(|e| e.to_string())?;
        ensure(back.steps == a.steps && back.episodes == a.episodes, || {
            format!("{algorithm}: csv round trip changed the trace")
        })?;
        if let Some(r) = a.steps.iter().find(|r| r.regret < -1e-9) {
            return Err(format!("{algorithm}: negative regret {} at step {}", r.regret, r.step));
        }
    }
    let pi = TabularPolicy::uniform(2, 2);
    ensure(weighted_kl(&pi, &pi, &[0.5, 0.5]) == 0.0, || "KL(pi, pi) != 0".into())?;
    ensure(pi.prob(0, 0) == 0.5, || "uniform policy".into())
}
