//! Reward inference from a single observed state.
//!
//! The person is modelled as a Boltzmann-rational planner that acted for
//! `T` steps from a state drawn from a prior. Their reward is inferred from
//! the likelihood of the state they left behind, `p(s_0 | theta)`, which
//! marginalizes over every past trajectory. The gradient of its logarithm is
//! computed exactly by a forward dynamic program over the soft policy.

use serde::Serialize;

use crate::error::{invalid, Result, RlspError};
use crate::mceirl::{feature_expectations, FeatureExpectations};
use crate::mdp::{
    planning_soft_policy, step_marginal, Policy, RewardParams, SoftPolicy, StateDistribution,
    TabularMdp,
};

/// Largest number of trajectories [`brute_force_log_likelihood`] enumerates.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

/// Settings of a single-state inference problem.
#[derive(Debug, Clone, Serialize)]
pub struct RlspConfig {
    /// Number of steps the person acted before the observation.
    pub alice_horizon: usize,
    /// Distribution of the person's starting state.
    pub prior_over_start: StateDistribution,
    pub step_size: f64,
    pub max_iterations: usize,
    /// Stop when the sup-norm of the posterior gradient falls below this.
    pub convergence_tol: f64,
    /// Mean of the Gaussian prior on the weights; `None` means zero.
    pub theta_prior_mean: Option<RewardParams>,
    pub theta_prior_std: f64,
}

impl RlspConfig {
    pub fn new(alice_horizon: usize, prior_over_start: StateDistribution) -> Self {
        Self {
            alice_horizon,
            prior_over_start,
            step_size: 0.1,
            max_iterations: 500,
            convergence_tol: 1e-5,
            theta_prior_mean: None,
            theta_prior_std: 1.0,
        }
    }

    pub fn with_prior(mut self, mean: Option<RewardParams>, std: f64) -> Self {
        self.theta_prior_mean = mean;
        self.theta_prior_std = std;
        self
    }

    pub(crate) fn validate(&self, mdp: &TabularMdp) -> Result<()> {
        if self.prior_over_start.len() != mdp.num_states() {
            return invalid("start prior length differs from the state count");
        }
        if self.theta_prior_std <= 0.0 || !self.theta_prior_std.is_finite() {
            return invalid(format!("prior std must be positive, got {}", self.theta_prior_std));
        }
        if self.step_size <= 0.0 || self.step_size.is_nan() {
            return invalid("step size must be positive");
        }
        if self.convergence_tol <= 0.0 || self.convergence_tol.is_nan() {
            return invalid("convergence tolerance must be positive");
        }
        if let Some(mean) = &self.theta_prior_mean {
            if mean.len() != mdp.num_features() {
                return invalid("prior mean has the wrong dimension");
            }
        }
        Ok(())
    }

    pub(crate) fn prior_mean(&self, num_features: usize) -> Vec<f64> {
        self.theta_prior_mean
            .as_ref()
            .map_or_else(|| vec![0.0; num_features], |m| m.as_slice().to_vec())
    }

    /// `ln N(theta; mean, std^2 I)` and its gradient.
    pub(crate) fn log_prior(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let mean = self.prior_mean(theta.len());
        let var = self.theta_prior_std * self.theta_prior_std;
        let norm = -0.5 * theta.len() as f64 * (2.0 * std::f64::consts::PI * var).ln();
        let mut value = norm;
        let grad = theta
            .iter()
            .zip(&mean)
            .map(|(x, m)| {
                value -= (x - m) * (x - m) / (2.0 * var);
                -(x - m) / var
            })
            .collect();
        (value, grad)
    }
}

/// Forward marginals `p(s_t)` and accumulators `G_t(s)` for `t = -T..=0`,
/// stored at indices `0..=T`.
#[derive(Debug, Clone)]
pub struct GradState {
    pub marginals: Vec<StateDistribution>,
    g: Vec<f64>,
    num_states: usize,
    num_features: usize,
}

impl GradState {
    /// `G` at index `t` (0 is the start, `T` the observation).
    pub fn g(&self, t: usize, state: usize) -> &[f64] {
        let f = self.num_features;
        let base = (t * self.num_states + state) * f;
        &self.g[base..base + f]
    }

    pub fn horizon(&self) -> usize {
        self.marginals.len() - 1
    }
}

/// Everything one evaluation at `theta` produces.
struct Evaluation {
    log_likelihood: f64,
    /// `G_T(s_0) / p(s_0)`; `None` when `p(s_0) = 0`.
    gradient: Option<Vec<f64>>,
}

fn check_inputs(mdp: &TabularMdp, theta: &RewardParams, config: &RlspConfig, s0: usize) -> Result<()> {
    config.validate(mdp)?;
    mdp.check_state(s0)?;
    if theta.len() != mdp.num_features() {
        return invalid(format!(
            "reward has {} weights but the MDP has {} features",
            theta.len(),
            mdp.num_features()
        ));
    }
    Ok(())
}

/// Runs the forward recursions. With `keep_layers` every `G_t` is retained,
/// otherwise only the last one.
fn forward_pass(
    mdp: &TabularMdp,
    policy: &SoftPolicy,
    fe: &FeatureExpectations,
    prior: &StateDistribution,
    horizon: usize,
    keep_layers: bool,
) -> (Vec<StateDistribution>, Vec<f64>) {
    let (ns, na, nf) = (mdp.num_states(), mdp.num_actions(), mdp.num_features());
    let layer = ns * nf;
    let mut marginals = Vec::with_capacity(horizon + 1);
    marginals.push(prior.clone());
    let mut g_all = vec![0.0; if keep_layers { (horizon + 1) * layer } else { layer }];
    let mut g_prev = vec![0.0; layer];
    // Per-layer `pi_t(a|s) * (p_t(s) g_t(s,a) + G_t(s))`, indexed by (s, a).
    let mut flow = vec![0.0; ns * na * nf];
    let mut scratch = vec![0.0; nf];
    for t in 0..horizon {
        let p_now = marginals[t].probs();
        for s in 0..ns {
            let g_s = &g_prev[s * nf..(s + 1) * nf];
            let idle = p_now[s] == 0.0 && g_s.iter().all(|&x| x == 0.0);
            let f_s = mdp.features(s);
            let ft_s = fe.get(t, s);
            for a in 0..na {
                let out = &mut flow[(s * na + a) * nf..(s * na + a + 1) * nf];
                let pa = policy.prob(t, s, a);
                if idle || pa == 0.0 {
                    out.iter_mut().for_each(|x| *x = 0.0);
                    continue;
                }
                fe.expected_next(mdp, t, s, a, &mut scratch);
                for k in 0..nf {
                    let step = f_s[k] + scratch[k] - ft_s[k];
                    out[k] = pa * (p_now[s] * step + g_s[k]);
                }
            }
        }
        let mut g_next = vec![0.0; layer];
        for n in 0..ns {
            let out = &mut g_next[n * nf..(n + 1) * nf];
            for (s, a, p) in mdp.predecessors(n) {
                let src = &flow[(s * na + a) * nf..(s * na + a + 1) * nf];
                for (o, v) in out.iter_mut().zip(src) {
                    *o += p * v;
                }
            }
        }
        marginals.push(StateDistribution::from_recursion(step_marginal(mdp, policy, t, p_now)));
        if keep_layers {
            g_all[(t + 1) * layer..(t + 2) * layer].copy_from_slice(&g_next);
        }
        g_prev = g_next;
    }
    if !keep_layers {
        g_all = g_prev;
    }
    (marginals, g_all)
}

fn evaluate(mdp: &TabularMdp, theta: &RewardParams, config: &RlspConfig, s0: usize) -> Result<Evaluation> {
    let horizon = config.alice_horizon;
    let policy = planning_soft_policy(mdp, theta, horizon)?;
    let fe = feature_expectations(mdp, &policy, horizon)?;
    let (marginals, g_last) = forward_pass(mdp, &policy, &fe, &config.prior_over_start, horizon, false);
    let p = marginals[horizon].prob(s0);
    let nf = mdp.num_features();
    let gradient = (p > 0.0).then(|| g_last[s0 * nf..(s0 + 1) * nf].iter().map(|g| g / p).collect());
    Ok(Evaluation {
        log_likelihood: p.ln(),
        gradient,
    })
}

/// Forward marginals and the full `G` table at `theta`.
pub fn grad_state(mdp: &TabularMdp, theta: &RewardParams, config: &RlspConfig) -> Result<GradState> {
    config.validate(mdp)?;
    let horizon = config.alice_horizon;
    let policy = planning_soft_policy(mdp, theta, horizon)?;
    let fe = feature_expectations(mdp, &policy, horizon)?;
    let (marginals, g) = forward_pass(mdp, &policy, &fe, &config.prior_over_start, horizon, true);
    Ok(GradState {
        marginals,
        g,
        num_states: mdp.num_states(),
        num_features: mdp.num_features(),
    })
}

/// `ln p(s_0 | theta)`; `-inf` when the observation cannot be produced.
pub fn log_likelihood_s0(mdp: &TabularMdp, theta: &RewardParams, config: &RlspConfig, s0: usize) -> Result<f64> {
    check_inputs(mdp, theta, config, s0)?;
    Ok(evaluate(mdp, theta, config, s0)?.log_likelihood)
}

/// `ln p(s_0)` under an already computed soft policy.
pub(crate) fn log_likelihood_under(mdp: &TabularMdp, policy: &SoftPolicy, config: &RlspConfig, s0: usize) -> f64 {
    let mut current = config.prior_over_start.probs().to_vec();
    for t in 0..config.alice_horizon {
        current = step_marginal(mdp, policy, t, &current);
    }
    current[s0].ln()
}

pub(crate) fn impossible(config: &RlspConfig, s0: usize) -> RlspError {
    RlspError::ImpossibleEvidence(format!(
        "state {s0} cannot be reached in {} steps from the start prior's support",
        config.alice_horizon
    ))
}

/// `grad_theta ln p(s_0 | theta) = G_0(s_0) / p(s_0)`.
pub fn rlsp_gradient(mdp: &TabularMdp, theta: &RewardParams, config: &RlspConfig, s0: usize) -> Result<Vec<f64>> {
    check_inputs(mdp, theta, config, s0)?;
    evaluate(mdp, theta, config, s0)?
        .gradient
        .ok_or_else(|| impossible(config, s0))
}

/// Fails with [`RlspError::ImpossibleEvidence`] if no trajectory of length
/// `T` from the start prior's support ends in `s0`.
pub fn check_evidence(mdp: &TabularMdp, config: &RlspConfig, s0: usize) -> Result<()> {
    config.validate(mdp)?;
    mdp.check_state(s0)?;
    let mut frontier = vec![false; mdp.num_states()];
    for s in config.prior_over_start.support() {
        frontier[s] = true;
    }
    for _ in 0..config.alice_horizon {
        let mut next = vec![false; mdp.num_states()];
        for s in (0..mdp.num_states()).filter(|&s| frontier[s]) {
            for a in 0..mdp.num_actions() {
                for (n, _) in mdp.successors(s, a) {
                    next[n] = true;
                }
            }
        }
        frontier = next;
    }
    if frontier[s0] {
        Ok(())
    } else {
        Err(impossible(config, s0))
    }
}

/// Direct evaluation of `p(s_0 | theta)` by enumerating every trajectory
/// from the start prior. Test oracle for [`log_likelihood_s0`].
pub fn brute_force_log_likelihood(
    mdp: &TabularMdp,
    theta: &RewardParams,
    config: &RlspConfig,
    s0: usize,
) -> Result<f64> {
    check_inputs(mdp, theta, config, s0)?;
    let horizon = config.alice_horizon;
    let branching = (0..mdp.num_states())
        .map(|s| (0..mdp.num_actions()).map(|a| mdp.successors(s, a).count()).sum::<usize>())
        .max()
        .unwrap_or(1) as u128;
    let starts = config.prior_over_start.support().count() as u128;
    let needed = (0..horizon).fold(starts, |acc, _| acc.saturating_mul(branching));
    if needed > ENUMERATION_BUDGET {
        return Err(RlspError::EnumerationBudget {
            needed,
            budget: ENUMERATION_BUDGET,
        });
    }
    let policy = planning_soft_policy(mdp, theta, horizon)?;

    fn walk(mdp: &TabularMdp, policy: &SoftPolicy, t: usize, horizon: usize, s: usize, s0: usize, mass: f64) -> f64 {
        if t == horizon {
            if s != s0 {
                return 0.0;
            }
            // The final action is summed out.
            let last: f64 = (0..mdp.num_actions()).map(|a| policy.prob(t, s, a)).sum();
            return mass * last;
        }
        let mut total = 0.0;
        for a in 0..mdp.num_actions() {
            let pa = policy.prob(t, s, a);
            for (n, p) in mdp.successors(s, a) {
                total += walk(mdp, policy, t + 1, horizon, n, s0, mass * pa * p);
            }
        }
        total
    }

    let total: f64 = config
        .prior_over_start
        .support()
        .map(|s| walk(mdp, &policy, 0, horizon, s, s0, config.prior_over_start.prob(s)))
        .sum();
    Ok(total.ln())
}

/// MAP estimate of the person's reward.
#[derive(Debug, Clone, Serialize)]
pub struct InferredReward {
    pub theta_alice: RewardParams,
    pub final_log_posterior: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// Log posterior after every accepted step, starting from the initial point.
    pub log_posterior_trace: Vec<f64>,
}

/// Gradient ascent on `ln p(s_0 | theta) + ln N(theta; mean, std^2 I)`
/// starting from the prior mean. A step that lowers the posterior is
/// rejected and the step size halved.
pub fn rlsp_infer(mdp: &TabularMdp, config: &RlspConfig, s0: usize) -> Result<InferredReward> {
    config.validate(mdp)?;
    check_evidence(mdp, config, s0)?;
    let nf = mdp.num_features();
    let mut theta = config.prior_mean(nf);

    let posterior = |theta: &[f64]| -> Result<Option<(f64, Vec<f64>)>> {
        let params = RewardParams::new(theta.to_vec())?;
        let eval = evaluate(mdp, &params, config, s0)?;
        let Some(mut grad) = eval.gradient else {
            return Ok(None);
        };
        let (lp, lp_grad) = config.log_prior(theta);
        grad.iter_mut().zip(lp_grad).for_each(|(g, d)| *g += d);
        Ok(Some((eval.log_likelihood + lp, grad)))
    };

    let (mut value, mut grad) = posterior(&theta)?.ok_or_else(|| impossible(config, s0))?;
    let mut trace = vec![value];
    let mut step = config.step_size;
    let mut iterations = 0;
    let mut converged = sup_norm(&grad) < config.convergence_tol;
    while !converged && iterations < config.max_iterations {
        iterations += 1;
        let candidate: Vec<f64> = theta.iter().zip(&grad).map(|(x, g)| x + step * g).collect();
        match posterior(&candidate)? {
            Some((v, g)) if v >= value => {
                theta = candidate;
                value = v;
                grad = g;
                trace.push(value);
                step = (step * 2.0).min(config.step_size);
                converged = sup_norm(&grad) < config.convergence_tol;
            }
            _ => {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
    }
    Ok(InferredReward {
        theta_alice: RewardParams::new(theta)?,
        final_log_posterior: value,
        iterations_used: iterations,
        converged,
        log_posterior_trace: trace,
    })
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
