use serde::Serialize;

use super::{RewardParams, TabularMdp};
use crate::error::{invalid, Result};

/// A nonstationary policy over steps `0..=horizon`.
pub trait Policy {
    fn horizon(&self) -> usize;
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    /// `pi_t(action | state)`.
    fn prob(&self, t: usize, state: usize, action: usize) -> f64;
}

/// Boltzmann policy produced by soft value iteration.
#[derive(Debug, Clone)]
pub struct SoftPolicy {
    probs: Vec<f64>,
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    temperature: f64,
}

impl SoftPolicy {
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Action distribution at `(t, state)`.
    #[inline]
    pub fn action_probs(&self, t: usize, state: usize) -> &[f64] {
        let a = self.num_actions;
        let base = (t * self.num_states + state) * a;
        &self.probs[base..base + a]
    }
}

impl Policy for SoftPolicy {
    fn horizon(&self) -> usize {
        self.horizon
    }
    fn num_states(&self) -> usize {
        self.num_states
    }
    fn num_actions(&self) -> usize {
        self.num_actions
    }
    #[inline]
    fn prob(&self, t: usize, state: usize, action: usize) -> f64 {
        self.probs[(t * self.num_states + state) * self.num_actions + action]
    }
}

/// Soft `Q_t(s, a)` and `V_t(s)` for `t = 0..=horizon`.
#[derive(Debug, Clone)]
pub struct ValueTable {
    q: Vec<f64>,
    v: Vec<f64>,
    num_states: usize,
    num_actions: usize,
}

impl ValueTable {
    #[inline]
    pub fn q(&self, t: usize, state: usize, action: usize) -> f64 {
        self.q[(t * self.num_states + state) * self.num_actions + action]
    }

    #[inline]
    pub fn v(&self, t: usize, state: usize) -> f64 {
        self.v[t * self.num_states + state]
    }

    pub fn horizon(&self) -> usize {
        self.v.len() / self.num_states - 1
    }
}

/// Deterministic nonstationary policy, one action per `(t, state)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeterministicPolicy {
    actions: Vec<u16>,
    horizon: usize,
    num_states: usize,
    num_actions: usize,
}

impl DeterministicPolicy {
    #[inline]
    pub fn action(&self, t: usize, state: usize) -> usize {
        self.actions[t * self.num_states + state] as usize
    }
}

impl Policy for DeterministicPolicy {
    fn horizon(&self) -> usize {
        self.horizon
    }
    fn num_states(&self) -> usize {
        self.num_states
    }
    fn num_actions(&self) -> usize {
        self.num_actions
    }
    #[inline]
    fn prob(&self, t: usize, state: usize, action: usize) -> f64 {
        if self.action(t, state) == action {
            1.0
        } else {
            0.0
        }
    }
}

/// Optimal deterministic policy and its values `V*_t(s)`.
#[derive(Debug, Clone)]
pub struct HardPlan {
    pub policy: DeterministicPolicy,
    values: Vec<f64>,
    num_states: usize,
}

impl HardPlan {
    pub fn value(&self, t: usize, state: usize) -> f64 {
        self.values[t * self.num_states + state]
    }
}

/// Soft (Boltzmann) value iteration for the linear reward `theta`.
///
/// The reward `theta . f(s)` is collected at every step `t = 0..=horizon`
/// and `V_{horizon+1} = 0`. At temperature `tau`,
/// `V_t(s) = tau * ln sum_a exp(Q_t(s,a) / tau)` and
/// `pi_t(a|s) = exp((Q_t(s,a) - V_t(s)) / tau)`.
pub fn soft_value_iteration(
    mdp: &TabularMdp,
    theta: &RewardParams,
    horizon: usize,
    temperature: f64,
) -> Result<(SoftPolicy, ValueTable)> {
    let rewards = mdp.state_rewards(theta)?;
    soft_value_iteration_with_rewards(mdp, &rewards, horizon, temperature)
}

/// Soft value iteration for an arbitrary per-state reward vector.
pub fn soft_value_iteration_with_rewards(
    mdp: &TabularMdp,
    rewards: &[f64],
    horizon: usize,
    temperature: f64,
) -> Result<(SoftPolicy, ValueTable)> {
    check_soft_inputs(mdp, rewards, temperature)?;
    let (policy, v, q) = soft_backup(mdp, rewards, horizon, temperature, true);
    let table = ValueTable {
        q,
        v,
        num_states: mdp.num_states(),
        num_actions: mdp.num_actions(),
    };
    Ok((policy, table))
}

fn check_soft_inputs(mdp: &TabularMdp, rewards: &[f64], temperature: f64) -> Result<()> {
    if temperature <= 0.0 || !temperature.is_finite() {
        return invalid(format!("temperature must be positive, got {temperature}"));
    }
    if rewards.len() != mdp.num_states() {
        return invalid("reward vector length differs from state count");
    }
    if rewards.iter().any(|r| !r.is_finite()) {
        return invalid("non-finite reward");
    }
    Ok(())
}

/// Policy-only variant used inside inference loops; skips storing `Q`.
pub(crate) fn soft_policy(
    mdp: &TabularMdp,
    theta: &RewardParams,
    horizon: usize,
) -> Result<SoftPolicy> {
    let rewards = mdp.state_rewards(theta)?;
    check_soft_inputs(mdp, &rewards, 1.0)?;
    Ok(soft_backup(mdp, &rewards, horizon, 1.0, false).0)
}

/// Same as [`soft_policy`] but reuses the buffers of a previous policy.
pub(crate) fn soft_policy_reusing(
    mdp: &TabularMdp,
    theta: &RewardParams,
    horizon: usize,
    previous: Option<SoftPolicy>,
) -> Result<SoftPolicy> {
    let Some(mut policy) = previous else {
        return soft_policy(mdp, theta, horizon);
    };
    if policy.horizon != horizon
        || policy.num_states != mdp.num_states()
        || policy.num_actions != mdp.num_actions()
    {
        return soft_policy(mdp, theta, horizon);
    }
    let rewards = mdp.state_rewards(theta)?;
    check_soft_inputs(mdp, &rewards, 1.0)?;
    fill_soft(mdp, &rewards, horizon, 1.0, &mut policy.probs, None);
    Ok(policy)
}

fn soft_backup(
    mdp: &TabularMdp,
    rewards: &[f64],
    horizon: usize,
    temperature: f64,
    keep_q: bool,
) -> (SoftPolicy, Vec<f64>, Vec<f64>) {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let layer = ns * na;
    let mut probs = vec![0.0; (horizon + 1) * layer];
    let mut q_all = if keep_q { vec![0.0; (horizon + 1) * layer] } else { Vec::new() };
    let v = fill_soft(
        mdp,
        rewards,
        horizon,
        temperature,
        &mut probs,
        keep_q.then_some(&mut q_all),
    );
    let policy = SoftPolicy {
        probs,
        horizon,
        num_states: ns,
        num_actions: na,
        temperature,
    };
    (policy, v, q_all)
}

/// Backward soft Bellman recursion. Writes the policy into `probs` and
/// returns all `V_t` layers.
fn fill_soft(
    mdp: &TabularMdp,
    rewards: &[f64],
    horizon: usize,
    temperature: f64,
    probs: &mut [f64],
    mut q_all: Option<&mut Vec<f64>>,
) -> Vec<f64> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut v_all = vec![0.0; (horizon + 1) * ns];
    let zeros = vec![0.0; ns];
    let mut q = vec![0.0; na];
    for t in (0..=horizon).rev() {
        let (head, tail) = v_all.split_at_mut((t + 1) * ns);
        let v_next: &[f64] = if t == horizon { &zeros } else { &tail[..ns] };
        let v_now = &mut head[t * ns..];
        for s in 0..ns {
            let mut best = f64::NEG_INFINITY;
            for (a, qa) in q.iter_mut().enumerate() {
                let cont: f64 = mdp.successors(s, a).map(|(n, p)| p * v_next[n]).sum();
                *qa = rewards[s] + cont;
                best = best.max(*qa);
            }
            // Shifted log-sum-exp.
            let z: f64 = q.iter().map(|&qa| ((qa - best) / temperature).exp()).sum();
            let v = best + temperature * z.ln();
            v_now[s] = v;
            let base = (t * ns + s) * na;
            for a in 0..na {
                probs[base + a] = ((q[a] - best) / temperature).exp() / z;
            }
            if let Some(q_all) = q_all.as_deref_mut() {
                q_all[base..base + na].copy_from_slice(&q);
            }
        }
    }
    v_all
}

/// Relative tolerance under which two action values count as tied.
const TIE_TOL: f64 = 1e-10;

/// Finite-horizon value iteration with an argmax policy.
///
/// `reward(t, s)` is collected at every step `t = 0..=horizon`. Ties go to
/// the lowest action index.
pub fn hard_value_iteration<R>(mdp: &TabularMdp, reward: R, horizon: usize) -> Result<HardPlan>
where
    R: Fn(usize, usize) -> f64,
{
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    if na > u16::MAX as usize {
        return invalid("too many actions for a deterministic policy table");
    }
    let mut values = vec![0.0; (horizon + 1) * ns];
    let mut actions = vec![0u16; (horizon + 1) * ns];
    let zeros = vec![0.0; ns];
    let mut q = vec![0.0; na];
    for t in (0..=horizon).rev() {
        let (head, tail) = values.split_at_mut((t + 1) * ns);
        let v_next: &[f64] = if t == horizon { &zeros } else { &tail[..ns] };
        let v_now = &mut head[t * ns..];
        for s in 0..ns {
            let r = reward(t, s);
            if !r.is_finite() {
                return invalid(format!("non-finite reward at step {t}, state {s}"));
            }
            let mut best = f64::NEG_INFINITY;
            for (a, qa) in q.iter_mut().enumerate() {
                *qa = mdp.successors(s, a).map(|(n, p)| p * v_next[n]).sum();
                best = best.max(*qa);
            }
            let tol = TIE_TOL * best.abs().max(1.0);
            let chosen = q.iter().position(|&qa| qa >= best - tol).unwrap_or(0);
            actions[t * ns + s] = chosen as u16;
            v_now[s] = r + q[chosen];
        }
    }
    Ok(HardPlan {
        policy: DeterministicPolicy {
            actions,
            horizon,
            num_states: ns,
            num_actions: na,
        },
        values,
        num_states: ns,
    })
}
