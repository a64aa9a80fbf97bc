use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Policy, StateDistribution, TabularMdp};
use crate::error::{invalid, Result};

/// `(s_0, a_0, ..., s_H, a_H)`: `H + 1` states and `H + 1` actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

impl Trajectory {
    pub fn new(states: Vec<usize>, actions: Vec<usize>) -> Result<Self> {
        if states.is_empty() || states.len() != actions.len() {
            return invalid(format!(
                "trajectory needs equal, non-zero numbers of states and actions (got {} and {})",
                states.len(),
                actions.len()
            ));
        }
        Ok(Self { states, actions })
    }

    /// Number of transitions.
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }

    /// True when every transition has positive probability.
    pub fn is_feasible(&self, mdp: &TabularMdp) -> bool {
        self.states.windows(2).zip(&self.actions).all(|(w, &a)| {
            w[0] < mdp.num_states()
                && a < mdp.num_actions()
                && mdp.transition_prob(w[0], a, w[1]) > 0.0
        })
    }

    pub(crate) fn check_shape(&self, mdp: &TabularMdp) -> Result<()> {
        if self.states.is_empty() || self.states.len() != self.actions.len() {
            return invalid("malformed trajectory");
        }
        if let Some(&s) = self.states.iter().find(|&&s| s >= mdp.num_states()) {
            return invalid(format!("trajectory visits unknown state {s}"));
        }
        if let Some(&a) = self.actions.iter().find(|&&a| a >= mdp.num_actions()) {
            return invalid(format!("trajectory uses unknown action {a}"));
        }
        Ok(())
    }
}

fn check_policy<P: Policy + ?Sized>(mdp: &TabularMdp, policy: &P, horizon: usize) -> Result<()> {
    if policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions() {
        return invalid(format!(
            "policy is {}x{} but the MDP is {}x{}",
            policy.num_states(),
            policy.num_actions(),
            mdp.num_states(),
            mdp.num_actions()
        ));
    }
    if policy.horizon() < horizon {
        return invalid(format!(
            "policy covers {} steps, {horizon} requested",
            policy.horizon()
        ));
    }
    Ok(())
}

/// State marginals `p(s_t)` for `t = 0..=horizon` under `policy`.
pub fn forward_marginals<P: Policy + ?Sized>(
    mdp: &TabularMdp,
    policy: &P,
    initial: &StateDistribution,
    horizon: usize,
) -> Result<Vec<StateDistribution>> {
    check_policy(mdp, policy, horizon)?;
    if initial.len() != mdp.num_states() {
        return invalid("initial distribution has the wrong length");
    }
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(initial.clone());
    for t in 0..horizon {
        let next = step_marginal(mdp, policy, t, out[t].probs());
        out.push(StateDistribution::from_recursion(next));
    }
    Ok(out)
}

pub(crate) fn step_marginal<P: Policy + ?Sized>(
    mdp: &TabularMdp,
    policy: &P,
    t: usize,
    current: &[f64],
) -> Vec<f64> {
    (0..mdp.num_states())
        .map(|n| {
            mdp.predecessors(n)
                .map(|(s, a, p)| {
                    let mass = current[s];
                    if mass == 0.0 {
                        0.0
                    } else {
                        p * policy.prob(t, s, a) * mass
                    }
                })
                .sum()
        })
        .collect()
}

/// Expected `sum_t r(s_t)` over `t = 0..=policy.horizon()`.
pub fn expected_return<P: Policy + ?Sized>(
    mdp: &TabularMdp,
    policy: &P,
    initial: &StateDistribution,
    rewards: &[f64],
) -> Result<f64> {
    if rewards.len() != mdp.num_states() {
        return invalid("reward vector length differs from state count");
    }
    let marginals = forward_marginals(mdp, policy, initial, policy.horizon())?;
    Ok(marginals
        .iter()
        .map(|m| m.probs().iter().zip(rewards).map(|(p, r)| p * r).sum::<f64>())
        .sum())
}

/// `ln p(tau)`: initial mass, every transition and every action including
/// the final one. Infeasible trajectories give `-inf`.
pub fn trajectory_log_prob<P: Policy + ?Sized>(
    mdp: &TabularMdp,
    policy: &P,
    tau: &Trajectory,
    initial: &StateDistribution,
) -> Result<f64> {
    tau.check_shape(mdp)?;
    check_policy(mdp, policy, tau.horizon())?;
    if initial.len() != mdp.num_states() {
        return invalid("initial distribution has the wrong length");
    }
    let mut total = initial.prob(tau.states[0]).ln();
    for (t, (&s, &a)) in tau.states.iter().zip(&tau.actions).enumerate() {
        total += policy.prob(t, s, a).ln();
        if let Some(&next) = tau.states.get(t + 1) {
            total += mdp.transition_prob(s, a, next).ln();
        }
    }
    Ok(if total.is_nan() { f64::NEG_INFINITY } else { total })
}

fn draw(rng: &mut impl Rng, weights: impl Iterator<Item = (usize, f64)>) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Seeded rollout of `policy` for `horizon` steps.
pub fn sample_trajectory<P: Policy + ?Sized>(
    mdp: &TabularMdp,
    policy: &P,
    initial: &StateDistribution,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory> {
    check_policy(mdp, policy, horizon)?;
    if initial.len() != mdp.num_states() {
        return invalid("initial distribution has the wrong length");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let na = mdp.num_actions();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon + 1);
    let mut s = draw(&mut rng, initial.probs().iter().copied().enumerate());
    for t in 0..=horizon {
        let a = draw(&mut rng, (0..na).map(|a| (a, policy.prob(t, s, a))));
        states.push(s);
        actions.push(a);
        if t < horizon {
            s = draw(&mut rng, mdp.successors(s, a));
        }
    }
    Ok(Trajectory { states, actions })
}
