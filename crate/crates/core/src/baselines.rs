//! Comparison planners: the specified reward alone, a feature-deviation
//! penalty and a relative-reachability penalty against doing nothing.

use crate::error::{invalid, Result, RlspError};
use crate::gridworlds::{Action, ScenarioBundle};
use crate::mdp::{dot, hard_value_iteration, HardPlan, RewardParams, TabularMdp};

/// Hard-planning on an arbitrary linear reward over the robot horizon.
pub fn plan_reward(scenario: &ScenarioBundle, theta: &RewardParams) -> Result<HardPlan> {
    let rewards = scenario.env.mdp.state_rewards(theta)?;
    hard_value_iteration(&scenario.env.mdp, |_, s| rewards[s], scenario.robot_horizon)
}

/// Acts as if the specified reward were the true one.
pub fn plan_spec(scenario: &ScenarioBundle) -> Result<HardPlan> {
    plan_reward(scenario, &scenario.theta_spec)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return invalid(format!("penalty weight must be finite and non-negative, got {lambda}"));
    }
    Ok(())
}

/// `theta_spec . f(s) - lambda * |f(s) - f(s_0)|_1`.
pub fn plan_deviation(scenario: &ScenarioBundle, lambda: f64) -> Result<HardPlan> {
    check_lambda(lambda)?;
    let mdp = &scenario.env.mdp;
    let f0 = mdp.features(scenario.s0).to_vec();
    let theta = scenario.theta_spec.as_slice();
    let rewards: Vec<f64> = (0..mdp.num_states())
        .map(|s| {
            let f = mdp.features(s);
            let dev: f64 = f.iter().zip(&f0).map(|(a, b)| (a - b).abs()).sum();
            dot(theta, f) - lambda * dev
        })
        .collect();
    hard_value_iteration(mdp, |_, s| rewards[s], scenario.robot_horizon)
}

/// `reach[s]` is the set of states reachable from `s` with positive
/// probability in at most `horizon_cap` steps, stored as a bitset row.
#[derive(Debug, Clone)]
pub struct ReachabilityCache {
    bits: Vec<u64>,
    words: usize,
    num_states: usize,
    horizon_cap: usize,
}

impl ReachabilityCache {
    pub fn reach(&self, from: usize, to: usize) -> bool {
        self.row(from)[to / 64] & (1 << (to % 64)) != 0
    }

    fn row(&self, s: usize) -> &[u64] {
        &self.bits[s * self.words..(s + 1) * self.words]
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn horizon_cap(&self) -> usize {
        self.horizon_cap
    }

    pub fn reachable_count(&self, s: usize) -> usize {
        self.row(s).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `d(s, b)`: fraction of all states reachable from `b` but not from `s`.
    pub fn penalty(&self, s: usize, baseline: usize) -> f64 {
        let lost: u32 = self
            .row(baseline)
            .iter()
            .zip(self.row(s))
            .map(|(b, r)| (b & !r).count_ones())
            .sum();
        lost as f64 / self.num_states as f64
    }
}

/// Breadth-first closure over feasible edges, `horizon_cap` rounds at most.
pub fn reachability_coverage(mdp: &TabularMdp, horizon_cap: usize) -> ReachabilityCache {
    let n = mdp.num_states();
    let words = n.div_ceil(64);
    let mut bits = vec![0u64; n * words];
    for s in 0..n {
        bits[s * words + s / 64] |= 1 << (s % 64);
    }
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            let mut out: Vec<usize> = (0..mdp.num_actions())
                .flat_map(|a| mdp.successors(s, a).filter(|&(_, p)| p > 0.0).map(|(m, _)| m))
                .filter(|&m| m != s)
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect();
    let mut next = bits.clone();
    for _ in 0..horizon_cap {
        let mut changed = false;
        for s in 0..n {
            let row = &mut next[s * words..(s + 1) * words];
            for &m in &succ[s] {
                for (w, v) in row.iter_mut().zip(&bits[m * words..(m + 1) * words]) {
                    *w |= v;
                }
            }
            changed |= row != &bits[s * words..(s + 1) * words];
        }
        std::mem::swap(&mut bits, &mut next);
        if !changed {
            break;
        }
        next.copy_from_slice(&bits);
    }
    ReachabilityCache {
        bits,
        words,
        num_states: n,
        horizon_cap,
    }
}

/// States of the do-nothing rollout from `s0`, one per step `0..=horizon`.
pub fn noop_baseline(mdp: &TabularMdp, noop: usize, s0: usize, horizon: usize) -> Result<Vec<usize>> {
    let mut states = vec![s0];
    let mut s = s0;
    for t in 0..horizon {
        let mut succ = mdp.successors(s, noop);
        let (next, p) = succ.next().expect("rows are non-empty");
        if succ.next().is_some() || p < 1.0 {
            return Err(RlspError::Refused(format!(
                "the no-op rollout is stochastic at step {t}; relative reachability needs a deterministic baseline"
            )));
        }
        states.push(next);
        s = next;
    }
    Ok(states)
}

/// Per-step reachability penalties `d(s, b_t)` for a scenario, reusable
/// across penalty weights.
#[derive(Debug, Clone)]
pub struct ReachabilityPenalty {
    pub baseline: Vec<usize>,
    /// `penalty[t][s]`.
    pub penalty: Vec<Vec<f64>>,
}

impl ReachabilityPenalty {
    pub fn new(scenario: &ScenarioBundle) -> Result<Self> {
        let mdp = &scenario.env.mdp;
        let Some(noop) = scenario.env.action_index(Action::Noop) else {
            return invalid("environment has no no-op action");
        };
        let baseline = noop_baseline(mdp, noop, scenario.s0, scenario.robot_horizon)?;
        let cache = reachability_coverage(mdp, scenario.reachability_cap());
        let mut penalty: Vec<Vec<f64>> = Vec::with_capacity(baseline.len());
        for (t, &b) in baseline.iter().enumerate() {
            if let Some(prev) = baseline[..t].iter().position(|&x| x == b) {
                let row = penalty[prev].clone();
                penalty.push(row);
            } else {
                penalty.push((0..mdp.num_states()).map(|s| cache.penalty(s, b)).collect());
            }
        }
        Ok(Self { baseline, penalty })
    }

    pub fn plan(&self, scenario: &ScenarioBundle, lambda: f64) -> Result<HardPlan> {
        check_lambda(lambda)?;
        let rewards = scenario.env.mdp.state_rewards(&scenario.theta_spec)?;
        hard_value_iteration(
            &scenario.env.mdp,
            |t, s| rewards[s] - lambda * self.penalty[t][s],
            scenario.robot_horizon,
        )
    }
}

/// `theta_spec . f(s) - lambda * d(s, b_t)` where `b_t` is the no-op rollout.
pub fn plan_reachability(scenario: &ScenarioBundle, lambda: f64) -> Result<HardPlan> {
    check_lambda(lambda)?;
    ReachabilityPenalty::new(scenario)?.plan(scenario, lambda)
}
