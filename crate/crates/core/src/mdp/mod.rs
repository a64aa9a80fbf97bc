//! Finite-horizon tabular MDPs with linear state rewards.
//!
//! Transitions are stored sparsely (CSR over `(state, action)` pairs) together
//! with a predecessor index, so both backward (value) and forward (marginal)
//! passes are gathers over short lists.

mod planning;
mod rollout;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use planning::{
    hard_value_iteration, soft_value_iteration, soft_value_iteration_with_rewards, DeterministicPolicy,
    HardPlan, Policy, SoftPolicy, ValueTable,
};
pub use rollout::{
    expected_return, forward_marginals, sample_trajectory, trajectory_log_prob, Trajectory,
};
pub(crate) use planning::{soft_policy as planning_soft_policy, soft_policy_reusing};
pub(crate) use rollout::step_marginal;

/// Tolerance on row sums of the transition tensor.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// A tabular MDP without reward: states, actions, dynamics and state features.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    num_features: usize,
    offsets: Vec<usize>,
    next: Vec<u32>,
    prob: Vec<f64>,
    pred_offsets: Vec<usize>,
    pred_pair: Vec<u32>,
    pred_prob: Vec<f64>,
    features: Vec<f64>,
    state_names: Option<Vec<String>>,
}

impl TabularMdp {
    /// Builds an MDP from sparse rows.
    ///
    /// `rows[s * num_actions + a]` lists `(next_state, probability)` pairs;
    /// duplicates are merged and zero entries dropped.
    pub fn from_sparse(
        num_actions: usize,
        rows: Vec<Vec<(usize, f64)>>,
        features: Vec<Vec<f64>>,
        state_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let num_states = features.len();
        if num_states == 0 {
            return invalid("an MDP needs at least one state");
        }
        if num_actions == 0 {
            return invalid("an MDP needs at least one action");
        }
        if rows.len() != num_states * num_actions {
            return invalid(format!(
                "expected {} transition rows, got {}",
                num_states * num_actions,
                rows.len()
            ));
        }
        if num_states > u32::MAX as usize {
            return invalid("too many states");
        }
        let num_features = features[0].len();
        let mut flat_features = Vec::with_capacity(num_states * num_features);
        for (s, f) in features.iter().enumerate() {
            if f.len() != num_features {
                return invalid(format!(
                    "state {s} has {} features, expected {num_features}",
                    f.len()
                ));
            }
            if f.iter().any(|x| !x.is_finite()) {
                return invalid(format!("state {s} has a non-finite feature"));
            }
            flat_features.extend_from_slice(f);
        }

        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut next = Vec::new();
        let mut prob = Vec::new();
        offsets.push(0);
        for (pair, mut row) in rows.into_iter().enumerate() {
            let (s, a) = (pair / num_actions, pair % num_actions);
            row.sort_by_key(|&(n, _)| n);
            let mut total = 0.0;
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (n, p) in row {
                if n >= num_states {
                    return invalid(format!("transition ({s},{a}) targets unknown state {n}"));
                }
                if p < 0.0 || !p.is_finite() {
                    return invalid(format!("transition ({s},{a})->{n} has probability {p}"));
                }
                total += p;
                match merged.last_mut() {
                    Some(last) if last.0 == n => last.1 += p,
                    _ => merged.push((n, p)),
                }
            }
            if (total - 1.0).abs() > STOCHASTIC_TOL {
                return invalid(format!(
                    "transition row ({s},{a}) sums to {total}, not 1"
                ));
            }
            for (n, p) in merged {
                if p > 0.0 {
                    next.push(n as u32);
                    prob.push(p);
                }
            }
            offsets.push(next.len());
        }

        let (pred_offsets, pred_pair, pred_prob) =
            predecessor_index(num_states, &offsets, &next, &prob);

        Ok(Self {
            num_states,
            num_actions,
            num_features,
            offsets,
            next,
            prob,
            pred_offsets,
            pred_pair,
            pred_prob,
            features: flat_features,
            state_names,
        })
    }

    /// Builds an MDP from a dense `T[s][a][s']` tensor.
    pub fn from_dense(
        transitions: &[Vec<Vec<f64>>],
        features: Vec<Vec<f64>>,
        state_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let num_states = features.len();
        if transitions.len() != num_states {
            return invalid("transition tensor and feature matrix disagree on state count");
        }
        let num_actions = transitions.first().map_or(0, |t| t.len());
        let mut rows = Vec::with_capacity(num_states * num_actions);
        for (s, per_action) in transitions.iter().enumerate() {
            if per_action.len() != num_actions {
                return invalid(format!("state {s} has {} actions", per_action.len()));
            }
            for dense in per_action {
                if dense.len() != num_states {
                    return invalid(format!("a row of state {s} has the wrong length"));
                }
                rows.push(
                    dense
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p != 0.0)
                        .map(|(n, &p)| (n, p))
                        .collect(),
                );
            }
        }
        Self::from_sparse(num_actions, rows, features, state_names)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn state_names(&self) -> Option<&[String]> {
        self.state_names.as_deref()
    }

    /// Feature vector of a state.
    #[inline]
    pub fn features(&self, state: usize) -> &[f64] {
        let f = self.num_features;
        &self.features[state * f..(state + 1) * f]
    }

    /// `(next_state, probability)` pairs with positive probability.
    #[inline]
    pub fn successors(&self, state: usize, action: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let pair = state * self.num_actions + action;
        let range = self.offsets[pair]..self.offsets[pair + 1];
        self.next[range.clone()]
            .iter()
            .zip(&self.prob[range])
            .map(|(&n, &p)| (n as usize, p))
    }

    /// `(state, action, probability)` triples that lead into `state`.
    #[inline]
    pub fn predecessors(&self, state: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let range = self.pred_offsets[state]..self.pred_offsets[state + 1];
        let a = self.num_actions;
        self.pred_pair[range.clone()]
            .iter()
            .zip(&self.pred_prob[range])
            .map(move |(&pair, &p)| (pair as usize / a, pair as usize % a, p))
    }

    pub fn transition_prob(&self, state: usize, action: usize, next: usize) -> f64 {
        self.successors(state, action)
            .find(|&(n, _)| n == next)
            .map_or(0.0, |(_, p)| p)
    }

    /// True when every `(state, action)` has exactly one successor.
    pub fn is_deterministic(&self) -> bool {
        self.offsets.windows(2).all(|w| w[1] - w[0] == 1)
    }

    /// Linear reward `theta . f(s)` for every state.
    pub fn state_rewards(&self, theta: &RewardParams) -> Result<Vec<f64>> {
        if theta.len() != self.num_features {
            return invalid(format!(
                "reward has {} weights but the MDP has {} features",
                theta.len(),
                self.num_features
            ));
        }
        Ok((0..self.num_states)
            .map(|s| dot(self.features(s), theta.as_slice()))
            .collect())
    }

    pub(crate) fn check_state(&self, state: usize) -> Result<()> {
        if state >= self.num_states {
            return invalid(format!(
                "state {state} out of range ({} states)",
                self.num_states
            ));
        }
        Ok(())
    }

    pub fn to_document(&self) -> MdpDocument {
        let transitions = (0..self.num_states)
            .map(|s| {
                (0..self.num_actions)
                    .map(|a| TransitionRow::Sparse(self.successors(s, a).collect()))
                    .collect()
            })
            .collect();
        MdpDocument {
            num_states: self.num_states,
            num_actions: self.num_actions,
            transitions,
            features: (0..self.num_states).map(|s| self.features(s).to_vec()).collect(),
            state_names: self.state_names.clone(),
        }
    }

    pub fn from_document(doc: MdpDocument) -> Result<Self> {
        if doc.transitions.len() != doc.num_states || doc.features.len() != doc.num_states {
            return invalid("document arrays disagree with num_states");
        }
        let mut rows = Vec::with_capacity(doc.num_states * doc.num_actions);
        for (s, per_action) in doc.transitions.into_iter().enumerate() {
            if per_action.len() != doc.num_actions {
                return invalid(format!("state {s} lists {} actions", per_action.len()));
            }
            for row in per_action {
                rows.push(match row {
                    TransitionRow::Sparse(pairs) => pairs,
                    TransitionRow::Dense(dense) => {
                        if dense.len() != doc.num_states {
                            return invalid(format!("dense row of state {s} has the wrong length"));
                        }
                        dense
                            .into_iter()
                            .enumerate()
                            .filter(|(_, p)| *p != 0.0)
                            .collect()
                    }
                });
            }
        }
        if let Some(names) = &doc.state_names {
            if names.len() != doc.num_states {
                return invalid("state_names length differs from num_states");
            }
        }
        Self::from_sparse(doc.num_actions, rows, doc.features, doc.state_names)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(text)?)
    }
}

fn predecessor_index(
    num_states: usize,
    offsets: &[usize],
    next: &[u32],
    prob: &[f64],
) -> (Vec<usize>, Vec<u32>, Vec<f64>) {
    let mut counts = vec![0usize; num_states + 1];
    for &n in next {
        counts[n as usize + 1] += 1;
    }
    for i in 0..num_states {
        counts[i + 1] += counts[i];
    }
    let pred_offsets = counts.clone();
    let mut cursor = counts;
    let mut pair_of = vec![0u32; next.len()];
    let mut prob_of = vec![0.0; next.len()];
    for pair in 0..offsets.len() - 1 {
        for k in offsets[pair]..offsets[pair + 1] {
            let n = next[k] as usize;
            pair_of[cursor[n]] = pair as u32;
            prob_of[cursor[n]] = prob[k];
            cursor[n] += 1;
        }
    }
    (pred_offsets, pair_of, prob_of)
}

/// One `T[s][a][.]` row in the JSON document: either `[[next, p], ...]` or a
/// dense probability vector.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TransitionRow {
    Sparse(Vec<(usize, f64)>),
    Dense(Vec<f64>),
}

/// Serialized form of a [`TabularMdp`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MdpDocument {
    pub num_states: usize,
    pub num_actions: usize,
    pub transitions: Vec<Vec<TransitionRow>>,
    pub features: Vec<Vec<f64>>,
    #[serde(default)]
    pub state_names: Option<Vec<String>>,
}

/// Weights of a linear state reward `r(s) = theta . f(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RewardParams(Vec<f64>);

impl RewardParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some(i) = theta.iter().position(|x| !x.is_finite()) {
            return invalid(format!("reward weight {i} is not finite"));
        }
        Ok(Self(theta))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `c * theta`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|x| c * x).collect())
    }
}

impl TryFrom<Vec<f64>> for RewardParams {
    type Error = crate::error::RlspError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RewardParams> for Vec<f64> {
    fn from(p: RewardParams) -> Self {
        p.0
    }
}

/// Probability distribution over the states of an MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDistribution {
    probs: Vec<f64>,
}

impl StateDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return invalid("empty distribution");
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return invalid("distribution has a negative or non-finite entry");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return invalid(format!("distribution sums to {total}"));
        }
        Ok(Self { probs })
    }

    pub fn delta(num_states: usize, state: usize) -> Self {
        assert!(state < num_states, "delta state out of range");
        let mut probs = vec![0.0; num_states];
        probs[state] = 1.0;
        Self { probs }
    }

    pub fn uniform(num_states: usize) -> Self {
        assert!(num_states > 0);
        Self {
            probs: vec![1.0 / num_states as f64; num_states],
        }
    }

    /// Wraps a vector produced by a stochastic recursion; skips validation.
    pub(crate) fn from_recursion(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, state: usize) -> f64 {
        self.probs[state]
    }

    /// States with positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, _)| s)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    pub const STAY: usize = 0;
    pub const RIGHT: usize = 1;

    /// Three states in a line, STAY or move RIGHT (saturating), one-hot features.
    pub fn chain3() -> TabularMdp {
        let mut rows = Vec::new();
        for s in 0..3 {
            rows.push(vec![(s, 1.0)]);
            rows.push(vec![((s + 1).min(2), 1.0)]);
        }
        let features = (0..3)
            .map(|s| (0..3).map(|i| if i == s { 1.0 } else { 0.0 }).collect())
            .collect();
        TabularMdp::from_sparse(2, rows, features, None).unwrap()
    }
}
