//! Exact maximum-causal-entropy gradients for single trajectories.
//!
//! `F_t(s)` is the expected feature sum from `s` at step `t` to the end of the
//! horizon under the soft policy; it is also `grad_theta V_t(s)`. The
//! log-likelihood gradient of a trajectory is
//! `sum_{t<H} f(s_t) + E[F_{t+1}(s') | s_t, a_t] - F_t(s_t)`.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::mdp::{soft_value_iteration, Policy, RewardParams, SoftPolicy, TabularMdp, Trajectory};

/// Tolerance of [`deterministic_reduction_check`].
pub const REDUCTION_TOL: f64 = 1e-10;

/// Table of `F_t(s)` for `t = 0..=horizon`.
#[derive(Debug, Clone, Serialize)]
pub struct FeatureExpectations {
    table: Vec<f64>,
    horizon: usize,
    num_states: usize,
    num_features: usize,
}

impl FeatureExpectations {
    #[inline]
    pub fn get(&self, t: usize, state: usize) -> &[f64] {
        let f = self.num_features;
        let base = (t * self.num_states + state) * f;
        &self.table[base..base + f]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `E[F_{t+1}(s') | s, a]`, accumulated into `out`.
    #[inline]
    pub(crate) fn expected_next(
        &self,
        mdp: &TabularMdp,
        t: usize,
        state: usize,
        action: usize,
        out: &mut [f64],
    ) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (n, p) in mdp.successors(state, action) {
            for (o, v) in out.iter_mut().zip(self.get(t + 1, n)) {
                *o += p * v;
            }
        }
    }

    /// `g(s, a) = f(s) + E[F_{t+1}(s') | s, a] - F_t(s)` for `t < horizon`.
    pub fn step_gradient(&self, mdp: &TabularMdp, t: usize, state: usize, action: usize) -> Vec<f64> {
        let mut g = vec![0.0; self.num_features];
        self.expected_next(mdp, t, state, action, &mut g);
        for ((gi, fi), fti) in g.iter_mut().zip(mdp.features(state)).zip(self.get(t, state)) {
            *gi += fi - fti;
        }
        g
    }
}

/// Backward recursion `F_H(s) = f(s)`,
/// `F_t(s) = f(s) + sum_a pi_t(a|s) sum_s' T(s'|s,a) F_{t+1}(s')`.
pub fn feature_expectations(
    mdp: &TabularMdp,
    policy: &SoftPolicy,
    horizon: usize,
) -> Result<FeatureExpectations> {
    if policy.horizon() < horizon {
        return invalid(format!(
            "policy covers {} steps, {horizon} requested",
            policy.horizon()
        ));
    }
    if policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions() {
        return invalid("policy and MDP dimensions differ");
    }
    let (ns, nf) = (mdp.num_states(), mdp.num_features());
    let layer = ns * nf;
    let mut table = vec![0.0; (horizon + 1) * layer];
    for s in 0..ns {
        table[horizon * layer + s * nf..horizon * layer + (s + 1) * nf]
            .copy_from_slice(mdp.features(s));
    }
    for t in (0..horizon).rev() {
        let (head, tail) = table.split_at_mut((t + 1) * layer);
        let next = &tail[..layer];
        let now = &mut head[t * layer..];
        for s in 0..ns {
            let out = &mut now[s * nf..(s + 1) * nf];
            out.copy_from_slice(mdp.features(s));
            for (a, &pa) in policy.action_probs(t, s).iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                for (n, p) in mdp.successors(s, a) {
                    let w = pa * p;
                    for (o, v) in out.iter_mut().zip(&next[n * nf..(n + 1) * nf]) {
                        *o += w * v;
                    }
                }
            }
        }
    }
    Ok(FeatureExpectations {
        table,
        horizon,
        num_states: ns,
        num_features: nf,
    })
}

/// Exact `grad_theta ln p(tau | theta)` under the soft policy for `theta`.
///
/// Independent of the final action: its term cancels.
pub fn trajectory_gradient(mdp: &TabularMdp, theta: &RewardParams, tau: &Trajectory) -> Result<Vec<f64>> {
    tau.check_shape(mdp)?;
    if !tau.is_feasible(mdp) {
        return invalid("trajectory contains an infeasible transition");
    }
    let h = tau.horizon();
    let (policy, _) = soft_value_iteration(mdp, theta, h, 1.0)?;
    let fe = feature_expectations(mdp, &policy, h)?;
    Ok(trajectory_gradient_from_table(mdp, &fe, tau))
}

pub(crate) fn trajectory_gradient_from_table(
    mdp: &TabularMdp,
    fe: &FeatureExpectations,
    tau: &Trajectory,
) -> Vec<f64> {
    let mut total = vec![0.0; mdp.num_features()];
    for t in 0..tau.horizon() {
        let g = fe.step_gradient(mdp, t, tau.states[t], tau.actions[t]);
        for (x, gi) in total.iter_mut().zip(g) {
            *x += gi;
        }
    }
    total
}

/// `sum_{t=0}^{H} f(s_t) - F_0(s_0)`: the trajectory gradient when dynamics
/// are deterministic.
pub fn deterministic_reduction(mdp: &TabularMdp, theta: &RewardParams, tau: &Trajectory) -> Result<Vec<f64>> {
    tau.check_shape(mdp)?;
    let h = tau.horizon();
    let (policy, _) = soft_value_iteration(mdp, theta, h, 1.0)?;
    let fe = feature_expectations(mdp, &policy, h)?;
    let mut total = vec![0.0; mdp.num_features()];
    for &s in &tau.states {
        for (x, f) in total.iter_mut().zip(mdp.features(s)) {
            *x += f;
        }
    }
    for (x, f) in total.iter_mut().zip(fe.get(0, tau.states[0])) {
        *x -= f;
    }
    Ok(total)
}

/// Whether two gradient vectors agree to [`REDUCTION_TOL`] in every coordinate.
pub fn gradients_agree(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= REDUCTION_TOL)
}

/// Checks that [`trajectory_gradient`] equals [`deterministic_reduction`].
pub fn deterministic_reduction_check(mdp: &TabularMdp, theta: &RewardParams, tau: &Trajectory) -> Result<bool> {
    if !mdp.is_deterministic() {
        return invalid("the reduction only holds for deterministic dynamics");
    }
    let grad = trajectory_gradient(mdp, theta, tau)?;
    let reduced = deterministic_reduction(mdp, theta, tau)?;
    Ok(gradients_agree(&grad, &reduced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::testing::{chain3, RIGHT, STAY};

    fn uniform_policy(mdp: &TabularMdp, h: usize) -> SoftPolicy {
        soft_value_iteration(mdp, &RewardParams::zeros(mdp.num_features()), h, 1.0)
            .unwrap()
            .0
    }

    #[test]
    fn constant_features_telescope() {
        let rows = vec![vec![(1, 1.0)], vec![(0, 0.3), (1, 0.7)], vec![(0, 1.0)], vec![(1, 1.0)]];
        let mdp = TabularMdp::from_sparse(2, rows, vec![vec![2.0, -1.0]; 2], None).unwrap();
        let theta = RewardParams::new(vec![0.4, 0.9]).unwrap();
        let (pi, _) = soft_value_iteration(&mdp, &theta, 4, 1.0).unwrap();
        let fe = feature_expectations(&mdp, &pi, 4).unwrap();
        for t in 0..=4 {
            let k = (4 - t + 1) as f64;
            for s in 0..2 {
                assert!((fe.get(t, s)[0] - 2.0 * k).abs() < 1e-12);
                assert!((fe.get(t, s)[1] + k).abs() < 1e-12);
            }
        }
        let tau = Trajectory::new(vec![0, 1, 0], vec![0, 0, 1]).unwrap();
        let g = trajectory_gradient(&mdp, &theta, &tau).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn chain3_uniform_expectations() {
        let mdp = chain3();
        let fe = feature_expectations(&mdp, &uniform_policy(&mdp, 1), 1).unwrap();
        assert_eq!(fe.get(0, 0), &[1.5, 0.5, 0.0]);
        assert_eq!(fe.get(1, 2), mdp.features(2));
    }

    #[test]
    fn chain3_gradient_and_final_action_invariance() {
        let mdp = chain3();
        let theta = RewardParams::zeros(3);
        let a = Trajectory::new(vec![0, 1], vec![RIGHT, STAY]).unwrap();
        let b = Trajectory::new(vec![0, 1], vec![RIGHT, RIGHT]).unwrap();
        let ga = trajectory_gradient(&mdp, &theta, &a).unwrap();
        assert_eq!(ga, vec![-0.5, 0.5, 0.0]);
        assert_eq!(ga, trajectory_gradient(&mdp, &theta, &b).unwrap());
    }

    #[test]
    fn infeasible_trajectory_is_rejected() {
        let mdp = chain3();
        let tau = Trajectory::new(vec![0, 2], vec![RIGHT, STAY]).unwrap();
        assert!(trajectory_gradient(&mdp, &RewardParams::zeros(3), &tau).is_err());
    }

    #[test]
    fn reduction_holds_on_chain3_and_is_sensitive() {
        let mdp = chain3();
        let theta = RewardParams::new(vec![0.2, -0.7, 1.1]).unwrap();
        let tau = Trajectory::new(vec![0, 0, 1, 2, 2], vec![STAY, RIGHT, RIGHT, STAY, RIGHT]).unwrap();
        assert!(deterministic_reduction_check(&mdp, &theta, &tau).unwrap());

        let grad = trajectory_gradient(&mdp, &theta, &tau).unwrap();
        let mut reduced = deterministic_reduction(&mdp, &theta, &tau).unwrap();
        reduced[1] += 1e-6;
        assert!(!gradients_agree(&grad, &reduced));
    }

    #[test]
    fn reduction_check_rejects_stochastic_mdp() {
        let rows = vec![vec![(0, 0.5), (1, 0.5)], vec![(1, 1.0)]];
        let mdp = TabularMdp::from_sparse(1, rows, vec![vec![1.0], vec![0.0]], None).unwrap();
        let tau = Trajectory::new(vec![0, 1], vec![0, 0]).unwrap();
        assert!(deterministic_reduction_check(&mdp, &RewardParams::zeros(1), &tau).is_err());
    }
}
