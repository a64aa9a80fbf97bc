//! Turning the inferred reward and the specified reward into the reward the
//! robot plans with.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mdp::{RewardParams, TabularMdp};
use crate::rlsp::{rlsp_infer, InferredReward, RlspConfig};

/// How `theta_final` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CombineMethod {
    /// `theta_alice + lambda * theta_spec`, with `theta_alice` inferred under
    /// a zero-mean prior of standard deviation `sigma`.
    Additive { lambda: f64, sigma: f64 },
    /// Inference under a prior centred on `theta_spec` with standard
    /// deviation `sigma`; the result is used directly.
    Bayesian { sigma: f64 },
}

impl CombineMethod {
    pub fn sigma(&self) -> f64 {
        match *self {
            CombineMethod::Additive { sigma, .. } | CombineMethod::Bayesian { sigma } => sigma,
        }
    }
}

pub fn combine_additive(theta_alice: &RewardParams, theta_spec: &RewardParams, lambda: f64) -> Result<RewardParams> {
    if theta_alice.len() != theta_spec.len() {
        return invalid(format!(
            "cannot combine rewards of dimension {} and {}",
            theta_alice.len(),
            theta_spec.len()
        ));
    }
    RewardParams::new(
        theta_alice
            .as_slice()
            .iter()
            .zip(theta_spec.as_slice())
            .map(|(a, s)| a + lambda * s)
            .collect(),
    )
}

/// MAP inference with the prior `N(theta_spec, sigma^2 I)`.
pub fn infer_with_spec_prior(
    mdp: &TabularMdp,
    config: &RlspConfig,
    s0: usize,
    theta_spec: &RewardParams,
    sigma: f64,
) -> Result<InferredReward> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return invalid(format!("prior standard deviation must be positive, got {sigma}"));
    }
    let config = config.clone().with_prior(Some(theta_spec.clone()), sigma);
    rlsp_infer(mdp, &config, s0)
}

/// Runs the inference `method` calls for and returns `theta_final`.
pub fn final_reward(
    mdp: &TabularMdp,
    config: &RlspConfig,
    s0: usize,
    theta_spec: &RewardParams,
    method: CombineMethod,
) -> Result<(RewardParams, InferredReward)> {
    match method {
        CombineMethod::Additive { lambda, sigma } => {
            let inferred = rlsp_infer(mdp, &config.clone().with_prior(None, sigma), s0)?;
            let theta = combine_additive(&inferred.theta_alice, theta_spec, lambda)?;
            Ok((theta, inferred))
        }
        CombineMethod::Bayesian { sigma } => {
            let inferred = infer_with_spec_prior(mdp, config, s0, theta_spec, sigma)?;
            Ok((inferred.theta_alice.clone(), inferred))
        }
    }
}
