//! Metropolis-Hastings sampling from `p(theta | s_0)`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, RlspError};
use crate::mdp::{soft_policy_reusing, RewardParams, SoftPolicy, TabularMdp};
use crate::rlsp::{log_likelihood_under, RlspConfig};

/// Attempts at drawing a starting point with non-zero likelihood.
pub const MAX_INITIAL_DRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Standard deviation of the isotropic Gaussian proposal.
    pub proposal_std: f64,
    pub num_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Reuse the previous policy's buffers between likelihood evaluations.
    pub warm_start: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            proposal_std: 0.2,
            num_samples: 20_000,
            burn_in: 2_000,
            seed: 0,
            warm_start: true,
        }
    }
}

impl SamplerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.proposal_std > 0.0 && self.proposal_std.is_finite()) {
            return invalid("proposal std must be positive");
        }
        if self.num_samples == 0 {
            return invalid("at least one sample is required");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorSamples {
    /// Post-burn-in chain states, one per iteration.
    pub samples: Vec<RewardParams>,
    pub acceptance_rate: f64,
    /// Whether each post-burn-in proposal was accepted.
    pub accepted: Vec<bool>,
}

impl PosteriorSamples {
    /// One row per sample, columns named after the features.
    pub fn write_csv<W: Write>(&self, mut out: W, feature_names: &[String]) -> Result<()> {
        writeln!(out, "sample,{}", feature_names.join(","))?;
        for (i, theta) in self.samples.iter().enumerate() {
            let row: Vec<String> = theta.as_slice().iter().map(|x| format!("{x:.17e}")).collect();
            writeln!(out, "{i},{}", row.join(","))?;
        }
        Ok(())
    }
}

struct Target<'a> {
    mdp: &'a TabularMdp,
    config: &'a RlspConfig,
    s0: usize,
    warm: bool,
    policy: Option<SoftPolicy>,
}

impl Target<'_> {
    fn log_density(&mut self, theta: &[f64]) -> Result<f64> {
        let params = RewardParams::new(theta.to_vec())?;
        let previous = if self.warm { self.policy.take() } else { None };
        let policy = soft_policy_reusing(self.mdp, &params, self.config.alice_horizon, previous)?;
        let ll = log_likelihood_under(self.mdp, &policy, self.config, self.s0);
        self.policy = Some(policy);
        Ok(ll + self.config.log_prior(theta).0)
    }
}

fn gaussian(rng: &mut ChaCha8Rng, mean: &[f64], std: f64) -> Vec<f64> {
    mean.iter()
        .map(|m| {
            let z: f64 = StandardNormal.sample(rng);
            m + std * z
        })
        .collect()
}

/// Random-walk Metropolis-Hastings on `ln p(s_0 | theta) + ln p(theta)`,
/// started from a prior draw with non-zero likelihood.
pub fn mcmc_sample(
    mdp: &TabularMdp,
    config: &RlspConfig,
    s0: usize,
    sampler: &SamplerConfig,
) -> Result<PosteriorSamples> {
    sampler.validate()?;
    config.validate(mdp)?;
    mdp.check_state(s0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let mut target = Target {
        mdp,
        config,
        s0,
        warm: sampler.warm_start,
        policy: None,
    };
    let mean = config.prior_mean(mdp.num_features());
    let mut start = None;
    for _ in 0..MAX_INITIAL_DRAWS {
        let theta = gaussian(&mut rng, &mean, config.theta_prior_std);
        let lp = target.log_density(&theta)?;
        if lp.is_finite() {
            start = Some((theta, lp));
            break;
        }
    }
    let Some((mut theta, mut lp)) = start else {
        return Err(RlspError::ImpossibleEvidence(format!(
            "no prior draw out of {MAX_INITIAL_DRAWS} gives state {s0} positive likelihood"
        )));
    };

    let total = sampler.burn_in + sampler.num_samples;
    let mut samples = Vec::with_capacity(sampler.num_samples);
    let mut accepted = Vec::with_capacity(sampler.num_samples);
    for i in 0..total {
        let proposal = gaussian(&mut rng, &theta, sampler.proposal_std);
        let lp_new = target.log_density(&proposal)?;
        let u: f64 = rng.gen();
        let accept = lp_new.is_finite() && u.ln() < lp_new - lp;
        if accept {
            theta = proposal;
            lp = lp_new;
        }
        if i >= sampler.burn_in {
            samples.push(RewardParams::new(theta.clone())?);
            accepted.push(accept);
        }
    }
    let acceptance_rate = accepted.iter().filter(|&&a| a).count() as f64 / accepted.len() as f64;
    Ok(PosteriorSamples {
        samples,
        acceptance_rate,
        accepted,
    })
}

/// Coordinate-wise mean of the retained samples.
pub fn posterior_mean(samples: &PosteriorSamples) -> Result<RewardParams> {
    let Some(first) = samples.samples.first() else {
        return invalid("no samples to average");
    };
    let mut mean = vec![0.0; first.len()];
    for theta in &samples.samples {
        for (m, x) in mean.iter_mut().zip(theta.as_slice()) {
            *m += x;
        }
    }
    let n = samples.samples.len() as f64;
    RewardParams::new(mean.into_iter().map(|m| m / n).collect())
}
