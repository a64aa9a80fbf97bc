mod common;

use common::*;
use rlsp_core::mdp::{StateDistribution, TabularMdp};
use rlsp_core::rlsp::{rlsp_infer, RlspConfig};
use rlsp_core::sampler::{mcmc_sample, posterior_mean, PosteriorSamples, SamplerConfig};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn sampler(seed: u64, n: usize) -> SamplerConfig {
    SamplerConfig {
        proposal_std: 0.8,
        num_samples: n,
        burn_in: 1_000,
        seed,
        warm_start: true,
    }
}

fn column(samples: &PosteriorSamples, i: usize) -> Vec<f64> {
    samples.samples.iter().map(|t| t.as_slice()[i]).collect()
}

/// Monte Carlo standard error of the mean by batch means.
fn mcse(xs: &[f64]) -> f64 {
    let batches = 50;
    let size = xs.len() / batches;
    let means: Vec<f64> = xs.chunks(size).take(batches).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// Two states whose features never differ: every reward explains `s_0` equally well.
fn flat_mdp() -> TabularMdp {
    let rows = vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(1, 1.0)], vec![(0, 1.0)]];
    TabularMdp::from_sparse(2, rows, vec![vec![1.0, -0.5]; 2], None).unwrap()
}

/// Two states, stay or switch, one indicator feature on state 1.
/// From state 0 with horizon 1, `p(s_0 = 1 | theta) = sigmoid(theta)`.
fn switch_mdp() -> TabularMdp {
    let rows = vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(1, 1.0)], vec![(0, 1.0)]];
    TabularMdp::from_sparse(2, rows, vec![vec![0.0], vec![1.0]], None).unwrap()
}

#[test]
fn flat_likelihood_recovers_the_prior_mean() {
    let mdp = flat_mdp();
    let config = RlspConfig::new(3, StateDistribution::delta(2, 0));
    let out = mcmc_sample(&mdp, &config, 1, &sampler(11, 40_000)).unwrap();
    let mean = posterior_mean(&out).unwrap();
    for i in 0..2 {
        let xs = column(&out, i);
        assert!(mean.as_slice()[i].abs() <= 3.0 * mcse(&xs), "coordinate {i}: {}", mean.as_slice()[i]);
    }
}

#[test]
fn chain3_posterior_mean_points_like_the_map() {
    let mdp = chain3();
    let config = RlspConfig::new(2, StateDistribution::delta(3, 0));
    let map = rlsp_infer(&mdp, &config, 2).unwrap();
    let out = mcmc_sample(&mdp, &config, 2, &sampler(5, 20_000)).unwrap();
    let mean = posterior_mean(&out).unwrap();
    let c = cosine(mean.as_slice(), map.theta_alice.as_slice());
    assert!(c >= 0.9, "cosine {c}: mean {mean:?} map {:?}", map.theta_alice);
}

#[test]
fn same_seed_same_stream() {
    let mdp = chain3();
    let config = RlspConfig::new(2, StateDistribution::delta(3, 0));
    let a = mcmc_sample(&mdp, &config, 2, &sampler(7, 2_000)).unwrap();
    let b = mcmc_sample(&mdp, &config, 2, &sampler(7, 2_000)).unwrap();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        for (p, q) in x.as_slice().iter().zip(y.as_slice()) {
            assert_eq!(p.to_bits(), q.to_bits());
        }
    }
    let c = mcmc_sample(&mdp, &config, 2, &sampler(8, 2_000)).unwrap();
    assert_ne!(a.samples, c.samples);
}

#[test]
fn warm_start_does_not_change_the_chain() {
    let mdp = chain3();
    let config = RlspConfig::new(2, StateDistribution::delta(3, 0));
    let warm = mcmc_sample(&mdp, &config, 2, &sampler(3, 1_000)).unwrap();
    let cold = mcmc_sample(
        &mdp,
        &config,
        2,
        &SamplerConfig {
            warm_start: false,
            ..sampler(3, 1_000)
        },
    )
    .unwrap();
    assert_eq!(warm.samples, cold.samples);
}

#[test]
fn acceptance_rate_matches_log() {
    let mdp = chain3();
    let config = RlspConfig::new(2, StateDistribution::delta(3, 0));
    let out = mcmc_sample(&mdp, &config, 2, &sampler(1, 5_000)).unwrap();
    assert_eq!(out.samples.len(), 5_000);
    assert_eq!(out.accepted.len(), 5_000);
    let rate = out.accepted.iter().filter(|&&a| a).count() as f64 / 5_000.0;
    assert_eq!(rate, out.acceptance_rate);
    assert!(rate > 0.0 && rate < 1.0);
    // A rejected proposal repeats the previous state.
    for (i, acc) in out.accepted.iter().enumerate().skip(1) {
        if !acc {
            assert_eq!(out.samples[i], out.samples[i - 1]);
        }
    }
}

#[test]
fn stationary_distribution_matches_the_posterior() {
    let mdp = switch_mdp();
    let config = RlspConfig::new(1, StateDistribution::delta(2, 0));
    let out = mcmc_sample(&mdp, &config, 1, &sampler(2024, 200_000)).unwrap();
    let thinned: Vec<f64> = column(&out, 0).into_iter().step_by(50).collect();

    let density = |x: f64| (-0.5 * x * x).exp() / (1.0 + (-x).exp());
    let edges = [f64::NEG_INFINITY, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, f64::INFINITY];
    let mass = |lo: f64, hi: f64| {
        let (lo, hi) = (lo.max(-12.0), hi.min(12.0));
        let steps = 20_000;
        let h = (hi - lo) / steps as f64;
        (0..=steps)
            .map(|k| {
                let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
                w * density(lo + k as f64 * h)
            })
            .sum::<f64>()
            * h
    };
    let masses: Vec<f64> = edges.windows(2).map(|w| mass(w[0], w[1])).collect();
    let total: f64 = masses.iter().sum();
    let n = thinned.len() as f64;
    let mut stat = 0.0;
    for (w, m) in edges.windows(2).zip(&masses) {
        let observed = thinned.iter().filter(|&&x| x >= w[0] && x < w[1]).count() as f64;
        let expected = n * m / total;
        stat += (observed - expected).powi(2) / expected;
    }
    let dist = ChiSquared::new((masses.len() - 1) as f64).unwrap();
    let p = 1.0 - dist.cdf(stat);
    assert!(p > 1e-3, "chi-square {stat}, p = {p}");
}

#[test]
fn standardized_means_are_calibrated_across_seeds() {
    let mdp = flat_mdp();
    let config = RlspConfig::new(3, StateDistribution::delta(2, 0));
    let mut z2 = Vec::new();
    for seed in 0..40 {
        let out = mcmc_sample(&mdp, &config, 1, &sampler(seed, 10_000)).unwrap();
        for i in 0..2 {
            let xs = column(&out, i);
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            z2.push((mean / mcse(&xs)).powi(2));
        }
    }
    let avg = z2.iter().sum::<f64>() / z2.len() as f64;
    assert!((0.5..2.0).contains(&avg), "mean squared z-score {avg}");
}
