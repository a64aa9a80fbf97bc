#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rlsp_core::mdp::{RewardParams, StateDistribution, TabularMdp};

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

#[derive(Debug, Clone)]
pub struct Instance {
    pub mdp: TabularMdp,
    pub start: StateDistribution,
    pub horizon: usize,
}

/// A random MDP with at most 6 states, 3 actions, 4 features and horizon 4.
pub fn random_instance(seed: u64, deterministic: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = rng.gen_range(2..=6);
    let na = rng.gen_range(1..=3);
    let nf = rng.gen_range(1..=4);
    let horizon = rng.gen_range(1..=4);
    let mut rows = Vec::with_capacity(ns * na);
    for _ in 0..ns * na {
        if deterministic {
            rows.push(vec![(rng.gen_range(0..ns), 1.0)]);
            continue;
        }
        let k = rng.gen_range(1..=ns.min(3));
        let mut row: Vec<(usize, f64)> = (0..k).map(|_| (rng.gen_range(0..ns), rng.gen_range(0.1..1.0))).collect();
        let total: f64 = row.iter().map(|(_, p)| p).sum();
        for (_, p) in &mut row {
            *p /= total;
        }
        rows.push(row);
    }
    let features = (0..ns)
        .map(|_| (0..nf).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mdp = TabularMdp::from_sparse(na, rows, features, None).unwrap();
    let weights: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let start = StateDistribution::new(weights.into_iter().map(|w| w / total).collect()).unwrap();
    Instance { mdp, start, horizon }
}

pub fn random_theta(seed: u64, len: usize) -> RewardParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    RewardParams::new((0..len).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

pub fn perturbed(theta: &RewardParams, i: usize, delta: f64) -> RewardParams {
    let mut v = theta.as_slice().to_vec();
    v[i] += delta;
    RewardParams::new(v).unwrap()
}

/// Central differences of `f` at `theta`.
pub fn finite_difference(theta: &RewardParams, f: impl Fn(&RewardParams) -> f64) -> Vec<f64> {
    let h = 1e-5;
    (0..theta.len())
        .map(|i| (f(&perturbed(theta, i, h)) - f(&perturbed(theta, i, -h))) / (2.0 * h))
        .collect()
}

/// Largest coordinate error, relative to the largest coordinate (at least 1).
pub fn relative_error(exact: &[f64], approx: &[f64]) -> f64 {
    let scale = exact.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    exact.iter().zip(approx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}
