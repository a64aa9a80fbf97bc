//! One line per acceptance criterion. Runs without the libtest harness so the
//! summary is always printed.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use rlsp_core::combiner::combine_additive;
use rlsp_core::eval::{
    combiner_compare, combiner_suite, horizon_sweep, run_scenario, table1, Algorithm, EvalReport, RunOptions, Table1,
    Verdict, LAMBDA_GRID, SIGMA_GRID,
};
use rlsp_core::gridworlds::{build_scenario, PriorMode};
use rlsp_core::mceirl::{deterministic_reduction_check, trajectory_gradient};
use rlsp_core::mdp::{
    forward_marginals, sample_trajectory, soft_value_iteration, trajectory_log_prob, RewardParams, StateDistribution,
    TabularMdp,
};
use rlsp_core::rlsp::{brute_force_log_likelihood, grad_state, log_likelihood_s0, rlsp_gradient, rlsp_infer, RlspConfig};
use rlsp_core::sampler::{mcmc_sample, posterior_mean, SamplerConfig};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn family() -> impl Iterator<Item = (u64, Instance, RewardParams)> {
    (0..20u64).flat_map(|seed| {
        let inst = random_instance(seed, false);
        (0..5u64).map(move |k| {
            let theta = random_theta(seed * 31 + k, inst.mdp.num_features());
            (seed, inst.clone(), theta)
        })
    })
}

fn gradient_exactness() -> Outcome {
    let start = Instant::now();
    let (mut worst_grad, mut worst_ll) = (0.0f64, 0.0f64);
    for (seed, inst, theta) in family() {
        let cfg = RlspConfig::new(inst.horizon, inst.start.clone());
        for s0 in 0..inst.mdp.num_states() {
            let dp = log_likelihood_s0(&inst.mdp, &theta, &cfg, s0).map_err(|e| e.to_string())?;
            let bf = brute_force_log_likelihood(&inst.mdp, &theta, &cfg, s0).map_err(|e| e.to_string())?;
            if bf == f64::NEG_INFINITY {
                ensure(dp == f64::NEG_INFINITY, || format!("seed {seed}: dp {dp} for an impossible state"))?;
                continue;
            }
            worst_ll = worst_ll.max((dp - bf).abs());
            let exact = rlsp_gradient(&inst.mdp, &theta, &cfg, s0).map_err(|e| e.to_string())?;
            let fd = finite_difference(&theta, |th| log_likelihood_s0(&inst.mdp, th, &cfg, s0).unwrap());
            worst_grad = worst_grad.max(relative_error(&exact, &fd));
        }
    }
    let elapsed = start.elapsed();
    ensure(worst_grad <= 1e-6, || format!("gradient relative error {worst_grad:.2e}"))?;
    ensure(worst_ll <= 1e-9, || format!("likelihood error {worst_ll:.2e}"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "max gradient error {worst_grad:.1e}, max likelihood error {worst_ll:.1e}, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

fn mceirl_exactness() -> Outcome {
    let mut worst = 0.0f64;
    for (seed, inst, theta) in family() {
        let (pi, _) = soft_value_iteration(&inst.mdp, &theta, inst.horizon, 1.0).unwrap();
        let tau = sample_trajectory(&inst.mdp, &pi, &inst.start, inst.horizon, seed).unwrap();
        let exact = trajectory_gradient(&inst.mdp, &theta, &tau).map_err(|e| e.to_string())?;
        let fd = finite_difference(&theta, |th| {
            let (p, _) = soft_value_iteration(&inst.mdp, th, inst.horizon, 1.0).unwrap();
            trajectory_log_prob(&inst.mdp, &p, &tau, &inst.start).unwrap()
        });
        worst = worst.max(relative_error(&exact, &fd));

        let det = random_instance(seed + 1000, true);
        let theta = random_theta(seed + 1000, det.mdp.num_features());
        let (pi, _) = soft_value_iteration(&det.mdp, &theta, det.horizon, 1.0).unwrap();
        let tau = sample_trajectory(&det.mdp, &pi, &det.start, det.horizon, seed).unwrap();
        ensure(deterministic_reduction_check(&det.mdp, &theta, &tau).unwrap(), || {
            format!("deterministic reduction fails for seed {seed}")
        })?;
    }
    ensure(worst <= 1e-6, || format!("gradient relative error {worst:.2e}"))?;
    Ok(format!("max gradient error {worst:.1e}; reduction holds on 100 deterministic cases"))
}

fn normalization() -> Outcome {
    let (mut pol, mut marg, mut traj, mut g) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (_, inst, theta) in family() {
        let (pi, _) = soft_value_iteration(&inst.mdp, &theta, inst.horizon, 1.0).unwrap();
        for t in 0..=inst.horizon {
            for s in 0..inst.mdp.num_states() {
                pol = pol.max((pi.action_probs(t, s).iter().sum::<f64>() - 1.0).abs());
            }
        }
        for m in forward_marginals(&inst.mdp, &pi, &inst.start, inst.horizon).unwrap() {
            marg = marg.max((m.probs().iter().sum::<f64>() - 1.0).abs());
        }
        let cfg = RlspConfig::new(inst.horizon, inst.start.clone());
        let total: f64 = (0..inst.mdp.num_states())
            .map(|s0| brute_force_log_likelihood(&inst.mdp, &theta, &cfg, s0).unwrap().exp())
            .sum();
        traj = traj.max((total - 1.0).abs());
        let gs = grad_state(&inst.mdp, &theta, &cfg).unwrap();
        for f in 0..inst.mdp.num_features() {
            let sum: f64 = (0..inst.mdp.num_states()).map(|s| gs.g(inst.horizon, s)[f]).sum();
            g = g.max(sum.abs());
        }
    }
    ensure(pol <= 1e-12, || format!("policy sums off by {pol:.2e}"))?;
    ensure(marg <= 1e-12, || format!("marginals off by {marg:.2e}"))?;
    ensure(traj <= 1e-9, || format!("trajectory likelihoods off by {traj:.2e}"))?;
    ensure(g <= 1e-9, || format!("sum of G off by {g:.2e}"))?;
    Ok(format!("policy {pol:.0e}, marginals {marg:.0e}, trajectories {traj:.0e}, G {g:.0e}"))
}

const EXPECTED: [(&str, [Verdict; 6]); 4] = {
    use Verdict::{Approx as A, Fail as F, Pass as P};
    [
        ("spec", [F, F, F, P, F, F]),
        ("deviation", [P, F, F, A, F, P]),
        ("reachability", [P, P, F, A, F, P]),
        ("rlsp", [P, P, P, P, P, F]),
    ]
};

fn table_reproduction(table: &Table1, elapsed: Duration) -> Outcome {
    let got = table.verdicts();
    let mut mismatches = Vec::new();
    for ((label, want), row) in EXPECTED.iter().zip(&got) {
        for ((scenario, w), g) in table.scenarios.iter().zip(want).zip(row) {
            if w != g {
                mismatches.push(format!("{label}/{scenario} is {} (want {})", g.glyph(), w.glyph()));
            }
        }
    }
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    ensure(mismatches.is_empty(), || mismatches.join(", "))?;
    Ok(format!("all 24 verdicts match, {:.1}s", elapsed.as_secs_f64()))
}

fn weight(report: &EvalReport, feature: &str) -> f64 {
    report
        .inferred_theta
        .as_ref()
        .and_then(|ws| ws.iter().find(|w| w.feature == feature))
        .map(|w| w.weight)
        .unwrap_or(f64::NAN)
}

fn uniform_prior_effects() -> Outcome {
    let options = RunOptions::default();
    let run = |name: &str, mode| {
        let scenario = build_scenario(name).unwrap().with_prior_mode(mode);
        run_scenario(&scenario, Algorithm::RlspAdditive, &LAMBDA_GRID, &options).map_err(|e| e.to_string())
    };
    let far = run("far-away-vase", PriorMode::Uniform)?;
    let known = run("room", PriorMode::Known)?;
    let uniform = run("room", PriorMode::Uniform)?;
    let (ck, cu) = (weight(&known, "on_carpet"), weight(&uniform, "on_carpet"));
    let vase = weight(&uniform, "broken_vases");
    ensure(far.verdict == Verdict::Pass, || {
        format!("far-away-vase under the uniform prior is {}", far.verdict.glyph())
    })?;
    ensure(cu.abs() < ck.abs(), || format!("carpet weight {cu:.3} (uniform) vs {ck:.3} (known)"))?;
    ensure(vase < 0.0, || format!("broken-vase weight {vase:.3}"))?;
    Ok(format!(
        "far-away-vase ✓; carpet {ck:.3} -> {cu:.3}; broken vase {:.3} -> {vase:.3}",
        weight(&known, "broken_vases")
    ))
}

fn horizon_robustness() -> Outcome {
    let options = RunOptions::default();
    let room = build_scenario("room").unwrap();
    let true_t = room.alice_horizon;
    let sweep = horizon_sweep("room", &[1, true_t, 4 * true_t], &options).map_err(|e| e.to_string())?;
    let at = |curve: &[(f64, f64)], t: usize| curve.iter().find(|p| p.0 == t as f64).unwrap().1;
    let curve = sweep.curve("room", "");
    let (short, truth, long) = (at(&curve, 1), at(&curve, true_t), at(&curve, 4 * true_t));

    let apples_t = build_scenario("apples").unwrap().alice_horizon;
    let sweep = horizon_sweep("apples", &[apples_t, 100], &options).map_err(|e| e.to_string())?;
    let curve = sweep.curve("apples", "");
    let (a_truth, a_long) = (at(&curve, apples_t), at(&curve, 100));

    let detail = format!(
        "room T=1 {short:.3}, T={true_t} {truth:.3}, T={} {long:.3}; apples T={apples_t} {a_truth:.3}, T=100 {a_long:.3}",
        4 * true_t
    );
    ensure(short < truth, || format!("room fraction at T=1 is not below true T ({detail})"))?;
    ensure(Verdict::from_fraction(long) == Verdict::Pass, || {
        format!("room at 4x true T is not ✓ ({detail})")
    })?;
    ensure(a_long < a_truth, || format!("apples fraction at T=100 is not below true T ({detail})"))?;
    Ok(detail)
}

fn combiner_agreement() -> Outcome {
    let envs = combiner_suite();
    let sweep = combiner_compare(&envs, &SIGMA_GRID, &[0.0]).map_err(|e| e.to_string())?;
    let best = |env: &str, series: &str| {
        sweep.curve(env, series).iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    };
    let mut worst = 0.0f64;
    for env in &envs {
        let gap = (best(env, "additive@0") - best(env, "bayesian@0")).abs();
        ensure(gap <= 0.1, || format!("{env}: gap {gap:.3}"))?;
        worst = worst.max(gap);
    }
    ensure(!envs.contains(&"apples"), || "apples is in the suite".into())?;

    // With a zero specified reward both methods run the same inference.
    let apples = build_scenario("apples").unwrap();
    let cfg = RlspConfig::new(apples.alice_horizon, apples.s_minus_t_prior.clone());
    let bayes = rlsp_infer(&apples.env.mdp, &cfg.clone().with_prior(Some(apples.theta_spec.clone()), 1.0), apples.s0)
        .map_err(|e| e.to_string())?;
    let alice = rlsp_infer(&apples.env.mdp, &cfg.with_prior(None, 1.0), apples.s0).map_err(|e| e.to_string())?;
    let additive = combine_additive(&alice.theta_alice, &apples.theta_spec, 1.0).map_err(|e| e.to_string())?;
    ensure(additive == bayes.theta_alice, || "zero specified reward does not give identical rewards".into())?;
    Ok(format!("max best-fraction gap {worst:.3} over {} environments", envs.len()))
}

fn sampler_sanity() -> Outcome {
    let config = |n| SamplerConfig {
        proposal_std: 0.8,
        num_samples: n,
        burn_in: 1_000,
        seed: 11,
        warm_start: true,
    };
    let rows = vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(1, 1.0)], vec![(0, 1.0)]];
    let flat = TabularMdp::from_sparse(2, rows, vec![vec![1.0, -0.5]; 2], None).unwrap();
    let cfg = RlspConfig::new(3, StateDistribution::delta(2, 0));
    let out = mcmc_sample(&flat, &cfg, 1, &config(40_000)).map_err(|e| e.to_string())?;
    let mean = posterior_mean(&out).unwrap();
    for i in 0..2 {
        let xs: Vec<f64> = out.samples.iter().map(|t| t.as_slice()[i]).collect();
        let size = xs.len() / 50;
        let means: Vec<f64> = xs.chunks(size).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
        let mcse = (var / means.len() as f64).sqrt();
        ensure(mean.as_slice()[i].abs() <= 3.0 * mcse, || {
            format!("flat-likelihood mean {} vs MCSE {mcse}", mean.as_slice()[i])
        })?;
    }

    let mdp = chain3();
    let cfg = RlspConfig::new(2, StateDistribution::delta(3, 0));
    let map = rlsp_infer(&mdp, &cfg, 2).map_err(|e| e.to_string())?;
    let a = mcmc_sample(&mdp, &cfg, 2, &config(20_000)).map_err(|e| e.to_string())?;
    let c = cosine(posterior_mean(&a).unwrap().as_slice(), map.theta_alice.as_slice());
    ensure(c >= 0.9, || format!("chain3 cosine {c:.3}"))?;
    let b = mcmc_sample(&mdp, &cfg, 2, &config(20_000)).map_err(|e| e.to_string())?;
    let identical = a.samples.len() == b.samples.len()
        && a.samples.iter().zip(&b.samples).all(|(x, y)| {
            x.as_slice().iter().zip(y.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits())
        });
    ensure(identical, || "same seed gave different samples".into())?;
    Ok(format!("chain3 cosine {c:.3}; flat mean within 3 MCSE; streams identical"))
}

fn determinism(first: &Table1) -> Outcome {
    let second = table1(PriorMode::Known, &RunOptions::default()).map_err(|e| e.to_string())?;
    let same = first.to_text() == second.to_text()
        && first.to_json().unwrap() == second.to_json().unwrap()
        && first.to_csv() == second.to_csv();
    ensure(same, || "repeated table1 runs differ".into())?;
    Ok("text, CSV and JSON outputs byte-identical".into())
}

fn main() -> ExitCode {
    let start = Instant::now();
    let table = table1(PriorMode::Known, &RunOptions::default());
    let table_time = start.elapsed();

    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "gradient exactness", gradient_exactness()),
        (2, "trajectory gradient exactness", mceirl_exactness()),
        (3, "normalization", normalization()),
        (
            4,
            "summary table (known start)",
            table.as_ref().map_err(|e| e.to_string()).and_then(|t| table_reproduction(t, table_time)),
        ),
        (5, "uniform start prior", uniform_prior_effects()),
        (6, "horizon robustness", horizon_robustness()),
        (7, "additive vs bayesian", combiner_agreement()),
        (8, "sampler sanity", sampler_sanity()),
        (
            9,
            "determinism",
            table.as_ref().map_err(|e| e.to_string()).and_then(determinism),
        ),
    ];
    if let Ok(t) = &table {
        println!("{}", t.to_text());
    }
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
