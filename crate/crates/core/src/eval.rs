//! Scenario runs, the fraction-of-optimal metric, hyperparameter tuning and
//! the summary tables and sweeps built from them.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::baselines::{plan_deviation, plan_reward, plan_spec, ReachabilityPenalty};
use crate::combiner::{combine_additive, final_reward, CombineMethod};
use crate::error::{invalid, Result, RlspError};
use crate::gridworlds::{build_scenario, PriorMode, ScenarioBundle, SCENARIO_NAMES};
use crate::mdp::{
    expected_return, hard_value_iteration, sample_trajectory, soft_value_iteration, Policy, RewardParams,
    StateDistribution,
};
use crate::rlsp::{rlsp_infer, InferredReward, RlspConfig};
use crate::sampler::{mcmc_sample, posterior_mean, SamplerConfig};

pub const SCHEMA_VERSION: u32 = 1;

pub const LAMBDA_GRID: [f64; 5] = [0.1, 0.3, 1.0, 3.0, 10.0];
pub const SIGMA_GRID: [f64; 7] = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0];
pub const HORIZON_GRID: [usize; 8] = [1, 2, 5, 7, 10, 20, 50, 100];

/// Slack allowed above 1 when checking a fraction of optimal.
pub const FRACTION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Approx,
    Fail,
}

impl Verdict {
    pub fn from_fraction(fraction: f64) -> Self {
        if fraction >= 0.95 {
            Verdict::Pass
        } else if fraction >= 0.80 {
            Verdict::Approx
        } else {
            Verdict::Fail
        }
    }

    pub fn glyph(self) -> &'static str {
        match self {
            Verdict::Pass => "✓",
            Verdict::Approx => "≈",
            Verdict::Fail => "✗",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.glyph())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Spec,
    Deviation,
    Reachability,
    RlspAdditive,
    RlspBayesian,
    SamplerAdditive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Spec,
        Algorithm::Deviation,
        Algorithm::Reachability,
        Algorithm::RlspAdditive,
        Algorithm::RlspBayesian,
        Algorithm::SamplerAdditive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Spec => "spec",
            Algorithm::Deviation => "deviation",
            Algorithm::Reachability => "reachability",
            Algorithm::RlspAdditive => "rlsp-additive",
            Algorithm::RlspBayesian => "rlsp-bayesian",
            Algorithm::SamplerAdditive => "sampler-additive",
        }
    }

    /// Name of the tuned hyperparameter, if any.
    pub fn hyperparameter(self) -> Option<&'static str> {
        match self {
            Algorithm::Spec => None,
            Algorithm::RlspBayesian => Some("sigma"),
            _ => Some("lambda"),
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            Algorithm::Spec => Vec::new(),
            Algorithm::RlspBayesian => SIGMA_GRID.to_vec(),
            _ => LAMBDA_GRID.to_vec(),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                format!("unknown algorithm `{s}`; valid names: {}", names.join(", "))
            })
    }
}

/// Expected true return of the optimal policy from `s_0`.
pub fn optimal_return(scenario: &ScenarioBundle) -> Result<f64> {
    let plan = plan_reward(scenario, &scenario.theta_true)?;
    Ok(plan.value(0, scenario.s0))
}

/// Expected true return of `policy` from `s_0` as a fraction of the optimum.
pub fn evaluate_policy<P: Policy + ?Sized>(scenario: &ScenarioBundle, policy: &P) -> Result<f64> {
    if policy.horizon() != scenario.robot_horizon {
        return invalid(format!(
            "policy covers {} steps but the robot horizon is {}",
            policy.horizon(),
            scenario.robot_horizon
        ));
    }
    let optimum = optimal_return(scenario)?;
    if optimum <= 0.0 {
        return Err(RlspError::Refused(format!(
            "{}: optimal true return is {optimum}, so the fraction of optimal is undefined",
            scenario.name
        )));
    }
    let mdp = &scenario.env.mdp;
    let rewards = mdp.state_rewards(&scenario.theta_true)?;
    let start = StateDistribution::delta(mdp.num_states(), scenario.s0);
    Ok(expected_return(mdp, policy, &start, &rewards)? / optimum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub seed: u64,
    pub sampler: SamplerOptions,
}

/// Sampler settings used by `sampler-additive`; the seed comes from
/// [`RunOptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerOptions {
    pub proposal_std: f64,
    pub num_samples: usize,
    pub burn_in: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        let d = SamplerConfig::default();
        Self {
            seed: 0,
            sampler: SamplerOptions {
                proposal_std: d.proposal_std,
                num_samples: d.num_samples,
                burn_in: d.burn_in,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub value: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeight {
    pub feature: String,
    pub weight: f64,
}

fn named(scenario: &ScenarioBundle, theta: &RewardParams) -> Vec<FeatureWeight> {
    scenario
        .env
        .feature_names()
        .into_iter()
        .zip(theta.as_slice())
        .map(|(feature, &weight)| FeatureWeight { feature, weight })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_log_posterior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotTrajectory {
    pub seed: u64,
    pub states: Vec<String>,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub scenario: String,
    pub algorithm: Algorithm,
    pub prior_mode: PriorMode,
    pub alice_horizon: usize,
    pub robot_horizon: usize,
    pub hyperparameter: Option<String>,
    pub tuned_value: Option<f64>,
    pub fraction_of_optimal: f64,
    pub verdict: Verdict,
    pub grid: Vec<GridPoint>,
    /// Inferred reward before combination.
    pub inferred_theta: Option<Vec<FeatureWeight>>,
    /// Reward the robot planned with at the tuned setting.
    pub final_theta: Option<Vec<FeatureWeight>>,
    pub inference: Option<InferenceSummary>,
    pub trajectory: RobotTrajectory,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub const CSV_HEADER: &'static str =
        "schema_version,scenario,algorithm,prior_mode,alice_horizon,robot_horizon,hyperparameter,tuned_value,fraction_of_optimal,verdict";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:.12},{}",
            self.schema_version,
            self.scenario,
            self.algorithm.name(),
            self.prior_mode.name(),
            self.alice_horizon,
            self.robot_horizon,
            self.hyperparameter.as_deref().unwrap_or(""),
            self.tuned_value.map(|v| v.to_string()).unwrap_or_default(),
            self.fraction_of_optimal,
            self.verdict.glyph()
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario   {} ({} prior)", self.scenario, self.prior_mode.name());
        let _ = writeln!(out, "algorithm  {}", self.algorithm.name());
        if let (Some(h), Some(v)) = (&self.hyperparameter, self.tuned_value) {
            let _ = writeln!(out, "tuned      {h} = {v}");
        }
        let _ = writeln!(
            out,
            "fraction   {:.4} {}",
            self.fraction_of_optimal,
            self.verdict.glyph()
        );
        for p in &self.grid {
            let _ = writeln!(out, "  {:>8} -> {:.4}", p.value, p.fraction);
        }
        if let Some(theta) = &self.inferred_theta {
            let _ = writeln!(out, "inferred reward:");
            for w in theta {
                let _ = writeln!(out, "  {:<18} {:+.4}", w.feature, w.weight);
            }
        }
        let _ = writeln!(out, "trajectory (seed {}):", self.trajectory.seed);
        for (s, a) in self.trajectory.states.iter().zip(&self.trajectory.actions) {
            let _ = writeln!(out, "  {s}  {a}");
        }
        out
    }
}

/// Inference settings for a scenario: its horizon and start prior, defaults
/// elsewhere.
pub fn rlsp_config(scenario: &ScenarioBundle) -> RlspConfig {
    RlspConfig::new(scenario.alice_horizon, scenario.s_minus_t_prior.clone())
}

fn with_context(scenario: &ScenarioBundle, err: RlspError) -> RlspError {
    match err {
        RlspError::ImpossibleEvidence(msg) => RlspError::ImpossibleEvidence(format!(
            "{} ({} prior, T = {}): {msg}",
            scenario.name,
            scenario.prior_mode.name(),
            scenario.alice_horizon
        )),
        other => other,
    }
}

struct Candidate<P> {
    policy: P,
    theta: Option<RewardParams>,
}

/// Evaluates every grid point and keeps the first best one.
fn tune<P: Policy>(
    scenario: &ScenarioBundle,
    grid: &[f64],
    mut build: impl FnMut(f64) -> Result<Candidate<P>>,
) -> Result<(usize, Vec<GridPoint>, Candidate<P>)> {
    if grid.is_empty() {
        return invalid("tuning grid is empty");
    }
    let mut points: Vec<GridPoint> = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, Candidate<P>)> = None;
    for (i, &value) in grid.iter().enumerate() {
        let candidate = build(value)?;
        let fraction = evaluate_policy(scenario, &candidate.policy)?;
        let better = best.as_ref().is_none_or(|(j, _)| fraction > points[*j].fraction);
        points.push(GridPoint { value, fraction });
        if better {
            best = Some((i, candidate));
        }
    }
    let (i, candidate) = best.expect("grid is non-empty");
    debug_assert!(points.iter().all(|p| p.fraction <= points[i].fraction));
    Ok((i, points, candidate))
}

/// Runs `algorithm` on `scenario`, tuning its hyperparameter over `grid`
/// by true-reward fraction. `grid` is ignored for `spec`.
pub fn run_scenario(
    scenario: &ScenarioBundle,
    algorithm: Algorithm,
    grid: &[f64],
    options: &RunOptions,
) -> Result<EvalReport> {
    let config = rlsp_config(scenario);
    let mut inferred: Option<InferredReward> = None;
    let (tuned, points, best) = match algorithm {
        Algorithm::Spec => {
            let plan = plan_spec(scenario)?;
            let fraction = evaluate_policy(scenario, &plan.policy)?;
            let candidate = Candidate {
                policy: plan.policy,
                theta: Some(scenario.theta_spec.clone()),
            };
            (None, vec![GridPoint { value: 0.0, fraction }], candidate)
        }
        Algorithm::Deviation => {
            let (i, points, c) = tune(scenario, grid, |lambda| {
                Ok(Candidate {
                    policy: plan_deviation(scenario, lambda)?.policy,
                    theta: None,
                })
            })?;
            (Some(grid[i]), points, c)
        }
        Algorithm::Reachability => {
            let penalty = ReachabilityPenalty::new(scenario)?;
            let (i, points, c) = tune(scenario, grid, |lambda| {
                Ok(Candidate {
                    policy: penalty.plan(scenario, lambda)?.policy,
                    theta: None,
                })
            })?;
            (Some(grid[i]), points, c)
        }
        Algorithm::RlspAdditive | Algorithm::SamplerAdditive => {
            let theta_alice = if algorithm == Algorithm::RlspAdditive {
                let result = rlsp_infer(&scenario.env.mdp, &config, scenario.s0)
                    .map_err(|e| with_context(scenario, e))?;
                let theta = result.theta_alice.clone();
                inferred = Some(result);
                theta
            } else {
                let sampler = SamplerConfig {
                    proposal_std: options.sampler.proposal_std,
                    num_samples: options.sampler.num_samples,
                    burn_in: options.sampler.burn_in,
                    seed: options.seed,
                    warm_start: true,
                };
                let samples = mcmc_sample(&scenario.env.mdp, &config, scenario.s0, &sampler)
                    .map_err(|e| with_context(scenario, e))?;
                posterior_mean(&samples)?
            };
            let (i, points, c) = tune(scenario, grid, |lambda| {
                let theta = combine_additive(&theta_alice, &scenario.theta_spec, lambda)?;
                Ok(Candidate {
                    policy: plan_reward(scenario, &theta)?.policy,
                    theta: Some(theta),
                })
            })?;
            if algorithm == Algorithm::SamplerAdditive {
                inferred = Some(InferredReward {
                    theta_alice,
                    final_log_posterior: f64::NAN,
                    iterations_used: 0,
                    converged: true,
                    log_posterior_trace: Vec::new(),
                });
            }
            (Some(grid[i]), points, c)
        }
        Algorithm::RlspBayesian => {
            let mut runs = Vec::new();
            let (i, points, c) = tune(scenario, grid, |sigma| {
                let (theta, result) = final_reward(
                    &scenario.env.mdp,
                    &config,
                    scenario.s0,
                    &scenario.theta_spec,
                    CombineMethod::Bayesian { sigma },
                )
                .map_err(|e| with_context(scenario, e))?;
                runs.push(result);
                Ok(Candidate {
                    policy: plan_reward(scenario, &theta)?.policy,
                    theta: Some(theta),
                })
            })?;
            inferred = Some(runs.swap_remove(i));
            (Some(grid[i]), points, c)
        }
    };
    let fraction = points.iter().map(|p| p.fraction).fold(f64::NEG_INFINITY, f64::max);
    let trajectory = robot_trajectory(scenario, &best.policy, options.seed)?;
    Ok(EvalReport {
        schema_version: SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        algorithm,
        prior_mode: scenario.prior_mode,
        alice_horizon: scenario.alice_horizon,
        robot_horizon: scenario.robot_horizon,
        hyperparameter: tuned.and(algorithm.hyperparameter().map(str::to_string)),
        tuned_value: tuned,
        fraction_of_optimal: fraction,
        verdict: Verdict::from_fraction(fraction),
        grid: if tuned.is_some() { points } else { Vec::new() },
        inferred_theta: inferred.as_ref().map(|r| named(scenario, &r.theta_alice)),
        final_theta: best.theta.as_ref().map(|t| named(scenario, t)),
        inference: inferred.as_ref().map(|r| InferenceSummary {
            iterations: r.iterations_used,
            converged: r.converged,
            final_log_posterior: r.final_log_posterior,
        }),
        trajectory,
    })
}

fn robot_trajectory<P: Policy>(scenario: &ScenarioBundle, policy: &P, seed: u64) -> Result<RobotTrajectory> {
    let mdp = &scenario.env.mdp;
    let start = StateDistribution::delta(mdp.num_states(), scenario.s0);
    let tau = sample_trajectory(mdp, policy, &start, scenario.robot_horizon, seed)?;
    Ok(RobotTrajectory {
        seed,
        states: tau
            .states
            .iter()
            .map(|&s| scenario.env.decode(s).describe(&scenario.env.spec))
            .collect(),
        actions: tau.actions.iter().map(|&a| scenario.env.actions[a].name().to_string()).collect(),
    })
}

/// Rows of the summary table, in order.
pub const TABLE1_ALGORITHMS: [Algorithm; 4] = [
    Algorithm::Spec,
    Algorithm::Deviation,
    Algorithm::Reachability,
    Algorithm::RlspAdditive,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub schema_version: u32,
    pub prior_mode: PriorMode,
    pub scenarios: Vec<String>,
    /// One row per algorithm, one report per scenario.
    pub rows: Vec<Vec<EvalReport>>,
}

impl Table1 {
    pub fn verdicts(&self) -> Vec<Vec<Verdict>> {
        self.rows.iter().map(|r| r.iter().map(|c| c.verdict).collect()).collect()
    }

    pub fn row_label(algorithm: Algorithm) -> &'static str {
        match algorithm {
            Algorithm::RlspAdditive => "rlsp",
            other => other.name(),
        }
    }

    pub fn to_text(&self) -> String {
        let label_width = 13;
        let col = self.scenarios.iter().map(|s| s.len()).max().unwrap_or(0).max(12) + 2;
        let mut out = format!("prior: {}\n{:<label_width$}", self.prior_mode.name(), "");
        for s in &self.scenarios {
            let _ = write!(out, "{s:>col$}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<label_width$}", Self::row_label(row[0].algorithm));
            for cell in row {
                let text = format!("{} {:.3}", cell.verdict.glyph(), cell.fraction_of_optimal);
                let pad = col.saturating_sub(text.chars().count());
                let _ = write!(out, "{}{text}", " ".repeat(pad));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", EvalReport::CSV_HEADER);
        for cell in self.rows.iter().flatten() {
            out += &cell.csv_row();
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Every summary algorithm on every scenario under one start prior.
pub fn table1(prior_mode: PriorMode, options: &RunOptions) -> Result<Table1> {
    let scenarios: Vec<ScenarioBundle> = SCENARIO_NAMES
        .iter()
        .map(|n| build_scenario(n).map(|s| s.with_prior_mode(prior_mode)))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for alg in TABLE1_ALGORITHMS {
        let row = scenarios
            .iter()
            .map(|s| run_scenario(s, alg, &alg.default_grid(), options))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table1 {
        schema_version: SCHEMA_VERSION,
        prior_mode,
        scenarios: SCENARIO_NAMES.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub env: String,
    /// Curve the row belongs to; empty for single-curve sweeps.
    pub series: String,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub parameter: String,
    pub values: Vec<f64>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,env,fraction,series\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:.12},{}", r.param, r.env, r.fraction, r.series);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fractions of one environment and series, in grid order.
    pub fn curve(&self, env: &str, series: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.env == env && r.series == series)
            .map(|r| (r.param, r.fraction))
            .collect()
    }
}

fn sorted_grid(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return invalid("sweep grid is empty");
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    Ok(v)
}

/// RLSP with a uniform start prior for each assumed horizon `T`, with the
/// robot horizon fixed.
pub fn horizon_sweep(env: &str, t_grid: &[usize], options: &RunOptions) -> Result<SweepResult> {
    let base = build_scenario(env)?.with_prior_mode(PriorMode::Uniform);
    let values = sorted_grid(&t_grid.iter().map(|&t| t as f64).collect::<Vec<_>>())?;
    let mut rows = Vec::new();
    for &t in &values {
        let scenario = base.clone().with_alice_horizon(t as usize);
        let report = run_scenario(&scenario, Algorithm::RlspAdditive, &LAMBDA_GRID, options)?;
        rows.push(SweepRow {
            param: t,
            env: env.to_string(),
            series: String::new(),
            fraction: report.fraction_of_optimal,
        });
    }
    Ok(SweepResult {
        schema_version: SCHEMA_VERSION,
        parameter: "alice_horizon".into(),
        values,
        rows,
    })
}

/// Scenarios in the combiner comparison by default.
pub fn combiner_suite() -> Vec<&'static str> {
    SCENARIO_NAMES.iter().copied().filter(|&n| n != "apples").collect()
}

/// Fraction of optimal when planning on `theta` at `temperature`; zero
/// temperature means hard planning.
pub fn fraction_at_temperature(scenario: &ScenarioBundle, theta: &RewardParams, temperature: f64) -> Result<f64> {
    if temperature == 0.0 {
        let rewards = scenario.env.mdp.state_rewards(theta)?;
        let plan = hard_value_iteration(&scenario.env.mdp, |_, s| rewards[s], scenario.robot_horizon)?;
        evaluate_policy(scenario, &plan.policy)
    } else {
        let (policy, _) = soft_value_iteration(&scenario.env.mdp, theta, scenario.robot_horizon, temperature)?;
        evaluate_policy(scenario, &policy)
    }
}

/// Additive (`lambda = 1`, zero-mean prior of std `sigma`) against Bayesian
/// (prior centred on `theta_spec` with std `sigma`), for every `sigma` and
/// planning temperature. Series are named `additive@<temp>` and
/// `bayesian@<temp>`.
pub fn combiner_compare(envs: &[&str], sigma_grid: &[f64], temperatures: &[f64]) -> Result<SweepResult> {
    let values = sorted_grid(sigma_grid)?;
    if !temperatures.contains(&0.0) {
        return invalid("temperatures must include 0 (hard planning)");
    }
    if temperatures.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return invalid("temperatures must be finite and non-negative");
    }
    let mut rows = Vec::new();
    for &env in envs {
        let scenario = build_scenario(env)?;
        let config = rlsp_config(&scenario);
        for &sigma in &values {
            for (name, method) in [
                ("additive", CombineMethod::Additive { lambda: 1.0, sigma }),
                ("bayesian", CombineMethod::Bayesian { sigma }),
            ] {
                let (theta, _) = final_reward(&scenario.env.mdp, &config, scenario.s0, &scenario.theta_spec, method)
                    .map_err(|e| with_context(&scenario, e))?;
                for &temp in temperatures {
                    rows.push(SweepRow {
                        param: sigma,
                        env: env.to_string(),
                        series: format!("{name}@{temp}"),
                        fraction: fraction_at_temperature(&scenario, &theta, temp)?,
                    });
                }
            }
        }
    }
    Ok(SweepResult {
        schema_version: SCHEMA_VERSION,
        parameter: "sigma".into(),
        values,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_thresholds() {
        assert_eq!(Verdict::from_fraction(1.0), Verdict::Pass);
        assert_eq!(Verdict::from_fraction(0.95), Verdict::Pass);
        assert_eq!(Verdict::from_fraction(0.9499), Verdict::Approx);
        assert_eq!(Verdict::from_fraction(0.8), Verdict::Approx);
        assert_eq!(Verdict::from_fraction(0.7999), Verdict::Fail);
        assert_eq!(Verdict::from_fraction(-3.0), Verdict::Fail);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("nosuch".parse::<Algorithm>().unwrap_err().contains("rlsp-additive"));
    }

    #[test]
    fn sorted_grid_rejects_empty() {
        assert!(sorted_grid(&[]).is_err());
        assert_eq!(sorted_grid(&[3.0, 1.0, 3.0]).unwrap(), vec![1.0, 3.0]);
    }
}
