//! Brute-force verification suites for the inequalities in this module.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environments::{builtin_envs, EnvSpec, Setting};
use crate::error::Result;
use crate::seed::{derive_seed, stream, SeedLabel};

use super::cgf::{cgf_profile, default_eta_grid, exact_cgf, mc_cgf_profile, PredictorCurve};
use super::esi::{check_chain_rule, check_convex_combination, esi_check, Chain};
use super::squeezer::{admissible_c, squeezer_c, squeezer_check, Squeeze};
use super::{central_bound, FiniteDist, RealDist};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Squeezer,
    Esi,
    Central,
    AdmissibleC,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Squeezer, Suite::Esi, Suite::Central, Suite::AdmissibleC];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Squeezer => "squeezer",
            Suite::Esi => "esi",
            Suite::Central => "central",
            Suite::AdmissibleC => "admissible_c",
        }
    }

    pub fn parse(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub suites: Vec<Suite>,
    /// Random 5-atom laws in the squeezer sweep.
    pub squeezer_dists: usize,
    /// Random fixtures per ESI property.
    pub esi_fixtures: usize,
    /// Monte-Carlo rounds for environments without exact laws.
    pub mc_rounds: usize,
    pub seed: u64,
    /// Reverses the squeezer verdict; used to test that failures surface.
    #[serde(default)]
    pub inject_fault: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            suites: Suite::ALL.to_vec(),
            squeezer_dists: 10_000,
            esi_fixtures: 1_000,
            mc_rounds: 100_000,
            seed: 0,
            inject_fault: false,
        }
    }
}

/// One named check. `slack` is the worst margin; negative means violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub slack: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, pass: bool, slack: f64, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            pass,
            slack,
            detail: detail.into(),
        }
    }
}

/// `epsilon` profile of one environment against its central bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub env: String,
    pub setting: Setting,
    pub eta_grid: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<f64>>,
    pub bound: Vec<f64>,
    pub per_f: Vec<PredictorCurve>,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub profiles: Vec<ProfileReport>,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn rng_for(seed: u64, suite: &str) -> ChaCha8Rng {
    stream(derive_seed(seed, &[SeedLabel::from("verify"), SeedLabel::from(suite)]))
}

fn random_weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
    // absorb the rounding error so the sum is 1 to the last bit
    let rest: f64 = w[1..].iter().sum();
    w[0] = 1.0 - rest;
    w
}

/// A random law on `[-1, 1]` with `atoms` atoms.
pub fn random_dist(rng: &mut impl Rng, atoms: usize) -> FiniteDist {
    let w = random_weights(rng, atoms);
    FiniteDist::new(
        w.into_iter()
            .map(|p| (rng.random_range(-1.0..=1.0), p))
            .collect(),
    )
    .expect("valid by construction")
}

/// 8 x 8 grid of `(eta, gamma)` pairs with `eta <= gamma`.
pub fn squeezer_grid() -> Vec<(f64, f64)> {
    let gammas = super::cgf::log_grid(8, 1.0 / 64.0, 2.0);
    let mut pairs = Vec::with_capacity(64);
    for &gamma in &gammas {
        for i in 1..=8 {
            pairs.push((gamma * i as f64 / 8.0, gamma));
        }
    }
    pairs
}

fn squeezer_suite(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut rng = rng_for(opts.seed, "squeezer");
    let grid = squeezer_grid();
    let (mut worst, mut failures, mut checked, mut vacuous) = (f64::INFINITY, 0usize, 0usize, 0usize);
    for _ in 0..opts.squeezer_dists {
        let dist = random_dist(&mut rng, 5);
        for &(eta, gamma) in &grid {
            let eps = exact_cgf(&dist, gamma);
            match squeezer_check(&dist, eta, gamma, eps)? {
                Squeeze::Vacuous => vacuous += 1,
                out @ Squeeze::Checked { slack } => {
                    checked += 1;
                    worst = worst.min(slack);
                    if out.passed() == opts.inject_fault {
                        failures += 1;
                    }
                }
            }
        }
    }
    Ok(vec![CheckResult::new(
        "squeezer",
        failures == 0,
        worst,
        format!("{checked} checked, {vacuous} vacuous, {failures} failed"),
    )])
}

/// A random law of an arbitrary real variable shifted so that
/// `E[exp(X)] = exp(-u)` for a random `u >= 0`.
fn random_esi_dist(rng: &mut impl Rng, atoms: usize) -> RealDist {
    let w = random_weights(rng, atoms);
    let values: Vec<f64> = (0..atoms).map(|_| rng.random_range(-3.0..3.0)).collect();
    let log_mgf = w
        .iter()
        .zip(&values)
        .map(|(p, v)| p * v.exp())
        .sum::<f64>()
        .ln();
    let u = if rng.random::<f64>() < 0.25 { 0.0 } else { rng.random_range(0.0..0.5) };
    RealDist::new(values.iter().map(|v| v - log_mgf - u).zip(w).collect()).expect("valid by construction")
}

fn esi_suite(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut rng = rng_for(opts.seed, "esi");
    let n = opts.esi_fixtures;

    let (mut neg_fail, mut neg_worst) = (0usize, f64::INFINITY);
    for _ in 0..n {
        let atoms = rng.random_range(1..=6);
        let r = esi_check(&random_esi_dist(&mut rng, atoms));
        if r.is_esi {
            neg_worst = neg_worst.min(-r.mean);
            for t in &r.tails {
                neg_worst = neg_worst.min(t.delta - t.probability);
            }
        }
        if !r.pass {
            neg_fail += 1;
        }
    }

    let (mut mix_fail, mut mix_worst) = (0usize, f64::INFINITY);
    for _ in 0..n {
        let k = rng.random_range(2..=4);
        let families: Vec<RealDist> = (0..k)
            .map(|_| {
                let atoms = rng.random_range(1..=5);
                random_esi_dist(&mut rng, atoms)
            })
            .collect();
        let weights = random_weights(&mut rng, k);
        if check_convex_combination(&families, &weights)? == Some(false) {
            mix_fail += 1;
        }
        let m = super::esi::mixture(&families, &weights)?;
        mix_worst = mix_worst.min(1.0 - m.exp_moment());
    }

    let (mut chain_fail, mut chain_worst) = (0usize, f64::INFINITY);
    for _ in 0..n {
        let len = rng.random_range(1..=5);
        let atoms = rng.random_range(1..=3);
        let first = random_esi_dist(&mut rng, atoms);
        let kernels: Vec<Vec<RealDist>> = (1..len)
            .map(|_| (0..atoms).map(|_| random_esi_dist(&mut rng, atoms)).collect())
            .collect();
        let chain = Chain { first, kernels };
        if check_chain_rule(&chain)? == Some(false) {
            chain_fail += 1;
        }
        chain_worst = chain_worst.min(1.0 - chain.exp_moment_of_sum());
    }

    Ok(vec![
        CheckResult::new("esi.negativity", neg_fail == 0, neg_worst, format!("{n} fixtures")),
        CheckResult::new("esi.convex_combination", mix_fail == 0, mix_worst, format!("{n} fixtures")),
        CheckResult::new("esi.chain_rule", chain_fail == 0, chain_worst, format!("{n} chains, length <= 5")),
    ])
}

/// Profile of one environment against `central_bound(B, kappa, eta)`, exact
/// when the oracle has laws and Monte-Carlo otherwise.
pub fn central_domination(
    spec: &EnvSpec,
    setting: Setting,
    etas: &[f64],
    mc_rounds: usize,
    seed: u64,
) -> Result<ProfileReport> {
    let oracle = spec.oracle(setting)?;
    let profile = if oracle.excess_laws.is_some() {
        cgf_profile(&oracle, etas)?
    } else {
        let s = derive_seed(seed, &[SeedLabel::from("central"), SeedLabel::from(spec.id())]);
        mc_cgf_profile(&spec.excess_samples(setting, mc_rounds, s)?, etas)
    };
    let bound: Vec<f64> = etas
        .iter()
        .map(|&eta| central_bound(oracle.bernstein_b, oracle.kappa, eta))
        .collect::<Result<_>>()?;
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for i in 0..etas.len() {
        let se = profile.std_errors.as_ref().map_or(0.0, |e| e[i]);
        let slack = bound[i] + 3.0 * se - profile.values[i];
        worst = worst.min(slack);
        if slack < -1e-12 {
            violations += 1;
        }
    }
    let mode = if profile.std_errors.is_some() { "mc" } else { "exact" };
    let check = CheckResult::new(
        format!("central.{}.{}", setting, spec.id()),
        violations == 0,
        worst,
        format!("{mode}, {violations} violations on {} etas", etas.len()),
    );
    Ok(ProfileReport {
        env: spec.id(),
        setting,
        eta_grid: profile.eta_grid,
        values: profile.values,
        std_errors: profile.std_errors,
        bound,
        per_f: profile.per_f,
        checks: vec![check],
    })
}

fn central_suite(opts: &VerifyOptions) -> Result<(Vec<CheckResult>, Vec<ProfileReport>)> {
    let etas = default_eta_grid();
    let mut checks = Vec::new();
    let mut profiles = Vec::new();
    for (spec, setting) in builtin_envs() {
        let p = central_domination(&spec, setting, &etas, opts.mc_rounds, opts.seed)?;
        checks.extend(p.checks.iter().cloned());
        profiles.push(p);
    }
    Ok((checks, profiles))
}

fn admissible_suite() -> Result<Vec<CheckResult>> {
    let mut identity = 0.0f64;
    for i in 1..=100 {
        let eta = i as f64 / 100.0 * 2.0;
        identity = identity.max((admissible_c(eta, 2.0 * eta)? - squeezer_c(eta)).abs());
    }
    let mut worst = f64::INFINITY;
    let n = 200;
    for i in 0..=n {
        let gamma = 4.0 * i as f64 / n as f64;
        for j in 0..=n {
            let eta = gamma * j as f64 / n as f64;
            worst = worst.min(1.0 - 2.0 * admissible_c(eta, gamma)? * eta);
        }
    }
    Ok(vec![
        CheckResult::new(
            "admissible_c.identity",
            identity <= 1e-12,
            1e-12 - identity,
            "gamma = 2 eta on 100 points",
        ),
        CheckResult::new(
            "admissible_c.derv_sign",
            worst >= 0.0,
            worst,
            "1 >= 2 c eta on a 201 x 201 grid, gamma <= 4",
        ),
    ])
}

/// Runs the selected suites.
pub fn verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut report = VerifyReport {
        checks: Vec::new(),
        profiles: Vec::new(),
    };
    for suite in &opts.suites {
        match suite {
            Suite::Squeezer => report.checks.extend(squeezer_suite(opts)?),
            Suite::Esi => report.checks.extend(esi_suite(opts)?),
            Suite::Central => {
                let (c, p) = central_suite(opts)?;
                report.checks.extend(c);
                report.profiles.extend(p);
            }
            Suite::AdmissibleC => report.checks.extend(admissible_suite()?),
        }
    }
    Ok(report)
}
