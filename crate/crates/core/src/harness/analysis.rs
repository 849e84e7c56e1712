use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::algorithms::squint_grid;
use crate::conditions::{central_bound, expected_regret_bound, log_grid, rate_exponent, theorem_bound};
use crate::environments::{EnvOracle, EnvSpec};
use crate::error::{ensure, Error, Result};

use super::algo::AlgoSpec;
use super::output::TraceRecord;

/// Smallest horizon used in rate fits.
pub const MIN_FIT_HORIZON: u64 = 1 << 9;

/// Additive constant of the nominal MetaGrad complexity `d ln T + c`.
pub const METAGRAD_NOMINAL_C: f64 = 10.0;

/// Summary of the per-seed final regrets of one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "q", rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    Quantile(f64),
}

impl Statistic {
    /// Evaluates on a sample.
    pub fn of(self, xs: &[f64]) -> f64 {
        match self {
            Statistic::Mean => mean(xs),
            Statistic::Quantile(q) => quantile(xs, q),
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Mean => f.write_str("mean"),
            Statistic::Quantile(q) => write!(f, "quantile:{q}"),
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text.trim().split_once(':') {
            None if text.trim() == "mean" => Ok(Statistic::Mean),
            Some(("quantile", q)) => {
                let q: f64 = q
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad quantile level `{q}`")))?;
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::Parse(format!("quantile level {q} outside [0, 1]")));
                }
                Ok(Statistic::Quantile(q))
            }
            _ => Err(Error::Parse(format!(
                "expected `mean` or `quantile:<q>`, got `{text}`"
            ))),
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean (sample standard deviation over `sqrt(n)`).
pub fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Empirical quantile by linear interpolation between order statistics
/// (`h = (n-1) q`).
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// Final regrets of one environment and algorithm: horizon -> per-seed
/// values in seed order.
pub type FinalRegrets = BTreeMap<u64, Vec<f64>>;

/// Groups the records of final checkpoints (`t == T`) by
/// `(env, algo)` and horizon.
pub fn final_regrets(records: &[TraceRecord]) -> BTreeMap<(String, String), FinalRegrets> {
    let mut rows: BTreeMap<(String, String), BTreeMap<u64, Vec<(u64, f64)>>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.t == r.horizon) {
        rows.entry((r.env.clone(), r.algo.clone()))
            .or_default()
            .entry(r.horizon)
            .or_default()
            .push((r.seed, r.regret));
    }
    rows.into_iter()
        .map(|(k, by_t)| {
            let by_t = by_t
                .into_iter()
                .map(|(t, mut v)| {
                    v.sort_by_key(|&(s, _)| s);
                    (t, v.into_iter().map(|(_, r)| r).collect())
                })
                .collect();
            (k, by_t)
        })
        .collect()
}

/// Least-squares fit of `ln y = intercept + slope ln T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// `(ln T, ln y)` pairs used.
    pub points: Vec<(f64, f64)>,
}

impl RateFit {
    pub fn predict(&self, horizon: f64) -> f64 {
        (self.intercept + self.slope * horizon.ln()).exp()
    }
}

/// Fits a power law to `(T, y)` pairs. Non-positive `y` are dropped with a
/// warning.
pub fn fit_power_law(pairs: &[(u64, f64)]) -> Result<RateFit> {
    let mut points = Vec::with_capacity(pairs.len());
    for &(t, y) in pairs {
        if y > 0.0 && y.is_finite() {
            points.push(((t as f64).ln(), y.ln()));
        } else {
            warn!("dropping horizon {t} from rate fit: statistic {y} is not positive");
        }
    }
    if points.len() < 3 {
        return Err(Error::FitInfeasible(format!(
            "{} usable horizons, at least 3 needed",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    ensure!(sxx > 0.0, "rate fit needs distinct horizons");
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(RateFit {
        slope,
        intercept,
        stderr,
        points,
    })
}

/// Fits the statistic of final regret against `T` over horizons
/// `>= MIN_FIT_HORIZON`.
pub fn fit_rate(regrets: &FinalRegrets, statistic: Statistic) -> Result<RateFit> {
    let pairs: Vec<(u64, f64)> = regrets
        .iter()
        .filter(|(&t, xs)| t >= MIN_FIT_HORIZON && !xs.is_empty())
        .map(|(&t, xs)| (t, statistic.of(xs)))
        .collect();
    fit_power_law(&pairs)
}

/// Which complexity `K_T` enters the theoretical bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KPolicy {
    /// Squint: `-ln pi(f*) + ln J`, the complexity Squint certifies with its
    /// `J`-point rate grid. MetaGrad falls back to nominal.
    #[default]
    SquintCertified,
    /// Squint: `-ln pi(f*) + ln ln T`. MetaGrad: `d ln T + 10`.
    Nominal,
}

impl FromStr for KPolicy {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "squint-certified" => Ok(KPolicy::SquintCertified),
            "nominal" => Ok(KPolicy::Nominal),
            _ => Err(Error::Parse(format!("unknown K_T policy `{text}`"))),
        }
    }
}

/// `K_T` of `algo` on an environment with oracle `oracle`.
pub fn complexity(policy: KPolicy, algo: &AlgoSpec, oracle: &EnvOracle, horizon: u64) -> Result<f64> {
    match algo {
        AlgoSpec::Squint { prior } => {
            let k = oracle
                .best_expert()
                .ok_or_else(|| Error::Config("squint needs an oracle best expert".into()))?;
            let experts = oracle
                .experts
                .ok_or_else(|| Error::Config("oracle lacks an expert count".into()))?;
            let prior_term = -prior.pmf(experts)?.as_slice()[k].ln();
            Ok(match policy {
                KPolicy::SquintCertified => prior_term + (squint_grid(horizon).len() as f64).ln(),
                KPolicy::Nominal => prior_term + (horizon as f64).ln().ln().max(0.0),
            })
        }
        AlgoSpec::MetaGrad {} => {
            let d = oracle
                .geometry
                .as_ref()
                .ok_or_else(|| Error::Config("OCO oracle lacks a geometry".into()))?
                .domain
                .dim();
            Ok(d as f64 * (horizon as f64).ln() + METAGRAD_NOMINAL_C)
        }
        other => Err(Error::Unsupported(format!("{other} has no regret certificate"))),
    }
}

/// Grid of `gamma` values over which the bound is minimized.
pub fn gamma_grid() -> Vec<f64> {
    log_grid(64, 2f64.powi(-12), 0.5)
}

/// `min_gamma theorem_bound(K, gamma, central_bound(B, kappa, 2 gamma), T)`
/// and the minimizing `gamma`.
pub fn optimized_bound(b: f64, kappa: f64, k_t: f64, horizon: u64) -> Result<(f64, f64)> {
    let mut best = (f64::INFINITY, f64::NAN);
    for gamma in gamma_grid() {
        let eps = central_bound(b, kappa, 2.0 * gamma)?;
        let value = theorem_bound(k_t, gamma, eps, horizon)?;
        if value < best.0 {
            best = (value, gamma);
        }
    }
    Ok(best)
}

/// Empirical mean regret against the theoretical bounds at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundMargin {
    #[serde(rename = "T")]
    pub horizon: u64,
    pub seeds: usize,
    pub mean_regret: f64,
    pub std_error: f64,
    pub k_t: f64,
    pub gamma: f64,
    pub theoretical: f64,
    /// `mean_regret / theoretical`.
    pub ratio: f64,
    pub expected_bound: f64,
    /// `mean_regret <= theoretical + 2 std_error`.
    pub within: bool,
}

pub fn compare_bound(
    regrets: &FinalRegrets,
    oracle: &EnvOracle,
    algo: &AlgoSpec,
    policy: KPolicy,
) -> Result<Vec<BoundMargin>> {
    let (b, kappa) = (oracle.bernstein_b, oracle.kappa);
    regrets
        .iter()
        .filter(|(_, xs)| !xs.is_empty())
        .map(|(&t, xs)| {
            let k_t = complexity(policy, algo, oracle, t)?;
            let (theoretical, gamma) = optimized_bound(b, kappa, k_t, t)?;
            let (m, se) = (mean(xs), std_error(xs));
            Ok(BoundMargin {
                horizon: t,
                seeds: xs.len(),
                mean_regret: m,
                std_error: se,
                k_t,
                gamma,
                theoretical,
                ratio: m / theoretical,
                expected_bound: expected_regret_bound(b, kappa, k_t, t)?,
                within: m <= theoretical + 2.0 * se,
            })
        })
        .collect()
}

/// Minimum seeds per horizon needed for the `1 - delta` quantile.
pub fn min_seeds(delta: f64) -> usize {
    if delta >= 0.1 {
        20
    } else {
        200
    }
}

pub const QUANTILE_DELTAS: [f64; 2] = [0.1, 0.01];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    #[serde(rename = "T")]
    pub horizon: u64,
    pub delta: f64,
    pub seeds: usize,
    pub quantile: f64,
    /// `(K_T - ln delta)^(1/(2-kappa)) T^((1-kappa)/(2-kappa))`, when `K_T`
    /// is defined.
    pub shape: Option<f64>,
}

/// Quantiles of one `delta` across horizons with the slopes of the
/// empirical quantiles and of the theoretical shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSeries {
    pub delta: f64,
    pub rows: Vec<QuantileRow>,
    pub slope: Option<f64>,
    pub shape_slope: Option<f64>,
}

/// Per-horizon `1 - delta` regret quantiles. A `delta` is skipped (with a
/// warning) at horizons with too few seeds; `complexity` yields `K_T`.
pub fn quantile_report(
    regrets: &FinalRegrets,
    kappa: f64,
    deltas: &[f64],
    complexity: impl Fn(u64) -> Option<f64>,
) -> Vec<QuantileSeries> {
    let mut out = Vec::new();
    for &delta in deltas {
        let mut rows = Vec::new();
        for (&t, xs) in regrets {
            if xs.len() < min_seeds(delta) {
                debug!(
                    "skipping delta={delta} at T={t}: {} seeds, {} needed",
                    xs.len(),
                    min_seeds(delta)
                );
                continue;
            }
            let shape = complexity(t).map(|k| {
                (k - delta.ln()).powf(1.0 / (2.0 - kappa)) * (t as f64).powf(rate_exponent(kappa))
            });
            rows.push(QuantileRow {
                horizon: t,
                delta,
                seeds: xs.len(),
                quantile: quantile(xs, 1.0 - delta),
                shape,
            });
        }
        if rows.is_empty() {
            continue;
        }
        let fit = |ys: Vec<(u64, f64)>| {
            let ys: Vec<(u64, f64)> = ys.into_iter().filter(|p| p.0 >= MIN_FIT_HORIZON).collect();
            fit_power_law(&ys).ok().map(|f| f.slope)
        };
        let slope = fit(rows.iter().map(|r| (r.horizon, r.quantile)).collect());
        let shape_slope = if rows.iter().all(|r| r.shape.is_some()) {
            fit(rows.iter().map(|r| (r.horizon, r.shape.unwrap_or(0.0))).collect())
        } else {
            None
        };
        out.push(QuantileSeries {
            delta,
            rows,
            slope,
            shape_slope,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub statistic: String,
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: Vec<(f64, f64)>,
}

/// Analysis of one environment and algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub env: String,
    pub algo: String,
    pub kappa: Option<f64>,
    pub predicted_slope: Option<f64>,
    pub fits: Vec<FitEntry>,
    pub bound_margins: Vec<BoundMargin>,
    pub quantiles: Vec<QuantileSeries>,
    /// Analyses that could not be carried out.
    pub notes: Vec<String>,
}

/// Builds one report per `(env, algo)` group of the records.
pub fn build_reports(
    records: &[TraceRecord],
    statistics: &[Statistic],
    policy: KPolicy,
) -> Result<Vec<Report>> {
    let groups = final_regrets(records);
    if groups.is_empty() {
        return Err(Error::Contract("no final-checkpoint records to report on".into()));
    }
    let mut reports = Vec::new();
    for ((env, algo), regrets) in groups {
        let mut notes = Vec::new();
        let mut fits = Vec::new();
        for &s in statistics {
            match fit_rate(&regrets, s) {
                Ok(f) => fits.push(FitEntry {
                    statistic: s.to_string(),
                    slope: f.slope,
                    stderr: f.stderr,
                    intercept: f.intercept,
                    points: f.points,
                }),
                Err(e) => notes.push(format!("fit {s}: {e}")),
            }
        }
        let spec = EnvSpec::parse(&env);
        let algo_spec: Result<AlgoSpec> = algo.parse();
        let oracle = match (&spec, &algo_spec) {
            (Ok(spec), Ok(a)) => spec.oracle(a.setting()).map_err(|e| e.to_string()),
            (Err(e), _) | (_, Err(e)) => Err(e.to_string()),
        };
        let (mut kappa, mut bound_margins, mut quantiles) = (None, Vec::new(), Vec::new());
        match (oracle, algo_spec) {
            (Ok(oracle), Ok(a)) => {
                kappa = Some(oracle.kappa);
                match compare_bound(&regrets, &oracle, &a, policy) {
                    Ok(m) => bound_margins = m,
                    Err(e) => notes.push(format!("bounds: {e}")),
                }
                quantiles = quantile_report(&regrets, oracle.kappa, &QUANTILE_DELTAS, |t| {
                    complexity(policy, &a, &oracle, t).ok()
                });
            }
            (Err(e), _) => notes.push(format!("oracle: {e}")),
            (_, Err(e)) => notes.push(format!("algorithm: {e}")),
        }
        reports.push(Report {
            env,
            algo,
            kappa,
            predicted_slope: kappa.map(rate_exponent),
            fits,
            bound_margins,
            quantiles,
            notes,
        });
    }
    Ok(reports)
}
