//! Stochastic loss generators with exactly known Bernstein parameters.
//!
//! Every environment is oblivious: its losses are a function of the stream
//! seed and the round index only. An [`EnvSpec`] names a family and its
//! parameters, [`EnvSpec::oracle`] reports the ground truth and
//! [`EnvSpec::start`] opens a loss stream.

mod absolute;
mod adversarial;
mod gap;
mod hinge;
mod kappa;
mod markov;

pub use absolute::AbsoluteParams;
pub use adversarial::AdversarialParams;
pub use gap::{GapNoise, GapParams};
pub use hinge::{sphere_abs_coordinate_mean, HingeParams, LabelModel, MU_SAMPLES, NOISELESS_CONSTANT};
pub use kappa::{KappaParams, DEFAULT_EXPERTS};
pub use markov::{MarkovParams, MAX_ORDER};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algorithms::Domain;
use crate::conditions::FiniteDist;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream, SeedLabel};
use crate::types::{LossEvent, LossVector};

use kappa::KappaSampler;
use markov::MarkovSampler;

/// The two online protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Prediction with expert advice.
    Hedge,
    /// Online convex optimization.
    Oco,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::Hedge => "hedge",
            Setting::Oco => "oco",
        })
    }
}

/// The risk minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Best {
    Expert(usize),
    Point(Vec<f64>),
}

/// Domain, diameter and gradient bound of an OCO environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcoGeometry {
    pub domain: Domain,
    pub diameter: f64,
    pub grad_bound: f64,
}

/// Exact law of the excess loss of one representative predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessLaw {
    pub label: String,
    pub dist: FiniteDist,
}

impl ExcessLaw {
    pub fn new(label: impl Into<String>, dist: FiniteDist) -> Self {
        ExcessLaw {
            label: label.into(),
            dist,
        }
    }
}

/// Ground truth about an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvOracle {
    pub best: Best,
    pub kappa: f64,
    /// Bernstein constant as stated for the family (an upper bound).
    pub bernstein_b: f64,
    /// `sup_f E[x^2] / E[x]^kappa` when it is known in closed form.
    pub exact_b: Option<f64>,
    pub excess_laws: Option<Vec<ExcessLaw>>,
    pub experts: Option<usize>,
    pub geometry: Option<OcoGeometry>,
    /// Monte-Carlo `|mu|` and its standard error (hinge only).
    pub mu_norm: Option<(f64, f64)>,
}

impl EnvOracle {
    pub fn best_expert(&self) -> Option<usize> {
        match self.best {
            Best::Expert(k) => Some(k),
            Best::Point(_) => None,
        }
    }

    pub fn best_point(&self) -> Option<&[f64]> {
        match &self.best {
            Best::Expert(_) => None,
            Best::Point(u) => Some(u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params")]
pub enum EnvSpec {
    #[serde(rename = "gap", alias = "GapExperts")]
    Gap(GapParams),
    #[serde(rename = "kappa", alias = "KappaExperts")]
    Kappa(KappaParams),
    #[serde(rename = "markov", alias = "MarkovExperts")]
    Markov(MarkovParams),
    #[serde(rename = "hinge", alias = "HingeBall")]
    Hinge(HingeParams),
    #[serde(rename = "abs", alias = "absolute", alias = "AbsoluteLoss")]
    Absolute(AbsoluteParams),
    #[serde(rename = "adv", alias = "adversarial", alias = "AdversarialSigns")]
    Adversarial(AdversarialParams),
}

impl EnvSpec {
    pub fn family(&self) -> &'static str {
        match self {
            EnvSpec::Gap(_) => "gap",
            EnvSpec::Kappa(_) => "kappa",
            EnvSpec::Markov(_) => "markov",
            EnvSpec::Hinge(_) => "hinge",
            EnvSpec::Absolute(_) => "abs",
            EnvSpec::Adversarial(_) => "adv",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnvSpec::Gap(p) => p.validate(),
            EnvSpec::Kappa(p) => p.validate(),
            EnvSpec::Markov(p) => p.validate(),
            EnvSpec::Hinge(p) => p.validate(),
            EnvSpec::Absolute(p) => p.validate(),
            EnvSpec::Adversarial(p) => p.validate(),
        }
    }

    pub fn supports(&self, setting: Setting) -> bool {
        match self {
            EnvSpec::Gap(_) | EnvSpec::Kappa(_) | EnvSpec::Markov(_) => setting == Setting::Hedge,
            EnvSpec::Hinge(_) | EnvSpec::Absolute(_) => setting == Setting::Oco,
            EnvSpec::Adversarial(_) => true,
        }
    }

    /// The setting used when none is requested.
    pub fn default_setting(&self) -> Setting {
        if self.supports(Setting::Hedge) {
            Setting::Hedge
        } else {
            Setting::Oco
        }
    }

    fn check_setting(&self, setting: Setting) -> Result<()> {
        if self.supports(setting) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "environment {} has no {setting} realization",
                self.id()
            )))
        }
    }

    pub fn oracle(&self, setting: Setting) -> Result<EnvOracle> {
        self.check_setting(setting)?;
        match self {
            EnvSpec::Gap(p) => p.oracle(),
            EnvSpec::Kappa(p) => p.oracle(),
            EnvSpec::Markov(p) => p.oracle(),
            EnvSpec::Hinge(p) => p.oracle(),
            EnvSpec::Absolute(p) => p.oracle(),
            EnvSpec::Adversarial(p) => match setting {
                Setting::Hedge => p.hedge_oracle(),
                Setting::Oco => p.oco_oracle(),
            },
        }
    }

    /// Seed of the loss stream for a run seed. The algorithm never enters.
    pub fn stream_seed(&self, run_seed: u64) -> u64 {
        derive_seed(run_seed, &[SeedLabel::from("env"), SeedLabel::from(self.id())])
    }

    /// Opens the loss stream keyed directly by `stream_seed`.
    pub fn start(&self, setting: Setting, stream_seed: u64) -> Result<EnvState> {
        self.validate()?;
        self.check_setting(setting)?;
        let sampler = match (self, setting) {
            (EnvSpec::Gap(p), _) => Sampler::Gap(p.clone()),
            (EnvSpec::Kappa(p), _) => Sampler::Kappa(p.sampler()),
            (EnvSpec::Markov(p), _) => Sampler::Markov(MarkovSampler::new(p.clone())),
            (EnvSpec::Hinge(p), _) => Sampler::Hinge {
                u_bar: p.u_bar(),
                params: p.clone(),
            },
            (EnvSpec::Absolute(p), _) => Sampler::Absolute(p.clone()),
            (EnvSpec::Adversarial(p), Setting::Hedge) => Sampler::AdvHedge(p.clone()),
            (EnvSpec::Adversarial(p), Setting::Oco) => Sampler::AdvOco(p.clone()),
        };
        Ok(EnvState {
            setting,
            rng: stream(stream_seed),
            sampler,
            buf: Vec::new(),
            round: 0,
        })
    }

    /// Number of experts in the Hedge realization.
    pub fn experts(&self) -> Option<usize> {
        match self {
            EnvSpec::Gap(p) => Some(p.experts),
            EnvSpec::Kappa(p) => Some(p.deltas().len()),
            EnvSpec::Markov(p) => Some(p.experts()),
            EnvSpec::Adversarial(p) => Some(p.experts),
            EnvSpec::Hinge(_) | EnvSpec::Absolute(_) => None,
        }
    }

    /// Points at which OCO excess losses are profiled.
    pub fn representative_points(&self) -> Vec<Vec<f64>> {
        match self {
            EnvSpec::Hinge(p) => p.representative_points(),
            EnvSpec::Absolute(p) => p.representative_points().into_iter().map(|w| vec![w]).collect(),
            EnvSpec::Adversarial(p) => p.representative_points(),
            _ => Vec::new(),
        }
    }

    /// Draws `rounds` excess losses for a set of representative predictors.
    ///
    /// Hedge: every expert other than `k*` (a strided subset when there are
    /// more than 256). OCO: the representative points, with the linearized
    /// excess loss `<w - u*, grad l(w)>`.
    pub fn excess_samples(&self, setting: Setting, rounds: usize, seed: u64) -> Result<ExcessSamples> {
        let oracle = self.oracle(setting)?;
        let mut env = self.start(setting, seed)?;
        match setting {
            Setting::Hedge => {
                let k_star = oracle.best_expert().expect("hedge oracle names an expert");
                let n = self.experts().unwrap_or(0);
                let stride = n.div_ceil(256).max(1);
                let mut predictors: Vec<usize> = (0..n).step_by(stride).filter(|&k| k != k_star).collect();
                if let EnvSpec::Markov(p) = self {
                    // experts that differ from f* on a single context
                    for a in 0..p.contexts() {
                        let f = k_star ^ (1 << a);
                        if !predictors.contains(&f) {
                            predictors.push(f);
                        }
                    }
                    predictors.sort_unstable();
                }
                let mut samples = vec![Vec::with_capacity(rounds); predictors.len()];
                for _ in 0..rounds {
                    let losses = env.next_losses()?;
                    let best = losses[k_star];
                    for (s, &k) in samples.iter_mut().zip(&predictors) {
                        s.push(losses[k] - best);
                    }
                }
                Ok(ExcessSamples {
                    labels: predictors.iter().map(|k| format!("k={k}")).collect(),
                    samples,
                })
            }
            Setting::Oco => {
                let u = oracle.best_point().expect("oco oracle names a point").to_vec();
                let points = self.representative_points();
                let diffs: Vec<Vec<f64>> = points
                    .iter()
                    .map(|w| w.iter().zip(&u).map(|(a, b)| a - b).collect())
                    .collect();
                let mut samples = vec![Vec::with_capacity(rounds); points.len()];
                for _ in 0..rounds {
                    let event = env.next_event()?;
                    for ((s, w), d) in samples.iter_mut().zip(&points).zip(&diffs) {
                        let g = event.gradient(w);
                        s.push(d.iter().zip(&g).map(|(a, b)| a * b).sum());
                    }
                }
                Ok(ExcessSamples {
                    labels: points.iter().map(|w| format!("w={w:?}")).collect(),
                    samples,
                })
            }
        }
    }

    /// Canonical mini-language form, e.g. `gap:alpha=0.2,K=8`.
    pub fn id(&self) -> String {
        self.to_string()
    }

    /// Parses the mini-language `family:key=value,...` or a JSON object.
    pub fn parse(text: &str) -> Result<Self> {
        text.parse()
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for EnvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvSpec::Gap(p) => {
                write!(f, "gap:alpha={},K={}", p.alpha, p.experts)?;
                if p.mu0 != 0.3 {
                    write!(f, ",mu0={}", p.mu0)?;
                }
                if p.noise == GapNoise::Deterministic {
                    f.write_str(",noise=deterministic")?;
                }
                Ok(())
            }
            EnvSpec::Kappa(p) => {
                write!(f, "kappa:kappa={},K={}", p.kappa, p.experts)?;
                if let Some(d) = p.delta {
                    write!(f, ",delta={d}")?;
                }
                if let Some(d) = &p.deltas {
                    write!(f, ",deltas={}", join(d))?;
                }
                Ok(())
            }
            EnvSpec::Markov(p) => write!(f, "markov:m={},p={}", p.m, join(&p.p)),
            EnvSpec::Hinge(p) => {
                write!(f, "hinge:d={}", p.d)?;
                if let LabelModel::Logistic { scale } = p.labels {
                    write!(f, ",labels=logistic,scale={scale}")?;
                }
                if let Some(u) = &p.u_bar {
                    write!(f, ",u_bar={}", join(u))?;
                }
                Ok(())
            }
            EnvSpec::Absolute(AbsoluteParams::Uniform) => f.write_str("abs:uniform"),
            EnvSpec::Absolute(AbsoluteParams::TwoPoint { a, b, p }) => {
                write!(f, "abs:two-point,a={a},b={b},p={p}")
            }
            EnvSpec::Adversarial(p) => write!(f, "adv:K={}", p.experts),
        }
    }
}

/// Key/value arguments of the mini-language. A bare token after `key=v`
/// continues that key's list (`p=0.9,0.1`); a bare token before any key is
/// a flag (`abs:two-point`).
struct Args {
    family: String,
    flags: Vec<String>,
    values: BTreeMap<String, Vec<String>>,
}

impl Args {
    fn parse(text: &str) -> Result<Self> {
        let (family, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut args = Args {
            family: family.trim().to_owned(),
            flags: Vec::new(),
            values: BTreeMap::new(),
        };
        let mut last: Option<String> = None;
        for token in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match token.split_once('=') {
                Some((k, v)) => {
                    let k = k.trim().to_owned();
                    if args.values.contains_key(&k) {
                        return Err(Error::Parse(format!("duplicate key `{k}` in `{text}`")));
                    }
                    args.values.insert(k.clone(), vec![v.trim().to_owned()]);
                    last = Some(k);
                }
                None => match &last {
                    Some(k) => args.values.get_mut(k).expect("key inserted").push(token.to_owned()),
                    None => args.flags.push(token.to_owned()),
                },
            }
        }
        Ok(args)
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) if v.len() == 1 => v[0]
                .parse()
                .map(Some)
                .map_err(|_| Error::Parse(format!("bad value `{}` for `{key}`", v[0]))),
            Some(_) => Err(Error::Parse(format!("`{key}` takes a single value"))),
        }
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?
            .ok_or_else(|| Error::Parse(format!("{} environment needs `{key}`", self.family)))
    }

    fn take_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) => v
                .iter()
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::Parse(format!("bad number `{s}` in `{key}`")))
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(k) = self.values.keys().next() {
            return Err(Error::Parse(format!("unknown key `{k}` for {}", self.family)));
        }
        if let Some(flag) = self.flags.first() {
            return Err(Error::Parse(format!("unexpected `{flag}` for {}", self.family)));
        }
        Ok(())
    }
}

impl FromStr for EnvSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            let spec: EnvSpec = serde_json::from_str(text)
                .map_err(|e| Error::Parse(format!("bad environment JSON: {e}")))?;
            spec.validate()?;
            return Ok(spec);
        }
        let mut args = Args::parse(text)?;
        let spec = match args.family.as_str() {
            "gap" | "GapExperts" => {
                let mut p = GapParams::new(args.require("alpha")?, args.require("K")?);
                if let Some(mu0) = args.take("mu0")? {
                    p.mu0 = mu0;
                }
                if let Some(noise) = args.take::<String>("noise")? {
                    p.noise = match noise.as_str() {
                        "bernoulli" => GapNoise::Bernoulli,
                        "deterministic" | "0" => GapNoise::Deterministic,
                        other => return Err(Error::Parse(format!("unknown gap noise `{other}`"))),
                    };
                }
                EnvSpec::Gap(p)
            }
            "kappa" | "KappaExperts" => {
                let mut p = KappaParams::new(args.require("kappa")?, DEFAULT_EXPERTS);
                if let Some(k) = args.take("K")? {
                    p.experts = k;
                }
                p.delta = args.take("delta")?;
                p.deltas = args.take_list("deltas")?;
                if let (Some(d), None) = (&p.deltas, args.values.get("K")) {
                    p.experts = d.len();
                }
                EnvSpec::Kappa(p)
            }
            "markov" | "MarkovExperts" => EnvSpec::Markov(MarkovParams {
                m: args.require("m")?,
                p: args
                    .take_list("p")?
                    .ok_or_else(|| Error::Parse("markov environment needs `p`".into()))?,
            }),
            "hinge" | "HingeBall" => {
                let mut p = HingeParams::new(args.require("d")?);
                match args.take::<String>("labels")?.as_deref() {
                    None | Some("noiseless") => {}
                    Some("logistic") => {
                        p.labels = LabelModel::Logistic {
                            scale: args.require("scale")?,
                        }
                    }
                    Some(other) => return Err(Error::Parse(format!("unknown label model `{other}`"))),
                }
                p.u_bar = args.take_list("u_bar")?;
                EnvSpec::Hinge(p)
            }
            "abs" | "absolute" | "AbsoluteLoss" => {
                let kind = args.flags.pop();
                match kind.as_deref() {
                    None | Some("uniform") => EnvSpec::Absolute(AbsoluteParams::Uniform),
                    Some("two-point") | Some("two_point") => EnvSpec::Absolute(AbsoluteParams::TwoPoint {
                        a: args.require("a")?,
                        b: args.require("b")?,
                        p: args.require("p")?,
                    }),
                    Some(other) => return Err(Error::Parse(format!("unknown absolute-loss law `{other}`"))),
                }
            }
            "adv" | "adversarial" | "AdversarialSigns" => EnvSpec::Adversarial(AdversarialParams {
                experts: args.require("K")?,
            }),
            other => return Err(Error::Parse(format!("unknown environment family `{other}`"))),
        };
        args.finish()?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Environments used by the verification suites and the CLI, one per family
/// variant, each in every setting it supports.
pub fn builtin_envs() -> Vec<(EnvSpec, Setting)> {
    let texts = [
        "gap:alpha=0.2,K=8",
        "gap:alpha=0.2,K=8,noise=deterministic",
        "kappa:kappa=0,K=64",
        "kappa:kappa=0.5,K=64",
        "kappa:kappa=1,K=64",
        "markov:m=1,p=0.9,0.1",
        "markov:m=2,p=0.9,0.2,0.3,0.8",
        "hinge:d=4",
        "abs:uniform",
        "abs:two-point,a=0.2,b=0.7,p=0.8",
        "adv:K=8",
    ];
    let mut out = Vec::new();
    for text in texts {
        let spec = EnvSpec::parse(text).expect("built-in spec parses");
        for setting in [Setting::Hedge, Setting::Oco] {
            if spec.supports(setting) {
                out.push((spec.clone(), setting));
            }
        }
    }
    out
}

/// How a run seed becomes the environment's stream seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// `derive_seed(run_seed, ["env", id])`.
    #[default]
    Derived,
    /// The run seed itself.
    Raw,
}

/// JSON form of an environment: `{"family", "params", "seed_policy"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    #[serde(flatten)]
    pub spec: EnvSpec,
    #[serde(default)]
    pub seed_policy: SeedPolicy,
}

impl EnvConfig {
    pub fn stream_seed(&self, run_seed: u64) -> u64 {
        match self.seed_policy {
            SeedPolicy::Derived => self.spec.stream_seed(run_seed),
            SeedPolicy::Raw => run_seed,
        }
    }
}

impl From<EnvSpec> for EnvConfig {
    fn from(spec: EnvSpec) -> Self {
        EnvConfig {
            spec,
            seed_policy: SeedPolicy::Derived,
        }
    }
}

/// Per-predictor excess-loss draws.
#[derive(Debug, Clone)]
pub struct ExcessSamples {
    pub labels: Vec<String>,
    pub samples: Vec<Vec<f64>>,
}

/// One round's output.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Losses(LossVector),
    Event(LossEvent),
}

#[derive(Debug, Clone)]
enum Sampler {
    Gap(GapParams),
    Kappa(KappaSampler),
    Markov(MarkovSampler),
    Hinge { params: HingeParams, u_bar: Vec<f64> },
    Absolute(AbsoluteParams),
    AdvHedge(AdversarialParams),
    AdvOco(AdversarialParams),
}

/// A running loss stream.
#[derive(Debug, Clone)]
pub struct EnvState {
    setting: Setting,
    rng: ChaCha8Rng,
    sampler: Sampler,
    buf: Vec<f64>,
    round: u64,
}

impl EnvState {
    pub fn setting(&self) -> Setting {
        self.setting
    }

    pub fn rounds(&self) -> u64 {
        self.round
    }

    /// Current Markov context, if any.
    pub fn context(&self) -> Option<usize> {
        match &self.sampler {
            Sampler::Markov(m) => Some(m.context()),
            _ => None,
        }
    }

    /// Next Hedge loss vector, borrowed from an internal buffer.
    pub fn next_losses(&mut self) -> Result<&[f64]> {
        let rng = &mut self.rng;
        match &mut self.sampler {
            Sampler::Gap(p) => p.sample(rng, &mut self.buf),
            Sampler::Kappa(s) => s.sample(rng, &mut self.buf),
            Sampler::Markov(s) => {
                s.sample(rng, &mut self.buf);
            }
            Sampler::AdvHedge(p) => p.sample_hedge(rng, &mut self.buf),
            _ => return Err(Error::Config("OCO environment has no loss vectors".into())),
        }
        self.round += 1;
        Ok(&self.buf)
    }

    /// Next OCO draw.
    pub fn next_event(&mut self) -> Result<LossEvent> {
        let rng = &mut self.rng;
        let event = match &self.sampler {
            Sampler::Hinge { params, u_bar } => params.sample(u_bar, rng),
            Sampler::Absolute(p) => p.sample(rng),
            Sampler::AdvOco(p) => p.sample_oco(rng),
            _ => return Err(Error::Config("Hedge environment has no OCO events".into())),
        };
        self.round += 1;
        Ok(event)
    }

    pub fn next(&mut self) -> Result<Observation> {
        match self.setting {
            Setting::Hedge => Ok(Observation::Losses(LossVector::new(self.next_losses()?.to_vec())?)),
            Setting::Oco => self.next_event().map(Observation::Event),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_cli_examples() {
        let gap = EnvSpec::parse("gap:alpha=0.2,K=8").unwrap();
        assert_eq!(gap, EnvSpec::Gap(GapParams::new(0.2, 8)));
        let markov = EnvSpec::parse("markov:m=1,p=0.9,0.1").unwrap();
        assert_eq!(
            markov,
            EnvSpec::Markov(MarkovParams { m: 1, p: vec![0.9, 0.1] })
        );
        let abs = EnvSpec::parse("abs:two-point,a=0.2,b=0.7,p=0.8").unwrap();
        assert_eq!(
            abs,
            EnvSpec::Absolute(AbsoluteParams::TwoPoint { a: 0.2, b: 0.7, p: 0.8 })
        );
        let kappa = EnvSpec::parse("kappa:kappa=0.5,K=64").unwrap();
        assert_eq!(kappa, EnvSpec::Kappa(KappaParams::new(0.5, 64)));
        assert_eq!(EnvSpec::parse("hinge:d=4").unwrap(), EnvSpec::Hinge(HingeParams::new(4)));
        assert_eq!(
            EnvSpec::parse("adv:K=8").unwrap(),
            EnvSpec::Adversarial(AdversarialParams { experts: 8 })
        );
    }

    #[test]
    fn id_round_trips() {
        for text in [
            "gap:alpha=0.2,K=8",
            "gap:alpha=1,K=2,mu0=0,noise=deterministic",
            "kappa:kappa=0.5,K=64",
            "kappa:kappa=1,K=3,deltas=0,0.1,0.2",
            "markov:m=2,p=0.9,0.1,0.2,0.7",
            "hinge:d=4",
            "hinge:d=2,labels=logistic,scale=3",
            "abs:uniform",
            "abs:two-point,a=0.2,b=0.7,p=0.8",
            "adv:K=8",
        ] {
            let spec = EnvSpec::parse(text).unwrap();
            assert_eq!(spec.id(), text);
            assert_eq!(EnvSpec::parse(&spec.id()).unwrap(), spec);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        for text in [
            "gap:alpha=0.2,K=1",
            "gap:alpha=0.2",
            "gap:alpha=0.2,K=8,beta=1",
            "markov:m=1,p=0.5,0.1",
            "markov:m=1,p=0.9",
            "abs:two-point,a=0.2,b=0.7,p=0.5",
            "kappa:kappa=1.5",
            "nope:x=1",
            "adv:K=x",
        ] {
            assert!(EnvSpec::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn json_config_round_trips() {
        let json = r#"{"family":"markov","params":{"m":1,"p":[0.9,0.1]},"seed_policy":"raw"}"#;
        let cfg: EnvConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.seed_policy, SeedPolicy::Raw);
        assert_eq!(cfg.stream_seed(11), 11);
        let back: EnvConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let long: EnvConfig =
            serde_json::from_str(r#"{"family":"AbsoluteLoss","params":{"dist":"uniform"}}"#).unwrap();
        assert_eq!(long.spec, EnvSpec::Absolute(AbsoluteParams::Uniform));
        assert_eq!(long.seed_policy, SeedPolicy::Derived);
        let bad = serde_json::from_str::<EnvConfig>(r#"{"family":"adv","params":{"K":4,"k":2}}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn streams_are_deterministic() {
        for text in ["gap:alpha=0.2,K=4", "markov:m=2,p=0.9,0.1,0.2,0.7", "adv:K=3"] {
            let spec = EnvSpec::parse(text).unwrap();
            let mut a = spec.start(Setting::Hedge, 5).unwrap();
            let mut b = a.clone();
            for _ in 0..50 {
                assert_eq!(a.next().unwrap(), b.next().unwrap());
            }
        }
        let spec = EnvSpec::parse("hinge:d=3").unwrap();
        let mut a = spec.start(Setting::Oco, 9).unwrap();
        let mut b = spec.start(Setting::Oco, 9).unwrap();
        for _ in 0..50 {
            assert_eq!(a.next().unwrap(), b.next().unwrap());
        }
    }

    #[test]
    fn deterministic_gap_is_constant() {
        let spec = EnvSpec::parse("gap:alpha=0.2,K=3,noise=deterministic").unwrap();
        let mut env = spec.start(Setting::Hedge, 1).unwrap();
        for _ in 0..10 {
            assert_eq!(env.next_losses().unwrap(), &[0.3, 0.5, 0.5]);
        }
        let oracle = spec.oracle(Setting::Hedge).unwrap();
        assert!((oracle.exact_b.unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(oracle.bernstein_b, 5.0);
    }

    #[test]
    fn markov_starts_from_zero_context() {
        let spec = EnvSpec::parse("markov:m=1,p=0.9,0.1").unwrap();
        let env = spec.start(Setting::Hedge, 3).unwrap();
        assert_eq!(env.context(), Some(0));
        let oracle = spec.oracle(Setting::Hedge).unwrap();
        // f*(0) = 1, f*(1) = 0
        assert_eq!(oracle.best, Best::Expert(1));
        assert!((oracle.bernstein_b - 1.25).abs() < 1e-12);
    }

    #[test]
    fn markov_iid_example() {
        let p = MarkovParams { m: 1, p: vec![0.9, 0.9] };
        // f* = (1,1) has code 3; f = (0,0) is code 0
        assert_eq!(p.best_expert(), 3);
        let law = p.disagreement_law(0).unwrap();
        assert!((law.mean() - 0.8).abs() < 1e-12);
        assert_eq!(law.second_moment(), 1.0);
    }

    #[test]
    fn pairing_is_checked() {
        let hinge = EnvSpec::parse("hinge:d=4").unwrap();
        assert!(matches!(hinge.start(Setting::Hedge, 0), Err(Error::Config(_))));
        let gap = EnvSpec::parse("gap:alpha=0.2,K=8").unwrap();
        assert!(matches!(gap.oracle(Setting::Oco), Err(Error::Config(_))));
        let adv = EnvSpec::parse("adv:K=4").unwrap();
        assert!(adv.supports(Setting::Hedge) && adv.supports(Setting::Oco));
    }

    #[test]
    fn paper_constants() {
        let kappa = EnvSpec::parse("kappa:kappa=1,K=2").unwrap().oracle(Setting::Hedge).unwrap();
        // delta_1 = 1/2: loss 1 w.p. 3/4
        let law = &kappa.excess_laws.as_ref().unwrap()[1].dist;
        assert!((law.mean() - 0.25).abs() < 1e-15);
        assert!((kappa.exact_b.unwrap() - 1.0).abs() < 1e-12);

        let two = AbsoluteParams::TwoPoint { a: 0.2, b: 0.7, p: 0.8 };
        assert_eq!(two.median(), 0.2);
        assert!((two.bernstein_b() - 1.0 / 0.6).abs() < 1e-12);
        // at w = x the subgradient is 0, so w = 0.7 sees 0.5 w.p. 0.8 only
        let at = two.excess_law(0.7).unwrap();
        assert!((at.mean() - 0.4).abs() < 1e-12);
        assert!((at.second_moment() - 0.2).abs() < 1e-12);
        // just left of 0.7 the law is the two-sided one
        let left = two.excess_law(0.7 - 1e-12).unwrap();
        assert!((left.mean() - 0.3).abs() < 1e-9);
        assert!((left.second_moment() - 0.25).abs() < 1e-9);

        let uni = EnvSpec::parse("abs:uniform").unwrap().oracle(Setting::Oco).unwrap();
        assert_eq!(uni.best, Best::Point(vec![0.5]));
        assert_eq!(uni.bernstein_b, 0.5);

        let adv = EnvSpec::parse("adv:K=8").unwrap().oracle(Setting::Hedge).unwrap();
        assert_eq!(adv.kappa, 0.0);
        assert_eq!(adv.exact_b, Some(0.5));
    }

    #[test]
    fn oracle_laws_have_nonnegative_means() {
        for text in [
            "gap:alpha=0.2,K=8",
            "kappa:kappa=0.5,K=64",
            "kappa:kappa=0,K=64",
            "markov:m=2,p=0.9,0.1,0.3,0.8",
            "abs:uniform",
            "abs:two-point,a=0.2,b=0.7,p=0.8",
            "abs:two-point,a=0.9,b=0.1,p=0.3",
            "adv:K=4",
        ] {
            let spec = EnvSpec::parse(text).unwrap();
            let oracle = spec.oracle(spec.default_setting()).unwrap();
            for law in oracle.excess_laws.unwrap() {
                assert!(law.dist.mean() >= -1e-15, "{text} {}", law.label);
            }
            if let Some(exact) = oracle.exact_b {
                assert!(exact <= oracle.bernstein_b + 1e-12, "{text}");
            }
        }
    }
}
