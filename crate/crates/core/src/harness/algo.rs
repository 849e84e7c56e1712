use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algorithms::{BaselineState, HedgeLearner, SquintState};
use crate::environments::Setting;
use crate::error::{ensure, Error, Result};
use crate::types::Pmf;

/// Prior of Squint over the experts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    #[default]
    Uniform,
    /// `pi_k = 1/(k(k+1))`, renormalized over the `K` experts.
    Harmonic,
}

impl PriorKind {
    pub fn pmf(self, experts: usize) -> Result<Pmf> {
        match self {
            PriorKind::Uniform => Pmf::uniform(experts),
            PriorKind::Harmonic => Pmf::harmonic(experts),
        }
    }
}

/// A learner and its tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgoSpec {
    Squint {
        #[serde(default)]
        prior: PriorKind,
    },
    #[serde(rename = "metagrad")]
    MetaGrad {},
    Ftl {},
    Hedge { eta: f64 },
}

impl AlgoSpec {
    pub fn squint() -> Self {
        AlgoSpec::Squint {
            prior: PriorKind::Uniform,
        }
    }

    pub fn setting(&self) -> Setting {
        match self {
            AlgoSpec::MetaGrad {} => Setting::Oco,
            _ => Setting::Hedge,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let AlgoSpec::Hedge { eta } = *self {
            ensure!(eta > 0.0 && eta.is_finite(), "hedge learning rate must be positive, got {eta}");
        }
        Ok(())
    }

    pub fn id(&self) -> String {
        self.to_string()
    }

    /// A fresh Hedge learner for `experts` experts and horizon `T`.
    pub fn hedge_learner(&self, experts: usize, horizon: u64) -> Result<Box<dyn HedgeLearner>> {
        Ok(match *self {
            AlgoSpec::Squint { prior } => Box::new(SquintState::new(prior.pmf(experts)?, horizon)?),
            AlgoSpec::Ftl {} => Box::new(BaselineState::ftl(experts)?),
            AlgoSpec::Hedge { eta } => Box::new(BaselineState::hedge(eta, experts)?),
            AlgoSpec::MetaGrad {} => {
                return Err(Error::Config("metagrad is not a Hedge learner".into()));
            }
        })
    }
}

impl fmt::Display for AlgoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgoSpec::Squint {
                prior: PriorKind::Uniform,
            } => f.write_str("squint"),
            AlgoSpec::Squint {
                prior: PriorKind::Harmonic,
            } => f.write_str("squint:prior=harmonic"),
            AlgoSpec::MetaGrad {} => f.write_str("metagrad"),
            AlgoSpec::Ftl {} => f.write_str("ftl"),
            AlgoSpec::Hedge { eta } => write!(f, "hedge:eta={eta}"),
        }
    }
}

impl FromStr for AlgoSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (name, rest) = text.trim().split_once(':').unwrap_or((text.trim(), ""));
        let mut kv = Vec::new();
        for token in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{token}`")))?;
            kv.push((k.trim(), v.trim()));
        }
        let no_args = |spec: AlgoSpec| {
            if kv.is_empty() {
                Ok(spec)
            } else {
                Err(Error::Parse(format!("{name} takes no parameters")))
            }
        };
        let spec = match name.to_ascii_lowercase().as_str() {
            "squint" => match kv.as_slice() {
                [] => AlgoSpec::squint(),
                [("prior", "uniform")] => AlgoSpec::squint(),
                [("prior", "harmonic")] => AlgoSpec::Squint {
                    prior: PriorKind::Harmonic,
                },
                _ => return Err(Error::Parse(format!("bad squint parameters `{rest}`"))),
            },
            "metagrad" => no_args(AlgoSpec::MetaGrad {})?,
            "ftl" => no_args(AlgoSpec::Ftl {})?,
            "hedge" => match kv.as_slice() {
                [("eta", v)] => AlgoSpec::Hedge {
                    eta: v
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad learning rate `{v}`")))?,
                },
                _ => return Err(Error::Parse("hedge needs exactly `eta=<rate>`".into())),
            },
            other => return Err(Error::Parse(format!("unknown algorithm `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}
