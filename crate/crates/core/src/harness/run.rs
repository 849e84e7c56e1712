use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algorithms::{HedgeLearner, MetaGradState, SquintState};
use crate::environments::{EnvConfig, EnvOracle, EnvState, Setting};
use crate::error::{Error, Result};
use crate::types::{CheckpointPolicy, LossEvent, LossVector, RegretTrace, RunKey};

use super::algo::AlgoSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunOptions {
    pub policy: CheckpointPolicy,
    /// Hash every loss the environment emits (costs a SHA-256 pass).
    pub hash_stream: bool,
}

/// Squint's own certificate against the comparator at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub bound: f64,
    pub complexity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub key: RunKey,
    pub trace: RegretTrace,
    /// Hex SHA-256 of the loss stream, when requested.
    pub stream_hash: Option<String>,
    pub certificate: Option<Certificate>,
}

fn hash_event(h: &mut Sha256, event: &LossEvent) {
    match event {
        LossEvent::Hinge { x, y } => {
            for v in x {
                h.update(v.to_le_bytes());
            }
            h.update([*y as u8]);
        }
        LossEvent::Absolute { x } => h.update(x.to_le_bytes()),
        LossEvent::Coins { bits } => h.update(bits),
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn play_hedge<L: HedgeLearner + ?Sized>(
    learner: &mut L,
    state: &mut EnvState,
    trace: &mut RegretTrace,
    mut hasher: Option<&mut Sha256>,
    horizon: u64,
    k_star: usize,
) -> Result<()> {
    for _ in 0..horizon {
        let losses = state.next_losses()?;
        if let Some(h) = hasher.as_mut() {
            for v in losses {
                h.update(v.to_le_bytes());
            }
        }
        let losses = LossVector::new(losses.to_vec())?;
        let w = learner.update(&losses)?;
        trace.accumulate_hedge(&w, &losses, k_star)?;
    }
    Ok(())
}

/// Plays one run with the oracle's risk minimizer as comparator.
pub fn run_once(env: &EnvConfig, algo: &AlgoSpec, horizon: u64, seed: u64) -> Result<RunOutput> {
    let oracle = env.spec.oracle(algo.setting())?;
    run_with_oracle(env, &oracle, algo, horizon, seed, RunOptions::default())
}

/// [`run_once`] with a precomputed oracle and explicit options.
pub fn run_with_oracle(
    env: &EnvConfig,
    oracle: &EnvOracle,
    algo: &AlgoSpec,
    horizon: u64,
    seed: u64,
    opts: RunOptions,
) -> Result<RunOutput> {
    algo.validate()?;
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let setting = algo.setting();
    if !env.spec.supports(setting) {
        return Err(Error::Config(format!(
            "{} is a {setting} learner but {} has no {setting} realization",
            algo.id(),
            env.spec.id()
        )));
    }
    let key = RunKey {
        env_id: env.spec.id(),
        algo_id: algo.id(),
        horizon,
        seed,
    };
    let mut state = env.spec.start(setting, env.stream_seed(seed))?;
    let mut trace = RegretTrace::new(horizon, opts.policy);
    let mut hasher = opts.hash_stream.then(Sha256::new);
    let mut certificate = None;

    match setting {
        Setting::Hedge => {
            let k_star = oracle
                .best_expert()
                .ok_or_else(|| Error::Config("oracle names no best expert".into()))?;
            let experts = env.spec.experts().expect("hedge environments have experts");
            if let AlgoSpec::Squint { prior } = algo {
                let mut squint = SquintState::new(prior.pmf(experts)?, horizon)?;
                play_hedge(&mut squint, &mut state, &mut trace, hasher.as_mut(), horizon, k_star)?;
                certificate = Some(Certificate {
                    bound: squint.bound(k_star),
                    complexity: squint.certified_complexity(k_star),
                });
            } else {
                let mut learner = algo.hedge_learner(experts, horizon)?;
                play_hedge(learner.as_mut(), &mut state, &mut trace, hasher.as_mut(), horizon, k_star)?;
            }
        }
        Setting::Oco => {
            let u_star = oracle
                .best_point()
                .ok_or_else(|| Error::Config("oracle names no best point".into()))?;
            let geometry = oracle
                .geometry
                .as_ref()
                .ok_or_else(|| Error::Config("OCO oracle lacks a geometry".into()))?;
            let mut learner = MetaGradState::new(
                geometry.domain.clone(),
                geometry.diameter,
                geometry.grad_bound,
                horizon,
            )?;
            for _ in 0..horizon {
                let w = learner.predict();
                let event = state.next_event()?;
                if let Some(h) = hasher.as_mut() {
                    hash_event(h, &event);
                }
                let g = event.gradient(&w);
                trace.accumulate_oco(&w, &g, u_star)?;
                learner.update(&g)?;
            }
        }
    }
    Ok(RunOutput {
        key,
        trace,
        stream_hash: hasher.map(|h| hex(&h.finalize())),
        certificate,
    })
}
