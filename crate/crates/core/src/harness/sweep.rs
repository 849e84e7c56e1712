use std::collections::BTreeMap;
use std::path::PathBuf;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environments::{EnvConfig, EnvOracle, Setting};
use crate::error::{ensure, Error, Result};
use crate::types::{CheckpointPolicy, RunKey};

use super::algo::AlgoSpec;
use super::run::{run_with_oracle, RunOptions, RunOutput};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "FASTRATES_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub envs: Vec<EnvConfig>,
    pub algos: Vec<AlgoSpec>,
    pub horizons: Vec<u64>,
    /// Seeds `first_seed .. first_seed + seeds`.
    pub seeds: u64,
    #[serde(default)]
    pub first_seed: u64,
    #[serde(default)]
    pub checkpoint_policy: CheckpointPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.envs.is_empty(), "sweep needs at least one environment");
        ensure!(!self.algos.is_empty(), "sweep needs at least one algorithm");
        ensure!(!self.horizons.is_empty(), "sweep needs at least one horizon");
        ensure!(self.horizons[0] >= 1, "horizons must be positive");
        ensure!(
            self.horizons.windows(2).all(|w| w[0] < w[1]),
            "horizons must be strictly increasing"
        );
        ensure!(self.seeds >= 1, "sweep needs at least one seed");
        for e in &self.envs {
            e.spec.validate()?;
        }
        for a in &self.algos {
            a.validate()?;
        }
        Ok(())
    }

    /// Every `(env, algo, T, seed)` cell, compatible or not.
    pub fn cells(&self) -> Vec<(usize, usize, u64, u64)> {
        let mut out = Vec::new();
        for e in 0..self.envs.len() {
            for a in 0..self.algos.len() {
                for &t in &self.horizons {
                    for s in self.first_seed..self.first_seed + self.seeds {
                        out.push((e, a, t, s));
                    }
                }
            }
        }
        out
    }
}

/// A cell that could not be run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub key: RunKey,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Sorted by run key.
    pub runs: Vec<RunOutput>,
    pub failures: Vec<CellFailure>,
}

impl SweepResult {
    /// Checks that all learners saw the same losses in each
    /// `(env, T, seed)` cell.
    pub fn check_paired(&self) -> Result<()> {
        // OCO and Hedge realizations of one environment emit different streams
        let mut seen: BTreeMap<(&str, u64, u64, Setting), &str> = BTreeMap::new();
        for r in &self.runs {
            let Some(hash) = r.stream_hash.as_deref() else { continue };
            let setting = r.key.algo_id.parse::<AlgoSpec>()?.setting();
            let cell = (r.key.env_id.as_str(), r.key.horizon, r.key.seed, setting);
            match seen.insert(cell, hash) {
                Some(other) if other != hash => {
                    return Err(Error::DataInconsistency(format!(
                        "loss streams differ across learners in cell {} T={} seed={}",
                        cell.0, cell.1, cell.2
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Worker count: `FASTRATES_THREADS` if set and positive, else all cores.
pub fn worker_count() -> usize {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n,
        _ => cores,
    }
}

/// Runs every cell on a worker pool. Failing cells are recorded and the
/// sweep continues; oracle failures fail all cells of that environment.
pub fn sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut oracles: BTreeMap<(usize, Setting), std::result::Result<EnvOracle, String>> = BTreeMap::new();
    for (e, env) in config.envs.iter().enumerate() {
        for algo in &config.algos {
            let setting = algo.setting();
            if env.spec.supports(setting) {
                oracles
                    .entry((e, setting))
                    .or_insert_with(|| env.spec.oracle(setting).map_err(|err| err.to_string()));
            }
        }
    }
    let opts = RunOptions {
        policy: config.checkpoint_policy,
        hash_stream: true,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<std::result::Result<RunOutput, CellFailure>> = pool.install(|| {
        config
            .cells()
            .into_par_iter()
            .map(|(e, a, t, s)| {
                let env = &config.envs[e];
                let algo = &config.algos[a];
                let key = RunKey {
                    env_id: env.spec.id(),
                    algo_id: algo.id(),
                    horizon: t,
                    seed: s,
                };
                let fail = |error: String| CellFailure { key: key.clone(), error };
                match oracles.get(&(e, algo.setting())) {
                    None => Err(fail(format!(
                        "{} cannot run on {}: no {} realization",
                        key.algo_id,
                        key.env_id,
                        algo.setting()
                    ))),
                    Some(Err(msg)) => Err(fail(msg.clone())),
                    Some(Ok(oracle)) => {
                        run_with_oracle(env, oracle, algo, t, s, opts).map_err(|err| fail(err.to_string()))
                    }
                }
            })
            .collect()
    });
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(run) => runs.push(run),
            Err(f) => {
                debug!("cell {} failed: {}", f.key.run_id(), f.error);
                failures.push(f);
            }
        }
    }
    runs.sort_by(|a, b| a.key.cmp(&b.key));
    failures.sort_by(|a, b| a.key.cmp(&b.key));
    let result = SweepResult { runs, failures };
    result.check_paired()?;
    Ok(result)
}
