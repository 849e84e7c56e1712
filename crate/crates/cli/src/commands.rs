use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use fastrates::conditions::{verify as run_verify, Suite, VerifyOptions};
use fastrates::environments::{Best, EnvConfig, EnvSpec, Setting};
use fastrates::harness::{
    build_reports, read_csv_file, records, run_with_oracle, sweep as run_sweep, worker_count,
    write_csv_file, Report, RunOptions, Statistic, SweepConfig, TraceRecord,
};
use fastrates::CheckpointPolicy;
use log::warn;
use serde_json::{json, Value};

use crate::svg::{Chart, Series};
use crate::{EnvInfoArgs, ReportArgs, RunArgs, SweepArgs, UsageError, VerifyArgs};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn run(args: RunArgs) -> Result<ExitCode> {
    let env = EnvConfig::from(args.env);
    let setting = args.algo.setting();
    if !env.spec.supports(setting) {
        bail!(
            "{} is a {setting} learner but {} has no {setting} realization",
            args.algo,
            env.spec.id()
        );
    }
    let oracle = env.spec.oracle(setting)?;
    let opts = RunOptions {
        policy: if args.every_round {
            CheckpointPolicy::EveryRound
        } else {
            CheckpointPolicy::Geometric
        },
        hash_stream: false,
    };
    let out = run_with_oracle(&env, &oracle, &args.algo, args.horizon, args.seed, opts)?;
    write_csv_file(&args.out, &records(std::slice::from_ref(&out)))?;
    let bound = out
        .certificate
        .map_or_else(|| "none".to_string(), |c| format!("{:.6} (K = {:.4})", c.bound, c.complexity));
    println!(
        "{} on {} T={} seed={}: final regret {:.6}, V = {:.6}, certified bound {bound}; trace in {}",
        out.key.algo_id,
        out.key.env_id,
        args.horizon,
        args.seed,
        out.trace.final_regret(),
        out.trace.v(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

/// Applies `key=value` overrides to the top level of a JSON config. Values
/// are read as JSON when they parse, else as strings.
fn apply_overrides(config: &mut Value, overrides: &[String]) -> Result<()> {
    let map = config
        .as_object_mut()
        .ok_or_else(|| usage("sweep config must be a JSON object"))?;
    for o in overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| usage(format!("override `{o}` is not KEY=VALUE")))?;
        let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
        map.insert(key.trim().to_string(), value);
    }
    Ok(())
}

pub fn load_sweep_config(path: &Path, overrides: &[String]) -> Result<SweepConfig> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{} is not valid JSON: {e}", path.display())))?;
    apply_overrides(&mut value, overrides)?;
    let config: SweepConfig =
        serde_json::from_value(value).map_err(|e| usage(format!("invalid sweep config: {e}")))?;
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

pub fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let config = load_sweep_config(&args.config, &args.overrides)?;
    let out = args
        .out
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("results.csv"));
    let result = run_sweep(&config)?;
    let rows = records(&result.runs);
    write_csv_file(&out, &rows)?;
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let meta = json!({
        "created_unix": created,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": worker_count(),
        "cells": config.cells().len(),
        "runs": result.runs.len(),
        "records": rows.len(),
        "failures": result.failures,
        "config": config,
    });
    fs::write(sidecar(&out), serde_json::to_string_pretty(&meta)? + "\n")?;
    println!(
        "{} runs, {} records written to {}; {} failed cells",
        result.runs.len(),
        rows.len(),
        out.display(),
        result.failures.len()
    );
    // one line per (env, algo) pair; the sidecar lists every cell
    let mut grouped: BTreeMap<(&str, &str), (usize, &str)> = BTreeMap::new();
    for f in &result.failures {
        grouped.entry((&f.key.env_id, &f.key.algo_id)).or_insert((0, &f.error)).0 += 1;
    }
    for ((env, algo), (n, first)) in grouped {
        warn!("{env} / {algo}: {n} cells failed, first: {first}");
    }
    if args.strict && !result.failures.is_empty() {
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

pub fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let mut opts = VerifyOptions {
        seed: args.seed,
        inject_fault: args.inject_fault,
        ..VerifyOptions::default()
    };
    if !args.checks.is_empty() {
        opts.suites = args
            .checks
            .iter()
            .map(|c| Suite::parse(c.trim()).ok_or_else(|| usage(format!("unknown check suite `{c}`"))))
            .collect::<Result<_>>()?;
    }
    if let Some(n) = args.samples {
        if n == 0 {
            return Err(usage("--samples must be positive"));
        }
        for s in &opts.suites {
            match s {
                Suite::Squeezer => opts.squeezer_dists = n,
                Suite::Esi => opts.esi_fixtures = n,
                Suite::Central => opts.mc_rounds = n,
                Suite::AdmissibleC => {}
            }
        }
    }
    let report = run_verify(&opts)?;
    let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &report.checks {
        println!(
            "{}  {:width$}  slack {:>11.4e}  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.slack,
            c.detail
        );
    }
    if let Some(path) = &args.json {
        fs::write(path, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let failures: Vec<_> = report.failures().collect();
    if failures.is_empty() {
        println!("all {} checks passed", report.checks.len());
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{} of {} checks failed:", failures.len(), report.checks.len());
        for c in failures {
            eprintln!("  {} (slack {:e})", c.name, c.slack);
        }
        Ok(ExitCode::FAILURE)
    }
}

fn format_point(u: &[f64]) -> String {
    match u {
        [x] => x.to_string(),
        _ => format!("({})", u.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")),
    }
}

pub fn env_info(args: EnvInfoArgs) -> Result<ExitCode> {
    let spec = args.env;
    let settings: Vec<Setting> = match args.setting {
        Some(s) if !spec.supports(s) => {
            return Err(usage(format!("{} has no {s} realization", spec.id())));
        }
        Some(s) => vec![s],
        None => [Setting::Hedge, Setting::Oco]
            .into_iter()
            .filter(|s| spec.supports(*s))
            .collect(),
    };
    println!("env: {}", spec.id());
    for setting in settings {
        let oracle = spec.oracle(setting)?;
        println!("setting: {setting}");
        match (&oracle.best, &spec) {
            (Best::Expert(k), EnvSpec::Markov(p)) => {
                let table: Vec<String> = (0..p.contexts()).map(|a| ((k >> a) & 1).to_string()).collect();
                println!("  f* = ({}) (expert {k})", table.join(","));
            }
            (Best::Expert(k), _) => println!("  f* = expert {k}"),
            (Best::Point(u), _) => println!("  u* = {}", format_point(u)),
        }
        if let Some(n) = oracle.experts {
            println!("  experts = {n}");
        }
        println!("  kappa = {}", oracle.kappa);
        println!("  B = {}", oracle.bernstein_b);
        match oracle.exact_b {
            Some(b) => println!("  exact B = {b}"),
            None => println!("  exact B = unknown"),
        }
        if let Some((mu, se)) = oracle.mu_norm {
            println!("  |mu| = {mu:.6} (se {se:.2e})");
        }
        if let Some(g) = &oracle.geometry {
            println!("  D = {}, G = {}, dim = {}", g.diameter, g.grad_bound, g.domain.dim());
        }
        if let Some(laws) = &oracle.excess_laws {
            println!("  {:<24} {:>12} {:>12} {:>14}", "excess law", "E[x]", "E[x^2]", "E[x^2]/E[x]^k");
            for law in laws {
                let (m1, m2) = (law.dist.mean(), law.dist.second_moment());
                let ratio = if oracle.kappa == 0.0 {
                    m2
                } else if m1 > 0.0 {
                    m2 / m1.powf(oracle.kappa)
                } else {
                    f64::NAN
                };
                println!("  {:<24} {:>12.6} {:>12.6} {:>14.6}", law.label, m1, m2, ratio);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn slug(text: &str) -> String {
    let mut s: String = text
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect();
    while s.contains("__") {
        s = s.replace("__", "_");
    }
    s.trim_matches('_').to_string()
}

fn fit_chart(report: &Report) -> Chart {
    let series = report
        .fits
        .iter()
        .map(|f| Series {
            label: format!("{}: slope {:.3} ± {:.3}", f.statistic, f.slope, f.stderr),
            points: f.points.clone(),
            line: Some((f.intercept, f.slope)),
        })
        .collect();
    let predicted = report
        .predicted_slope
        .map_or_else(String::new, |p| format!(", predicted slope {p:.3}"));
    Chart {
        title: format!("{} / {}{predicted}", report.env, report.algo),
        x_label: "ln T".into(),
        y_label: "ln regret".into(),
        series,
    }
}

/// Mean regret against `ln t` over the checkpoints of the largest horizon.
fn curve_chart(env: &str, algo: &str, rows: &[&TraceRecord]) -> Chart {
    let horizon = rows.iter().map(|r| r.horizon).max().unwrap_or(0);
    let mut by_t: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.horizon == horizon) {
        let e = by_t.entry(r.t).or_insert((0.0, 0));
        e.0 += r.regret;
        e.1 += 1;
    }
    Chart {
        title: format!("{env} / {algo}, T = {horizon}"),
        x_label: "ln t".into(),
        y_label: "mean regret".into(),
        series: vec![Series {
            label: "mean regret".into(),
            points: by_t
                .into_iter()
                .map(|(t, (s, n))| ((t as f64).ln(), s / n as f64))
                .collect(),
            line: None,
        }],
    }
}

pub fn report(args: ReportArgs) -> Result<ExitCode> {
    let rows = read_csv_file(&args.input)?;
    if rows.is_empty() {
        bail!("{} has no records", args.input.display());
    }
    let fits = if args.fits.is_empty() {
        vec![Statistic::Mean, Statistic::Quantile(0.9)]
    } else {
        args.fits
    };
    let reports = build_reports(&rows, &fits, args.policy)?;
    let dir = args.out_dir.unwrap_or_else(|| {
        args.input
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
    });
    fs::create_dir_all(&dir)?;
    let json_path = dir.join("report.json");
    fs::write(&json_path, serde_json::to_string_pretty(&reports)? + "\n")?;
    for r in &reports {
        let name = slug(&format!("{}_{}", r.env, r.algo));
        fs::write(dir.join(format!("{name}.svg")), fit_chart(r).render())?;
        let group: Vec<&TraceRecord> = rows.iter().filter(|x| x.env == r.env && x.algo == r.algo).collect();
        fs::write(dir.join(format!("{name}-curve.svg")), curve_chart(&r.env, &r.algo, &group).render())?;
        let fit_text: Vec<String> = r
            .fits
            .iter()
            .map(|f| format!("{} slope {:.3} ± {:.3}", f.statistic, f.slope, f.stderr))
            .collect();
        let within = r.bound_margins.iter().filter(|m| m.within).count();
        println!(
            "{} / {}: {}; bound respected at {within}/{} horizons",
            r.env,
            r.algo,
            if fit_text.is_empty() { "no fit".to_string() } else { fit_text.join(", ") },
            r.bound_margins.len()
        );
        for note in &r.notes {
            warn!("{} / {}: {note}", r.env, r.algo);
        }
    }
    println!("report written to {}", json_path.display());
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_json_then_strings() {
        let mut v = json!({"seeds": 2});
        apply_overrides(&mut v, &["seeds=8".into(), "output=out.csv".into(), "horizons=[1,2]".into()]).unwrap();
        assert_eq!(v["seeds"], json!(8));
        assert_eq!(v["output"], json!("out.csv"));
        assert_eq!(v["horizons"], json!([1, 2]));
        assert!(apply_overrides(&mut v, &["nokey".into()]).is_err());
    }

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug("gap:alpha=0.2,K=8_squint"), "gap_alpha_0.2_K_8_squint");
        assert_eq!(sidecar(Path::new("a/results.csv")), PathBuf::from("a/results.csv.meta.json"));
    }
}
