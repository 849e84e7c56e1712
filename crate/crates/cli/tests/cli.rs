use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fastrates(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fastrates"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL_SWEEP: &str = r#"{
  "envs": [
    {"family": "gap", "params": {"alpha": 0.2, "K": 8}},
    {"family": "kappa", "params": {"kappa": 1.0, "K": 16}}
  ],
  "algos": [{"algo": "squint"}, {"algo": "ftl"}],
  "horizons": [512, 1024, 2048],
  "seeds": 3
}"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("sweep.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_without_flags_is_usage_error() {
    assert_eq!(fastrates(&["run"]).status.code(), Some(2));
    assert_eq!(fastrates(&[]).status.code(), Some(2));
}

#[test]
fn run_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = fastrates(&[
        "run", "--env", "gap:alpha=0.2,K=8", "--algo", "squint", "--T", "4096", "--seed", "7", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("certified bound"));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("run_id,env,algo,T,seed,t,learner_loss,comparator_loss,regret,v\n"));
    // checkpoints 1, 2, 4, ..., 4096
    assert_eq!(text.lines().count(), 1 + 13);
}

#[test]
fn run_first_round_regret() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = fastrates(&[
        "run", "--env", "gap:alpha=1,K=2,mu0=0,noise=deterministic", "--algo", "squint", "--T", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().rsplit(',').collect();
    assert_eq!(row[1], "0.5");
}

#[test]
fn run_pairing_error_exits_1() {
    let o = fastrates(&["run", "--env", "hinge:d=4", "--algo", "squint"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no hedge realization"));
}

#[test]
fn env_info_examples() {
    let o = fastrates(&["env-info", "--env", "markov:m=1,p=0.9,0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("B = 1.25"), "{s}");
    assert!(s.contains("kappa = 1"), "{s}");
    assert!(s.contains("f* = (1,0)"), "{s}");

    let s = stdout(&fastrates(&["env-info", "--env", "abs:two-point,a=0.2,b=0.7,p=0.8"]));
    assert!(s.contains("B = 1.666666666666666"), "{s}");
    assert!(s.contains("u* = 0.2"), "{s}");

    let s = stdout(&fastrates(&["env-info", "--env", "kappa:kappa=0.5,K=64"]));
    assert!(s.contains("B = 1\n"), "{s}");
    assert!(s.contains("kappa = 0.5"), "{s}");
}

#[test]
fn env_info_invalid_spec_is_usage_error() {
    assert_eq!(fastrates(&["env-info", "--env", "gap:alpha=2"]).status.code(), Some(2));
    assert_eq!(fastrates(&["env-info", "--env", "nosuch:x=1"]).status.code(), Some(2));
}

#[test]
fn verify_default_passes() {
    let o = fastrates(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("checks passed"));
}

#[test]
fn verify_selected_suite_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("verify.json");
    let o = fastrates(&[
        "verify", "--checks", "squeezer,admissible_c", "--samples", "500", "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("squeezer") && s.contains("admissible_c") && !s.contains("central."));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn verify_injected_fault_exits_1() {
    let o = fastrates(&["verify", "--checks", "squeezer", "--samples", "100", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("squeezer"));
}

#[test]
fn verify_unknown_suite_is_usage_error() {
    assert_eq!(fastrates(&["verify", "--checks", "nosuch"]).status.code(), Some(2));
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_SWEEP);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("r{threads}.csv"));
        let o = Command::new(env!("CARGO_BIN_EXE_fastrates"))
            .args(["sweep", "--config", &config, "--out", out.to_str().unwrap()])
            .env("FASTRATES_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join(format!("r{threads}.csv.meta.json")).exists());
        outputs.push(fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn sweep_cardinality_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"envs":[{"family":"gap","params":{"alpha":0.2,"K":8}}],"algos":[{"algo":"squint"}],"horizons":[512],"seeds":1}"#,
    );
    let out = dir.path().join("r.csv");
    let o = fastrates(&["sweep", "--config", &config, "--set", "seeds=2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("2 runs"));
    let finals = fs::read_to_string(out)
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| l.contains(",512,") && l.split(',').nth(7) == Some("512"))
        .count();
    assert_eq!(finals, 2);
}

#[test]
fn sweep_config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fastrates(&["sweep", "--config", "/nonexistent.json"]).status.code(), Some(2));
    let config = write_config(dir.path(), r#"{"envs":[],"algos":[],"horizons":[1],"seeds":1,"bogus":1}"#);
    assert_eq!(fastrates(&["sweep", "--config", &config]).status.code(), Some(2));
    let config = write_config(
        dir.path(),
        r#"{"envs":[{"family":"gap","params":{"alpha":0.2,"K":8}}],"algos":[{"algo":"squint"}],"horizons":[1024,512],"seeds":1}"#,
    );
    assert_eq!(fastrates(&["sweep", "--config", &config]).status.code(), Some(2));
}

#[test]
fn sweep_partial_failure_and_strict() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"envs":[{"family":"hinge","params":{"d":2}},{"family":"gap","params":{"alpha":0.2,"K":4}}],
            "algos":[{"algo":"squint"}],"horizons":[64],"seeds":1}"#,
    );
    let out = dir.path().join("r.csv");
    let args = ["sweep", "--config", &config, "--out", out.to_str().unwrap()];
    assert_eq!(fastrates(&args).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(fastrates(&strict).status.code(), Some(1));
}

#[test]
fn report_writes_json_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_SWEEP);
    let out = dir.path().join("results.csv");
    assert_eq!(
        fastrates(&["sweep", "--config", &config, "--out", out.to_str().unwrap()]).status.code(),
        Some(0)
    );
    let o = fastrates(&["report", "--in", out.to_str().unwrap(), "--fit", "quantile:0.9", "--fit", "mean"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let reports = report.as_array().unwrap();
    assert_eq!(reports.len(), 4);
    for r in reports {
        for key in ["env", "algo", "fits", "bound_margins", "quantiles"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
        assert_eq!(r["fits"].as_array().unwrap().len(), 2);
    }
    let svgs = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count();
    assert_eq!(svgs, 8);
}

#[test]
fn report_on_empty_csv_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "run_id,env,algo,T,seed,t,learner_loss,comparator_loss,regret,v\n").unwrap();
    assert_eq!(fastrates(&["report", "--in", empty.to_str().unwrap()]).status.code(), Some(1));
    fs::write(&empty, "").unwrap();
    assert_eq!(fastrates(&["report", "--in", empty.to_str().unwrap()]).status.code(), Some(1));
}
