use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::run::RunOutput;

pub const CSV_HEADER: [&str; 10] = [
    "run_id",
    "env",
    "algo",
    "T",
    "seed",
    "t",
    "learner_loss",
    "comparator_loss",
    "regret",
    "v",
];

/// One checkpoint of one run; a row of the results file.
///
/// The loss columns are cumulative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub run_id: String,
    pub env: String,
    pub algo: String,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub seed: u64,
    pub t: u64,
    pub learner_loss: f64,
    pub comparator_loss: f64,
    pub regret: f64,
    pub v: f64,
}

/// Flattens runs into records, in run order then checkpoint order.
pub fn records(runs: &[RunOutput]) -> Vec<TraceRecord> {
    let mut out = Vec::new();
    for run in runs {
        let run_id = run.key.run_id();
        for c in &run.trace.checkpoints {
            out.push(TraceRecord {
                run_id: run_id.clone(),
                env: run.key.env_id.clone(),
                algo: run.key.algo_id.clone(),
                horizon: run.key.horizon,
                seed: run.key.seed,
                t: c.t,
                learner_loss: c.learner_cum_loss,
                comparator_loss: c.comparator_cum_loss,
                regret: c.regret,
                v: c.v,
            });
        }
    }
    out
}

/// Writes the header and records. Floats use the shortest decimal form
/// that parses back to the same value.
pub fn write_csv<W: Write>(out: W, records: &[TraceRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.run_id.clone(),
            r.env.clone(),
            r.algo.clone(),
            r.horizon.to_string(),
            r.seed.to_string(),
            r.t.to_string(),
            r.learner_loss.to_string(),
            r.comparator_loss.to_string(),
            r.regret.to_string(),
            r.v.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, records: &[TraceRecord]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_csv(BufWriter::new(file), records)
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!(
            "unexpected results header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

pub fn read_csv_file(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_csv(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(regret: f64) -> TraceRecord {
        TraceRecord {
            run_id: "gap:alpha=0.2,K=8|squint|512|0".into(),
            env: "gap:alpha=0.2,K=8".into(),
            algo: "squint".into(),
            horizon: 512,
            seed: 0,
            t: 512,
            learner_loss: 0.1 + 0.2,
            comparator_loss: 1e-300,
            regret,
            v: f64::MIN_POSITIVE,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let rs = vec![record(1.0 / 3.0), record(-2.5e-17)];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("run_id,env,algo,T,seed,t,learner_loss,comparator_loss,regret,v\n"));
        assert!(!text.contains('\r'));
        assert!(text.contains("0.30000000000000004"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rs);
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_csv("".as_bytes()).is_err());
    }
}
