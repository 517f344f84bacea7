//! JSON-lines record store and plan manifest.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ExperimentPlan, JobKey};
use crate::ego::{EgoConfig, Problem, RunRecord, RunStatus, Strategy};
use crate::error::{Error, Result};
use crate::{rng, surrogate};

/// One line of the store.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireRecord {
    pub problem: Problem,
    pub strategy: Strategy,
    pub r_i: u32,
    #[serde(rename = "r_A")]
    pub r_a: u32,
    pub seed_design: u64,
    pub seed_algo: u64,
    pub status: RunStatus,
    pub best_value: Option<f64>,
    pub best_point: Vec<f64>,
    pub target_precision: Option<f64>,
    pub best_initial_value: Option<f64>,
    pub first_adaptive_value: Option<f64>,
    pub distance_to_optimum: Option<f64>,
    pub evaluations_used: usize,
    /// Prefix-minimum breakpoints `[iteration, value]`, iterations 1-based.
    pub trace: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Breakpoints where the best-so-far trace changes (bitwise, so a sign
/// change of zero is kept).
pub fn compress_trace(trace: &[f64]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (i, &v) in trace.iter().enumerate() {
        if out.last().is_none_or(|&(_, last)| v.to_bits() != last.to_bits()) {
            out.push((i + 1, v));
        }
    }
    out
}

pub fn expand_trace(breakpoints: &[(usize, f64)], len: usize) -> Result<Vec<f64>> {
    if len == 0 {
        return Ok(Vec::new());
    }
    match breakpoints.first() {
        Some(&(1, _)) => {}
        _ => return Err(Error::contract("trace must start at iteration 1")),
    }
    let mut out = Vec::with_capacity(len);
    for (j, &(it, v)) in breakpoints.iter().enumerate() {
        let end = breakpoints.get(j + 1).map_or(len + 1, |b| b.0);
        if end <= it || it > len || end > len + 1 {
            return Err(Error::contract("trace breakpoints out of order or past the run length"));
        }
        out.extend(std::iter::repeat_n(v, end - it));
    }
    Ok(out)
}

impl From<&RunRecord> for WireRecord {
    fn from(r: &RunRecord) -> Self {
        Self {
            problem: r.problem,
            strategy: r.strategy,
            r_i: r.r_i,
            r_a: r.r_a,
            seed_design: r.seed_design,
            seed_algo: r.seed_algo,
            status: r.status,
            best_value: finite(r.best_value),
            best_point: r.best_point.clone(),
            target_precision: finite(r.target_precision),
            best_initial_value: finite(r.best_initial_value),
            first_adaptive_value: r.first_adaptive_value,
            distance_to_optimum: finite(r.distance_to_optimum),
            evaluations_used: r.evaluations_used,
            trace: compress_trace(&r.trace),
            message: r.message.clone(),
        }
    }
}

impl TryFrom<WireRecord> for RunRecord {
    type Error = Error;

    fn try_from(w: WireRecord) -> Result<Self> {
        let trace = expand_trace(&w.trace, w.evaluations_used)?;
        Ok(RunRecord {
            problem: w.problem,
            strategy: Strategy {
                design: w.strategy.design.with_seed(w.seed_design),
                ..w.strategy
            },
            r_i: w.r_i,
            r_a: w.r_a,
            seed_design: w.seed_design,
            seed_algo: w.seed_algo,
            status: w.status,
            best_value: w.best_value.unwrap_or(f64::NAN),
            best_point: w.best_point,
            target_precision: w.target_precision.unwrap_or(f64::NAN),
            best_initial_value: w.best_initial_value.unwrap_or(f64::NAN),
            first_adaptive_value: w.first_adaptive_value,
            trace,
            distance_to_optimum: w.distance_to_optimum.unwrap_or(f64::NAN),
            evaluations_used: w.evaluations_used,
            message: w.message,
        })
    }
}

pub fn to_line(r: &RunRecord) -> Result<String> {
    Ok(serde_json::to_string(&WireRecord::from(r))?)
}

pub fn from_line(line: &str) -> Result<RunRecord> {
    serde_json::from_str::<WireRecord>(line)?.try_into()
}

/// Reads every record. Blank lines are skipped; a malformed line is an error
/// naming its line number.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| Error::at_path(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::at_path(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = from_line(&line)
            .map_err(|e| Error::Store(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Opens a store for appending, first dropping a trailing partial line left
/// by an interrupted write, and returns the records already present.
pub(super) fn open_for_append(path: &Path) -> Result<(Vec<RunRecord>, HashSet<JobKey>, RecordWriter)> {
    let mut existing = Vec::new();
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::at_path(path, e))?;
        let complete = match text.rfind('\n') {
            Some(i) => i + 1,
            None => 0,
        };
        if complete < text.len() {
            log::warn!("{}: dropping partial trailing record", path.display());
            let f = OpenOptions::new().write(true).open(path).map_err(|e| Error::at_path(path, e))?;
            f.set_len(complete as u64).map_err(|e| Error::at_path(path, e))?;
        }
        for (i, line) in text[..complete].lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec = from_line(line)
                .map_err(|e| Error::Store(format!("{}:{}: {e}", path.display(), i + 1)))?;
            existing.push(rec);
        }
    }
    let keys = existing.iter().map(JobKey::of_record).collect();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::at_path(path, e))?;
    Ok((
        existing,
        keys,
        RecordWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        },
    ))
}

pub(super) struct RecordWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl RecordWriter {
    pub(super) fn append(&mut self, r: &RunRecord) -> Result<()> {
        let line = to_line(r)?;
        writeln!(self.out, "{line}").map_err(|e| Error::at_path(&self.path, e))
    }

    pub(super) fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::at_path(&self.path, e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub plan: ExperimentPlan,
    /// SHA-256 over the plan (parallelism excluded) and the run configuration.
    pub config_hash: String,
    pub job_count: usize,
    pub ego: EgoConfig,
    pub rng: String,
    pub kernel: String,
    pub acquisition: String,
    pub nugget_ladder: Vec<f64>,
    pub version: String,
}

impl Manifest {
    pub fn new(plan: &ExperimentPlan, ego: &EgoConfig) -> Result<Self> {
        Ok(Self {
            plan: plan.clone(),
            config_hash: config_hash(plan, ego)?,
            job_count: plan.job_count(),
            ego: ego.clone(),
            rng: rng::GENERATOR_NAME.to_string(),
            kernel: "matern-5/2, anisotropic, constant mean, profiled signal variance".to_string(),
            acquisition: "expected improvement".to_string(),
            nugget_ladder: surrogate::NUGGET_LADDER.to_vec(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }
}

pub fn config_hash(plan: &ExperimentPlan, ego: &EgoConfig) -> Result<String> {
    let plan = ExperimentPlan {
        parallelism: 0,
        ..plan.clone()
    };
    let bytes = serde_json::to_vec(&(plan, ego))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `results.jsonl` maps to `results.jsonl.manifest.json`.
pub fn manifest_path(store: &Path) -> PathBuf {
    let mut s = store.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes the manifest, or checks that an existing one describes the same
/// configuration.
pub(super) fn write_or_check_manifest(store: &Path, manifest: &Manifest) -> Result<()> {
    let path = manifest_path(store);
    if path.exists() {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::at_path(&path, e))?;
        let old: Manifest = serde_json::from_str(&text)?;
        if old.config_hash != manifest.config_hash {
            return Err(Error::Store(format!(
                "{} was produced by a different plan or configuration (hash {} vs {})",
                store.display(),
                old.config_hash,
                manifest.config_hash
            )));
        }
        return Ok(());
    }
    let text = serde_json::to_string_pretty(manifest)?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::at_path(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{DesignKind, DesignVariant};

    fn record() -> RunRecord {
        RunRecord {
            problem: Problem { f: 3, d: 2, n: 5 },
            strategy: Strategy {
                k: 0.1,
                design: DesignKind::new(DesignVariant::Sobol, 99),
            },
            r_i: 2,
            r_a: 4,
            seed_design: 99,
            seed_algo: u64::MAX,
            status: RunStatus::Success,
            best_value: 0.1 + 0.2,
            best_point: vec![-4.999999999999999, 1e-300],
            target_precision: 0.30000000000000004,
            best_initial_value: 1.0 / 3.0,
            first_adaptive_value: Some(std::f64::consts::PI),
            trace: vec![1.0 / 3.0, 1.0 / 3.0, 0.3, 0.30000000000000004 - 1e-17, 0.1 + 0.2],
            distance_to_optimum: 2f64.sqrt(),
            evaluations_used: 5,
            message: None,
        }
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut r = record();
        r.trace = crate::ego::best_so_far(&r.trace).unwrap();
        let line = to_line(&r).unwrap();
        assert_eq!(from_line(&line).unwrap(), r);
        assert!(line.contains("\"r_A\":4"));
        assert!(line.contains("\"problem\":{\"f\":3,\"d\":2,\"n\":5}"));
        assert!(line.contains("\"design\":\"sobol\""));
    }

    #[test]
    fn error_records_round_trip() {
        let r = RunRecord::errored(
            Problem { f: 1, d: 2, n: 8 },
            Strategy {
                k: 0.5,
                design: DesignKind::new(DesignVariant::Lhs, 0),
            },
            crate::ego::Replicate {
                r_i: 1,
                r_a: 1,
                seed_design: 7,
                seed_algo: 8,
            },
            "boom".into(),
        );
        let back = from_line(&to_line(&r).unwrap()).unwrap();
        assert!(back.best_value.is_nan());
        assert_eq!(back.message.as_deref(), Some("boom"));
        assert_eq!(back.strategy.design.seed, 7);
        assert!(back.trace.is_empty());
    }

    #[test]
    fn trace_compression() {
        let t = [3.0, 1.0, 1.0, 0.5, 0.5];
        let c = compress_trace(&t);
        assert_eq!(c, vec![(1, 3.0), (2, 1.0), (4, 0.5)]);
        assert_eq!(expand_trace(&c, 5).unwrap(), t);
        assert!(expand_trace(&[(2, 1.0)], 3).is_err());
        assert!(expand_trace(&[(1, 1.0), (4, 0.0)], 3).is_err());
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(
            manifest_path(Path::new("out/r.jsonl")),
            PathBuf::from("out/r.jsonl.manifest.json")
        );
    }
}
