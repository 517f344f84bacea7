//! Experiment plans, the factorial job grid and sweep execution.

mod store;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::Registry;
use crate::design::DesignKind;
use crate::ego::{self, EgoConfig, Problem, Replicate, RunRecord, RunStatus, Strategy};
use crate::error::{Error, Result};
use crate::rng;

pub use store::{
    compress_trace, config_hash, expand_trace, from_line, manifest_path, read_records, to_line,
    Manifest, WireRecord,
};

/// A factorial grid, read from a flat TOML document:
///
/// ```toml
/// functions = [1, 8]
/// dimensions = [2, 5]
/// budgets = [16, 32]
/// ratios = [0.1, 0.5, 1.0]
/// designs = ["uniform", "lhs", "halton", "sobol"]
/// design_replicates = 5
/// algo_replicates = 5
/// base_seed = 1
/// parallelism = 4
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub functions: Vec<u32>,
    pub dimensions: Vec<usize>,
    pub budgets: Vec<usize>,
    pub ratios: Vec<f64>,
    pub designs: Vec<DesignKind>,
    /// Replicates of each random design; deterministic designs get one.
    pub design_replicates: u32,
    pub algo_replicates: u32,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_parallelism() -> usize {
    1
}

impl ExperimentPlan {
    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: Self = toml::from_str(text).map_err(|e| Error::Plan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::at_path(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Plan(m) => Error::Plan(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("functions", self.functions.is_empty()),
            ("dimensions", self.dimensions.is_empty()),
            ("budgets", self.budgets.is_empty()),
            ("ratios", self.ratios.is_empty()),
            ("designs", self.designs.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::contract(format!("plan field '{name}' must not be empty")));
        }
        if self.design_replicates == 0 || self.algo_replicates == 0 {
            return Err(Error::contract("replicate counts must be at least 1"));
        }
        if let Some(k) = self.ratios.iter().find(|k| !(**k > 0.0 && **k <= 1.0)) {
            return Err(Error::contract(format!("ratio {k} is outside (0, 1]")));
        }
        if self.budgets.contains(&0) || self.dimensions.contains(&0) {
            return Err(Error::contract("budgets and dimensions must be positive"));
        }
        Ok(())
    }

    fn design_replicates_for(&self, design: &DesignKind) -> u32 {
        if design.is_random() {
            self.design_replicates
        } else {
            1
        }
    }

    /// `|F|·|D|·|N|·|K|·Σ_s R_i(s)·R_A`.
    pub fn job_count(&self) -> usize {
        let per_design: usize = self
            .designs
            .iter()
            .map(|s| self.design_replicates_for(s) as usize)
            .sum();
        self.functions.len()
            * self.dimensions.len()
            * self.budgets.len()
            * self.ratios.len()
            * per_design
            * self.algo_replicates as usize
    }
}

/// Identity of a job inside a store.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JobKey {
    pub problem: Problem,
    pub k_bits: u64,
    pub design: &'static str,
    pub r_i: u32,
    pub r_a: u32,
}

impl JobKey {
    pub fn of_record(r: &RunRecord) -> Self {
        Self {
            problem: r.problem,
            k_bits: r.strategy.k.to_bits(),
            design: r.strategy.design.label(),
            r_i: r.r_i,
            r_a: r.r_a,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Job {
    pub problem: Problem,
    pub strategy: Strategy,
    pub replicate: Replicate,
}

impl Job {
    pub fn key(&self) -> JobKey {
        JobKey {
            problem: self.problem,
            k_bits: self.strategy.k.to_bits(),
            design: self.strategy.design.label(),
            r_i: self.replicate.r_i,
            r_a: self.replicate.r_a,
        }
    }

    pub fn run(&self, registry: &Registry, cfg: &EgoConfig) -> RunRecord {
        ego::run_ego(registry, self.problem, self.strategy, self.replicate, cfg).unwrap_or_else(|e| {
            RunRecord::errored(self.problem, self.strategy, self.replicate, e.to_string())
        })
    }
}

fn design_tag(design: &DesignKind) -> u64 {
    design
        .label()
        .bytes()
        .fold(0u64, |h, b| rng::splitmix64(h ^ u64::from(b)))
}

/// Enumerates jobs in the order f, d, n, k, design, r_i, r_A (each list in
/// plan order, replicates 1-based). The design seed depends on every
/// coordinate except r_A, so algorithm replicates share their design.
pub fn expand_plan(plan: &ExperimentPlan) -> Result<Vec<Job>> {
    plan.validate()?;
    let mut jobs = Vec::with_capacity(plan.job_count());
    for &f in &plan.functions {
        for &d in &plan.dimensions {
            for &n in &plan.budgets {
                for &k in &plan.ratios {
                    for design in &plan.designs {
                        let design = design.with_seed(0);
                        for r_i in 1..=plan.design_replicates_for(&design) {
                            let seed_design = rng::derive_seed(
                                plan.base_seed,
                                &[u64::from(f), d as u64, n as u64, k.to_bits(), design_tag(&design), u64::from(r_i)],
                            );
                            for r_a in 1..=plan.algo_replicates {
                                jobs.push(Job {
                                    problem: Problem { f, d, n },
                                    strategy: Strategy { k, design },
                                    replicate: Replicate {
                                        r_i,
                                        r_a,
                                        seed_design,
                                        seed_algo: rng::derive_seed(seed_design, &[u64::from(r_a)]),
                                    },
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(jobs)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BucketCounts {
    pub total: usize,
    pub success: usize,
    pub surrogate_failure: usize,
    pub error: usize,
}

impl BucketCounts {
    fn add(&mut self, status: RunStatus) {
        self.total += 1;
        match status {
            RunStatus::Success => self.success += 1,
            RunStatus::SurrogateFailure => self.surrogate_failure += 1,
            RunStatus::Error => self.error += 1,
        }
    }

    pub fn success_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.success as f64 / self.total as f64
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub jobs: usize,
    pub skipped: usize,
    pub executed: usize,
    /// Status counts over the plan's records, by budget n.
    pub by_budget: BTreeMap<usize, BucketCounts>,
}

impl Summary {
    pub fn overall(&self) -> BucketCounts {
        self.by_budget.values().fold(BucketCounts::default(), |mut acc, b| {
            acc.total += b.total;
            acc.success += b.success;
            acc.surrogate_failure += b.surrogate_failure;
            acc.error += b.error;
            acc
        })
    }
}

/// Runs every job of `plan` not already present in the store at `out`,
/// appending records in job order. Run failures become records; a storage
/// failure aborts with the records written so far intact.
pub fn execute(plan: &ExperimentPlan, registry: &Registry, cfg: &EgoConfig, out: &Path) -> Result<Summary> {
    let jobs = expand_plan(plan)?;
    store::write_or_check_manifest(out, &Manifest::new(plan, cfg)?)?;
    let (existing, done, mut writer) = store::open_for_append(out)?;
    let pending: Vec<&Job> = jobs.iter().filter(|j| !done.contains(&j.key())).collect();

    let wanted: HashSet<JobKey> = jobs.iter().map(Job::key).collect();
    let mut summary = Summary {
        jobs: jobs.len(),
        skipped: jobs.len() - pending.len(),
        executed: 0,
        by_budget: BTreeMap::new(),
    };
    for r in existing.iter().filter(|r| wanted.contains(&JobKey::of_record(r))) {
        summary.by_budget.entry(r.problem.n).or_default().add(r.status);
    }
    log::info!(
        "{} jobs, {} already in {}, {} to run",
        summary.jobs,
        summary.skipped,
        out.display(),
        pending.len()
    );

    let threads = plan.parallelism.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Capability(format!("thread pool: {e}")))?;
    for chunk in pending.chunks(32 * threads) {
        let records: Vec<RunRecord> =
            pool.install(|| chunk.par_iter().map(|job| job.run(registry, cfg)).collect());
        for r in &records {
            writer.append(r)?;
            summary.by_budget.entry(r.problem.n).or_default().add(r.status);
            if r.status != RunStatus::Success {
                log::debug!(
                    "{} {} r_i={} r_A={}: {}",
                    r.problem,
                    r.strategy,
                    r.r_i,
                    r.r_a,
                    r.message.as_deref().unwrap_or("")
                );
            }
        }
        writer.flush()?;
        summary.executed += records.len();
        log::info!("{}/{} jobs done", summary.skipped + summary.executed, summary.jobs);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{BenchmarkFunction, Modality, SPHERE};
    use proptest::prelude::*;

    fn labels(ls: &[&str]) -> Vec<DesignKind> {
        ls.iter().map(|l| l.parse().unwrap()).collect()
    }

    fn plan(f: Vec<u32>, d: Vec<usize>, n: Vec<usize>, k: Vec<f64>, s: &[&str], ri: u32, ra: u32) -> ExperimentPlan {
        ExperimentPlan {
            functions: f,
            dimensions: d,
            budgets: n,
            ratios: k,
            designs: labels(s),
            design_replicates: ri,
            algo_replicates: ra,
            base_seed: 11,
            parallelism: 1,
        }
    }

    #[test]
    fn full_factorial_grid_count() {
        let p = plan(
            (1..=24).collect(),
            vec![2, 3, 5, 10, 20],
            vec![16, 32, 64, 128, 256, 512],
            (1..=10).map(|i| i as f64 / 10.0).collect(),
            &["uniform", "lhs", "halton", "sobol"],
            5,
            5,
        );
        assert_eq!(p.job_count(), 576_000);
        assert_eq!(expand_plan(&p).unwrap().len(), 576_000);
    }

    #[test]
    fn small_grid_counts() {
        let p = plan(vec![1], vec![2], vec![16], vec![0.5], &["halton"], 5, 5);
        assert_eq!(expand_plan(&p).unwrap().len(), 5);
        let p = plan(vec![1, 2], vec![2], vec![16], vec![0.1, 0.5], &["halton", "lhs"], 5, 2);
        assert_eq!(expand_plan(&p).unwrap().len(), 48);
    }

    #[test]
    fn empty_lists_are_rejected() {
        let p = plan(vec![], vec![2], vec![16], vec![0.5], &["lhs"], 1, 1);
        assert!(matches!(expand_plan(&p), Err(Error::Contract(_))));
        let p = plan(vec![1], vec![2], vec![16], vec![0.5], &[], 1, 1);
        assert!(matches!(expand_plan(&p), Err(Error::Contract(_))));
    }

    #[test]
    fn seeds_are_shared_across_algo_replicates_only() {
        let p = plan(vec![1], vec![2], vec![16], vec![0.5], &["lhs"], 2, 2);
        let jobs = expand_plan(&p).unwrap();
        let keys: HashSet<_> = jobs.iter().map(Job::key).collect();
        assert_eq!(keys.len(), 4);
        assert_eq!(jobs[0].replicate.seed_design, jobs[1].replicate.seed_design);
        assert_ne!(jobs[0].replicate.seed_algo, jobs[1].replicate.seed_algo);
        assert_ne!(jobs[0].replicate.seed_design, jobs[2].replicate.seed_design);
        assert_eq!(expand_plan(&p).unwrap(), jobs);
    }

    #[test]
    fn plan_parses_from_toml() {
        let p = ExperimentPlan::from_toml(
            r#"
            functions = [1, 8]
            dimensions = [2]
            budgets = [16]
            ratios = [0.1, 1.0]
            designs = ["halton", "lhs", "sobol-plain"]
            design_replicates = 3
            algo_replicates = 2
            base_seed = 5
            "#,
        )
        .unwrap();
        assert_eq!(p.parallelism, 1);
        assert_eq!(p.job_count(), 2 * 2 * (1 + 3 + 1) * 2);
        assert!(matches!(ExperimentPlan::from_toml("functions = [1]"), Err(Error::Plan(_))));
        assert!(ExperimentPlan::from_toml(
            "functions=[1]\ndimensions=[2]\nbudgets=[8]\nratios=[0.5]\ndesigns=[\"grid\"]\ndesign_replicates=1\nalgo_replicates=1"
        )
        .is_err());
    }

    #[test]
    fn hash_ignores_parallelism() {
        let mut p = plan(vec![1], vec![2], vec![16], vec![0.5], &["lhs"], 2, 2);
        let cfg = EgoConfig::default();
        let h = config_hash(&p, &cfg).unwrap();
        p.parallelism = 8;
        assert_eq!(config_hash(&p, &cfg).unwrap(), h);
        p.base_seed += 1;
        assert_ne!(config_hash(&p, &cfg).unwrap(), h);
    }

    fn quick_cfg() -> EgoConfig {
        let mut cfg = EgoConfig::default();
        cfg.fit.restarts = 2;
        cfg.fit.max_evals = 60;
        cfg.infill.candidate_count = 128;
        cfg
    }

    #[test]
    fn resume_skips_completed_jobs() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.jsonl");
        let p = plan(vec![SPHERE], vec![2], vec![6], vec![0.5, 1.0], &["lhs", "halton"], 2, 1);
        let reg = Registry::new();
        let cfg = quick_cfg();
        let full = execute(&p, &reg, &cfg, &out).unwrap();
        assert_eq!(full.executed, 6);
        let reference = std::fs::read_to_string(&out).unwrap();

        // Keep two complete lines plus half of the third.
        let lines: Vec<&str> = reference.lines().collect();
        let partial = format!("{}\n{}\n{}", lines[0], lines[1], &lines[2][..lines[2].len() / 2]);
        std::fs::write(&out, partial).unwrap();
        let resumed = execute(&p, &reg, &cfg, &out).unwrap();
        assert_eq!(resumed.skipped, 2);
        assert_eq!(resumed.executed, 4);
        assert_eq!(std::fs::read_to_string(&out).unwrap(), reference);
        assert_eq!(resumed.by_budget, full.by_budget);

        let again = execute(&p, &reg, &cfg, &out).unwrap();
        assert_eq!(again.executed, 0);
        assert_eq!(std::fs::read_to_string(&out).unwrap(), reference);
    }

    #[test]
    fn store_from_other_plan_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.jsonl");
        let mut p = plan(vec![SPHERE], vec![2], vec![4], vec![1.0], &["halton"], 1, 1);
        let reg = Registry::new();
        execute(&p, &reg, &quick_cfg(), &out).unwrap();
        p.base_seed = 99;
        assert!(matches!(execute(&p, &reg, &quick_cfg(), &out), Err(Error::Store(_))));
    }

    #[test]
    fn degenerate_function_counts_surrogate_failures() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.jsonl");
        let reg = Registry::new().with_function(BenchmarkFunction::custom(
            900,
            "flat",
            Modality::Unimodal,
            vec![0.0, 0.0],
            0.0,
            |_| 0.0,
        ));
        let p = plan(vec![SPHERE, 900], vec![2], vec![8], vec![0.5], &["lhs"], 2, 1);
        let s = execute(&p, &reg, &quick_cfg(), &out).unwrap();
        let b = s.by_budget[&8];
        assert_eq!((b.total, b.success, b.surrogate_failure, b.error), (4, 2, 2, 0));
        assert_eq!(b.success_fraction(), 0.5);
        let recs = read_records(&out).unwrap();
        assert!(recs
            .iter()
            .filter(|r| r.problem.f == 900)
            .all(|r| r.status == RunStatus::SurrogateFailure));
    }

    #[test]
    fn unknown_function_becomes_error_record() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.jsonl");
        let p = plan(vec![99], vec![2], vec![4], vec![0.5], &["halton"], 1, 1);
        let s = execute(&p, &Registry::new(), &quick_cfg(), &out).unwrap();
        assert_eq!(s.by_budget[&4].error, 1);
        let recs = read_records(&out).unwrap();
        assert_eq!(recs[0].status, RunStatus::Error);
    }

    #[test]
    fn parallel_and_serial_stores_match() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::new();
        let mut p = plan(vec![SPHERE, 8], vec![2], vec![6], vec![0.5], &["lhs", "sobol"], 2, 1);
        let serial = dir.path().join("s.jsonl");
        let parallel = dir.path().join("p.jsonl");
        execute(&p, &reg, &quick_cfg(), &serial).unwrap();
        p.parallelism = 3;
        execute(&p, &reg, &quick_cfg(), &parallel).unwrap();
        assert_eq!(
            std::fs::read_to_string(serial).unwrap(),
            std::fs::read_to_string(parallel).unwrap()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn job_count_matches_enumeration(
            nf in 1usize..4, nd in 1usize..3, nn in 1usize..3, nk in 1usize..4,
            designs in proptest::sample::subsequence(vec!["uniform", "lhs", "halton", "sobol", "sobol-plain"], 1..=5),
            ri in 1u32..4, ra in 1u32..4,
        ) {
            let p = plan(
                (1..=nf as u32).collect(),
                (2..2 + nd).collect(),
                (1..=nn).map(|i| 8 * i).collect(),
                (1..=nk).map(|i| i as f64 / nk as f64).collect(),
                &designs, ri, ra,
            );
            let jobs = expand_plan(&p).unwrap();
            prop_assert_eq!(jobs.len(), p.job_count());
            let keys: HashSet<_> = jobs.iter().map(Job::key).collect();
            prop_assert_eq!(keys.len(), jobs.len());
        }
    }
}
