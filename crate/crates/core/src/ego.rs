//! The sequential loop: initial design, then fit → propose → evaluate until
//! the budget is spent.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::acquisition::{self, InfillConfig};
use crate::benchmarks::Registry;
use crate::design::{self, DesignKind};
use crate::error::{Error, Result};
use crate::rng;
use crate::surrogate::{FitConfig, GpModel};

/// Proposals closer than this (L∞) to an evaluated point are replaced by the
/// most uncertain candidate.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;

/// Minimizing function `f` in dimension `d` with `n` evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Problem {
    pub f: u32,
    pub d: usize,
    pub n: usize,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}-d{}-n{}", self.f, self.d, self.n)
    }
}

/// Initial-design ratio `k` and design distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub k: f64,
    pub design: DesignKind,
}

impl Strategy {
    pub fn new(k: f64, design: DesignKind) -> Result<Self> {
        if !(k > 0.0 && k <= 1.0) {
            return Err(Error::contract(format!("initial ratio must lie in (0, 1], got {k}")));
        }
        Ok(Self { k, design })
    }

    /// `⌈k·n⌉`, tolerant of products that should be integers but round up
    /// by an ulp, and never below 1.
    pub fn initial_size(&self, n: usize) -> usize {
        let v = self.k * n as f64;
        let nearest = v.round();
        let size = if (v - nearest).abs() < 1e-9 { nearest } else { v.ceil() };
        (size as usize).clamp(1, n.max(1))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.k, self.design)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Success,
    SurrogateFailure,
    Error,
}

impl RunStatus {
    pub fn label(self) -> &'static str {
        match self {
            RunStatus::Success => "success",
            RunStatus::SurrogateFailure => "surrogate_failure",
            RunStatus::Error => "error",
        }
    }
}

/// Replicate indices and the seeds derived for them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Replicate {
    pub r_i: u32,
    pub r_a: u32,
    pub seed_design: u64,
    pub seed_algo: u64,
}

/// Outcome of one run. `strategy.design` carries `seed_design` as its seed.
/// Value fields are NaN only for `status = error`
/// records that never evaluated anything.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub problem: Problem,
    pub strategy: Strategy,
    pub r_i: u32,
    pub r_a: u32,
    pub seed_design: u64,
    pub seed_algo: u64,
    pub status: RunStatus,
    pub best_value: f64,
    pub best_point: Vec<f64>,
    pub target_precision: f64,
    pub best_initial_value: f64,
    pub first_adaptive_value: Option<f64>,
    /// Best-so-far value after each evaluation.
    pub trace: Vec<f64>,
    pub distance_to_optimum: f64,
    pub evaluations_used: usize,
    pub message: Option<String>,
}

impl RunRecord {
    /// Record for a job that could not start.
    pub fn errored(problem: Problem, strategy: Strategy, rep: Replicate, message: String) -> Self {
        Self {
            problem,
            strategy: Strategy {
                design: strategy.design.with_seed(rep.seed_design),
                ..strategy
            },
            r_i: rep.r_i,
            r_a: rep.r_a,
            seed_design: rep.seed_design,
            seed_algo: rep.seed_algo,
            status: RunStatus::Error,
            best_value: f64::NAN,
            best_point: Vec::new(),
            target_precision: f64::NAN,
            best_initial_value: f64::NAN,
            first_adaptive_value: None,
            trace: Vec::new(),
            distance_to_optimum: f64::NAN,
            evaluations_used: 0,
            message: Some(message),
        }
    }

    pub fn is_success(&self) -> bool {
        self.status == RunStatus::Success
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EgoConfig {
    /// Surrogate settings; `ranges` and `seed` are set per iteration.
    pub fit: FitConfig,
    /// Infill settings; `seed` is set per iteration.
    pub infill: InfillConfig,
}

/// Prefix minimum of a trace of raw evaluations.
pub fn best_so_far(trace: &[f64]) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::contract("best_so_far needs a non-empty trace"));
    }
    let mut best = f64::INFINITY;
    Ok(trace
        .iter()
        .map(|&v| {
            best = best.min(v);
            best
        })
        .collect())
}

fn near_any(x: &[f64], points: &[Vec<f64>]) -> bool {
    points.iter().any(|p| {
        p.iter()
            .zip(x)
            .all(|(a, b)| (a - b).abs() <= DUPLICATE_TOLERANCE)
    })
}

/// Runs EGO on `problem` with `strategy`.
///
/// The initial design is seeded by `rep.seed_design`; iteration `t` seeds its
/// likelihood restarts with `derive_seed(seed_algo, [t, 0])` and its infill
/// candidates with `derive_seed(seed_algo, [t, 1])`. A surrogate failure ends
/// the run early with `status = surrogate_failure` and the partial trace.
pub fn run_ego(
    registry: &Registry,
    problem: Problem,
    strategy: Strategy,
    rep: Replicate,
    cfg: &EgoConfig,
) -> Result<RunRecord> {
    let strategy = Strategy::new(strategy.k, strategy.design.with_seed(rep.seed_design))?;
    if problem.n == 0 {
        return Err(Error::contract("budget must be at least 1"));
    }
    let function = registry.get(problem.f, problem.d)?;
    let bounds = function.domain();
    let initial = strategy.initial_size(problem.n);

    let unit = design::sample(strategy.design, initial, problem.d)?;
    let mut xs = design::scale_to_box(&unit, &bounds)?;
    let mut ys = xs
        .iter()
        .map(|x| function.evaluate(x))
        .collect::<Result<Vec<f64>>>()?;

    let mut status = RunStatus::Success;
    let mut message = None;
    for t in initial..problem.n {
        let fit_cfg = FitConfig {
            ranges: Some(bounds.widths()),
            seed: rng::derive_seed(rep.seed_algo, &[t as u64, 0]),
            ..cfg.fit.clone()
        };
        let model = match GpModel::fit(&xs, &ys, &fit_cfg) {
            Ok(m) => m,
            Err(e @ Error::SurrogateFailure { .. }) => {
                status = RunStatus::SurrogateFailure;
                message = Some(format!("iteration {}: {e}", t + 1));
                break;
            }
            Err(e) => return Err(e),
        };
        let infill = InfillConfig {
            seed: rng::derive_seed(rep.seed_algo, &[t as u64, 1]),
            ..cfg.infill.clone()
        };
        let proposal = acquisition::propose(&model, &bounds, &infill)?;
        let x = if near_any(&proposal.point, &xs) {
            proposal.most_uncertain
        } else {
            proposal.point
        };
        ys.push(function.evaluate(&x)?);
        xs.push(x);
    }

    let trace = best_so_far(&ys)?;
    let best_idx = ys
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("at least one evaluation");
    let best_value = ys[best_idx];
    let best_point = xs[best_idx].clone();
    let optimum = function.optimum_value();
    let distance = best_point
        .iter()
        .zip(function.optimum_location())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();

    Ok(RunRecord {
        problem,
        strategy,
        r_i: rep.r_i,
        r_a: rep.r_a,
        seed_design: rep.seed_design,
        seed_algo: rep.seed_algo,
        status,
        best_value,
        best_point,
        target_precision: (best_value - optimum).max(0.0),
        best_initial_value: ys[..initial].iter().copied().fold(f64::INFINITY, f64::min),
        first_adaptive_value: ys.get(initial).copied(),
        trace,
        distance_to_optimum: distance,
        evaluations_used: ys.len(),
        message,
    })
}
