//! Expected improvement and its maximisation over the search box.

use serde::{Deserialize, Serialize};

use crate::design::{self, DesignKind, DesignVariant, SearchBox};
use crate::error::{Error, Result};
use crate::neldermead::NelderMead;
use crate::surrogate::GpModel;

/// Below this predictive standard deviation EI is taken to be zero.
pub const SD_FLOOR: f64 = 1e-12;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `E[max(f_min − Y, 0)]` for `Y ~ N(mean, sd²)`.
pub fn expected_improvement(mean: f64, sd: f64, f_min: f64) -> f64 {
    if sd < SD_FLOOR {
        return 0.0;
    }
    let gap = f_min - mean;
    let z = gap / sd;
    (gap * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfillConfig {
    pub candidate_count: usize,
    pub refine_starts: usize,
    /// EI evaluations per Nelder–Mead refinement.
    pub refine_budget: usize,
    pub seed: u64,
}

impl Default for InfillConfig {
    fn default() -> Self {
        Self {
            candidate_count: 1000,
            refine_starts: 5,
            refine_budget: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Proposal {
    pub point: Vec<f64>,
    pub expected_improvement: f64,
    /// Candidate with the largest predictive standard deviation.
    pub most_uncertain: Vec<f64>,
    /// True when every candidate had zero EI and `point` is `most_uncertain`.
    pub exploration_fallback: bool,
}

/// Maximises EI: scrambled Sobol' candidates in the box, then Nelder–Mead
/// from the best few, with iterates clamped to the box.
pub fn propose(model: &GpModel, bounds: &SearchBox, cfg: &InfillConfig) -> Result<Proposal> {
    if model.dim() != bounds.dim() {
        return Err(Error::contract(format!(
            "model dimension {} does not match box dimension {}",
            model.dim(),
            bounds.dim()
        )));
    }
    if cfg.candidate_count == 0 || cfg.refine_starts == 0 || cfg.refine_budget == 0 {
        return Err(Error::contract("infill counts must all be at least 1"));
    }
    let f_min = model.best_observed();
    let kind = DesignKind::new(DesignVariant::Sobol, cfg.seed);
    let unit = design::sample(kind, cfg.candidate_count, bounds.dim())?;
    let candidates = design::scale_to_box(&unit, bounds)?;

    let scored: Vec<(f64, f64)> = candidates
        .iter()
        .map(|c| {
            let p = model.predict(c);
            (expected_improvement(p.mean, p.sd, f_min), p.sd)
        })
        .collect();
    let most_uncertain = argmax(scored.iter().map(|s| s.1));
    let most_uncertain = candidates[most_uncertain].clone();

    let max_ei = scored.iter().map(|s| s.0).fold(0.0, f64::max);
    if !(max_ei > 0.0) {
        return Ok(Proposal {
            point: most_uncertain.clone(),
            expected_improvement: 0.0,
            most_uncertain,
            exploration_fallback: true,
        });
    }

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| scored[b].0.total_cmp(&scored[a].0).then(a.cmp(&b)));
    let mut best_point = candidates[order[0]].clone();
    let mut best_ei = scored[order[0]].0;

    let search = NelderMead {
        max_evals: cfg.refine_budget,
        initial_step: 0.05,
        f_tol: 1e-12,
        x_tol: 1e-9,
    };
    let neg_ei = |x: &[f64]| {
        let p = model.predict(x);
        -expected_improvement(p.mean, p.sd, f_min)
    };
    for &idx in order.iter().take(cfg.refine_starts) {
        let found = search.minimize(neg_ei, &candidates[idx], bounds.lower(), bounds.upper());
        if -found.value > best_ei {
            best_ei = -found.value;
            best_point = found.x;
        }
    }
    bounds.clamp(&mut best_point);
    Ok(Proposal {
        point: best_point,
        expected_improvement: best_ei,
        most_uncertain,
        exploration_fallback: false,
    })
}

/// The point `propose` selects.
pub fn propose_next(model: &GpModel, bounds: &SearchBox, cfg: &InfillConfig) -> Result<Vec<f64>> {
    propose(model, bounds, cfg).map(|p| p.point)
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}
