//! Kriging surrogate: anisotropic Matérn 5/2 Gaussian process with a constant
//! prior mean and maximum-likelihood lengthscales.
//!
//! The covariance is `c(x, x') = σ² ρ(x, x') + η·[x = x']`. The nugget `η` is
//! part of the covariance function, so predictions at a training input
//! interpolate it exactly (zero predictive variance) while far-away
//! predictions revert to `σ² + η`.
//!
//! Fitting profiles the signal variance out of the likelihood: for fixed
//! lengthscales and nugget ratio the optimal `σ²` is closed-form and is clamped
//! to its bounds. Lengthscales are searched in log space by multi-start
//! Nelder–Mead. The nugget is `ratio · σ²` with the ratio climbing a ladder
//! (1e-10 up to 1e-4) until the covariance factorizes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::neldermead::NelderMead;
use crate::rng;

/// Nugget ratios (relative to the signal variance) tried in order.
pub const NUGGET_LADDER: [f64; 7] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    /// Absolute nugget variance.
    pub nugget: f64,
    pub prior_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Per-dimension extent used to bound lengthscales to
    /// `[1e-3·range, 10·range]`. `None` uses the extent of the training data.
    pub ranges: Option<Vec<f64>>,
    pub restarts: usize,
    /// Likelihood evaluations per Nelder–Mead restart.
    pub max_evals: usize,
    pub nugget_ladder: Vec<f64>,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            ranges: None,
            restarts: 10,
            max_evals: 200,
            nugget_ladder: NUGGET_LADDER.to_vec(),
            seed: 0,
        }
    }
}

/// Lower and upper factors applied to `var(y)` to bound the signal variance.
pub const SIGNAL_VARIANCE_BOUNDS: (f64, f64) = (1e-6, 1e6);
/// Lengthscale bounds as multiples of the per-dimension range.
pub const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-3, 10.0);
/// Lengthscale used when a single training point makes MLE ill-posed.
pub const SINGLE_POINT_LENGTHSCALE: f64 = 0.3;

#[inline]
fn matern52(r: f64) -> f64 {
    let s = SQRT5 * r;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

fn correlation(a: &[f64], b: &[f64], lengthscales: &[f64]) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(lengthscales)
        .map(|((u, v), l)| ((u - v) / l).powi(2))
        .sum();
    matern52(r2.sqrt())
}

fn flatten(x: &[Vec<f64>]) -> Result<(Vec<f64>, usize, usize)> {
    let m = x.len();
    let d = x.first().map_or(0, Vec::len);
    if m == 0 || d == 0 {
        return Err(Error::contract("surrogate needs at least one point with d >= 1"));
    }
    if x.iter().any(|row| row.len() != d) {
        return Err(Error::contract("training rows must all have the same dimension"));
    }
    let flat = x.concat();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("training inputs must be finite"));
    }
    Ok((flat, m, d))
}

fn covariance(x: &[f64], m: usize, d: usize, params: &KernelParams) -> Vec<f64> {
    let mut k = vec![0.0; m * m];
    for i in 0..m {
        k[i * m + i] = params.signal_variance + params.nugget;
        for j in 0..i {
            let c = params.signal_variance
                * correlation(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d], &params.lengthscales);
            k[i * m + j] = c;
            k[j * m + i] = c;
        }
    }
    k
}

/// `½ rᵀK⁻¹r + ½ log det K + (m/2) log 2π` with `r = y − prior_mean`,
/// evaluated through a Cholesky factorization of `K`.
pub fn neg_log_marginal_likelihood(params: &KernelParams, x: &[Vec<f64>], y: &[f64]) -> Result<f64> {
    let (flat, m, d) = flatten(x)?;
    if y.len() != m || params.lengthscales.len() != d {
        return Err(Error::contract("inconsistent X, y and lengthscale dimensions"));
    }
    let k = covariance(&flat, m, d, params);
    let l = linalg::cholesky(&k, m).ok_or_else(|| Error::SurrogateFailure {
        nuggets: vec![params.nugget / params.signal_variance],
    })?;
    let r: Vec<f64> = y.iter().map(|v| v - params.prior_mean).collect();
    let v = linalg::forward_solve(&l, m, &r);
    Ok(0.5 * linalg::dot(&v, &v) + 0.5 * linalg::log_det(&l, m) + 0.5 * m as f64 * LN_2PI)
}

/// Squared coordinate differences for every pair `i > j`, reused across
/// likelihood evaluations.
struct PairTable {
    m: usize,
    d: usize,
    sq: Vec<f64>,
}

impl PairTable {
    fn new(x: &[f64], m: usize, d: usize) -> Self {
        let mut sq = Vec::with_capacity(m * (m.saturating_sub(1)) / 2 * d);
        for i in 0..m {
            for j in 0..i {
                for t in 0..d {
                    sq.push((x[i * d + t] - x[j * d + t]).powi(2));
                }
            }
        }
        Self { m, d, sq }
    }

    /// Correlation matrix plus `ratio` on the diagonal.
    fn correlation_matrix(&self, inv_sq_lengthscales: &[f64], ratio: f64) -> Vec<f64> {
        let (m, d) = (self.m, self.d);
        let mut c = vec![0.0; m * m];
        let mut pairs = self.sq.chunks_exact(d);
        for i in 0..m {
            c[i * m + i] = 1.0 + ratio;
            for j in 0..i {
                let diff = pairs.next().expect("pair table covers i > j");
                let r2: f64 = diff.iter().zip(inv_sq_lengthscales).map(|(a, b)| a * b).sum();
                let v = matern52(r2.sqrt());
                c[i * m + j] = v;
                c[j * m + i] = v;
            }
        }
        c
    }
}

/// Profiled likelihood over log-lengthscales for one nugget ratio.
struct Profile<'a> {
    pairs: &'a PairTable,
    residuals: &'a [f64],
    ratio: f64,
    variance_bounds: (f64, f64),
}

impl Profile<'_> {
    /// Returns (NLL, σ²); `+inf` when the covariance is not factorizable.
    fn evaluate(&self, log_lengthscales: &[f64]) -> (f64, f64) {
        let m = self.pairs.m;
        let inv_sq: Vec<f64> = log_lengthscales.iter().map(|l| (-2.0 * l).exp()).collect();
        let c = self.pairs.correlation_matrix(&inv_sq, self.ratio);
        let Some(l) = linalg::cholesky(&c, m) else {
            return (f64::INFINITY, f64::NAN);
        };
        let v = linalg::forward_solve(&l, m, self.residuals);
        let quad = linalg::dot(&v, &v);
        let sigma2 = (quad / m as f64).clamp(self.variance_bounds.0, self.variance_bounds.1);
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return (f64::INFINITY, sigma2);
        }
        let nll = 0.5 * quad / sigma2
            + 0.5 * linalg::log_det(&l, m)
            + 0.5 * m as f64 * sigma2.ln()
            + 0.5 * m as f64 * LN_2PI;
        (nll, sigma2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub sd: f64,
}

/// A fitted, immutable GP.
#[derive(Clone, Debug)]
pub struct GpModel {
    x: Vec<f64>,
    y: Vec<f64>,
    m: usize,
    d: usize,
    params: KernelParams,
    chol: Vec<f64>,
    weights: Vec<f64>,
    nugget_ratio: f64,
    escalations: usize,
}

impl GpModel {
    /// Fits hyperparameters by maximum likelihood.
    ///
    /// A single training point skips the likelihood search and uses
    /// lengthscale `0.3·range`, unit signal variance and the observed value as
    /// prior mean.
    pub fn fit(x: &[Vec<f64>], y: &[f64], cfg: &FitConfig) -> Result<Self> {
        let (flat, m, d) = flatten(x)?;
        if y.len() != m {
            return Err(Error::contract(format!("{} inputs but {} values", m, y.len())));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("training values must be finite"));
        }
        if cfg.nugget_ladder.is_empty() || cfg.restarts == 0 || cfg.max_evals == 0 {
            return Err(Error::contract("fit needs a non-empty nugget ladder and positive search budgets"));
        }
        let ranges = match &cfg.ranges {
            Some(r) if r.len() == d && r.iter().all(|v| *v > 0.0 && v.is_finite()) => r.clone(),
            Some(_) => return Err(Error::contract("ranges must be positive, one per dimension")),
            None => data_ranges(&flat, m, d),
        };

        if m == 1 {
            let ratio = cfg.nugget_ladder[0];
            let params = KernelParams {
                lengthscales: ranges.iter().map(|r| SINGLE_POINT_LENGTHSCALE * r).collect(),
                signal_variance: 1.0,
                nugget: ratio,
                prior_mean: y[0],
            };
            return Self::with_params(x, y, params);
        }

        let mean = y.iter().sum::<f64>() / m as f64;
        let residuals: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let var_y = linalg::dot(&residuals, &residuals) / m as f64;
        let variance_bounds = (
            SIGNAL_VARIANCE_BOUNDS.0 * var_y,
            SIGNAL_VARIANCE_BOUNDS.1 * var_y,
        );
        let lower: Vec<f64> = ranges.iter().map(|r| (LENGTHSCALE_BOUNDS.0 * r).ln()).collect();
        let upper: Vec<f64> = ranges.iter().map(|r| (LENGTHSCALE_BOUNDS.1 * r).ln()).collect();
        let starts = start_points(&lower, &upper, cfg.restarts, cfg.seed);
        let pairs = PairTable::new(&flat, m, d);
        let search = NelderMead {
            max_evals: cfg.max_evals,
            initial_step: 0.1,
            f_tol: 1e-8,
            x_tol: 1e-6,
        };

        for (rung, &ratio) in cfg.nugget_ladder.iter().enumerate() {
            let profile = Profile {
                pairs: &pairs,
                residuals: &residuals,
                ratio,
                variance_bounds,
            };
            let mut best: Option<(Vec<f64>, f64)> = None;
            for start in &starts {
                let found = search.minimize(|t| profile.evaluate(t).0, start, &lower, &upper);
                if found.value.is_finite() && best.as_ref().is_none_or(|b| found.value < b.1) {
                    best = Some((found.x, found.value));
                }
            }
            let Some((theta, _)) = best else { continue };
            let (_, sigma2) = profile.evaluate(&theta);
            let params = KernelParams {
                lengthscales: theta.iter().map(|t| t.exp()).collect(),
                signal_variance: sigma2,
                nugget: ratio * sigma2,
                prior_mean: mean,
            };
            if let Ok(mut model) = Self::with_params(x, y, params) {
                model.nugget_ratio = ratio;
                model.escalations = rung;
                return Ok(model);
            }
        }
        Err(Error::SurrogateFailure {
            nuggets: cfg.nugget_ladder.clone(),
        })
    }

    /// Conditions a GP with fixed hyperparameters on the data.
    pub fn with_params(x: &[Vec<f64>], y: &[f64], params: KernelParams) -> Result<Self> {
        let (flat, m, d) = flatten(x)?;
        if y.len() != m || params.lengthscales.len() != d {
            return Err(Error::contract("inconsistent X, y and lengthscale dimensions"));
        }
        let ratio = params.nugget / params.signal_variance;
        let failure = || Error::SurrogateFailure {
            nuggets: vec![ratio],
        };
        if !(params.signal_variance > 0.0)
            || !(params.nugget >= 0.0)
            || params.lengthscales.iter().any(|l| !(*l > 0.0))
        {
            return Err(failure());
        }
        let k = covariance(&flat, m, d, &params);
        let chol = linalg::cholesky(&k, m).ok_or_else(failure)?;
        let r: Vec<f64> = y.iter().map(|v| v - params.prior_mean).collect();
        let weights = linalg::backward_solve(&chol, m, &linalg::forward_solve(&chol, m, &r));
        Ok(Self {
            x: flat,
            y: y.to_vec(),
            m,
            d,
            params,
            chol,
            weights,
            nugget_ratio: ratio,
            escalations: 0,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        debug_assert_eq!(x.len(), self.d);
        let p = &self.params;
        let k: Vec<f64> = self
            .x
            .chunks_exact(self.d)
            .map(|xi| {
                let c = p.signal_variance * correlation(x, xi, &p.lengthscales);
                if xi == x {
                    c + p.nugget
                } else {
                    c
                }
            })
            .collect();
        let mean = p.prior_mean + linalg::dot(&k, &self.weights);
        let v = linalg::forward_solve(&self.chol, self.m, &k);
        let var = (p.signal_variance + p.nugget - linalg::dot(&v, &v)).max(0.0);
        Prediction {
            mean,
            sd: var.sqrt(),
        }
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn inputs(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.d)
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Smallest observed value.
    pub fn best_observed(&self) -> f64 {
        self.y.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Nugget relative to the signal variance.
    pub fn nugget_ratio(&self) -> f64 {
        self.nugget_ratio
    }

    /// Ladder rungs climbed beyond the first.
    pub fn escalations(&self) -> usize {
        self.escalations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Covariance between training inputs `i` and `j` (nugget on the diagonal).
    pub fn covariance_entry(&self, i: usize, j: usize) -> f64 {
        let p = &self.params;
        let a = &self.x[i * self.d..(i + 1) * self.d];
        let b = &self.x[j * self.d..(j + 1) * self.d];
        let c = p.signal_variance * correlation(a, b, &p.lengthscales);
        if i == j {
            c + p.nugget
        } else {
            c
        }
    }

    /// Likelihood of the training data under the fitted parameters.
    pub fn neg_log_marginal_likelihood(&self) -> f64 {
        let r: Vec<f64> = self.y.iter().map(|v| v - self.params.prior_mean).collect();
        let v = linalg::forward_solve(&self.chol, self.m, &r);
        0.5 * linalg::dot(&v, &v)
            + 0.5 * linalg::log_det(&self.chol, self.m)
            + 0.5 * self.m as f64 * LN_2PI
    }
}

fn data_ranges(x: &[f64], m: usize, d: usize) -> Vec<f64> {
    (0..d)
        .map(|j| {
            let (lo, hi) = (0..m).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                (lo.min(x[i * d + j]), hi.max(x[i * d + j]))
            });
            if hi > lo {
                hi - lo
            } else {
                1.0
            }
        })
        .collect()
}

/// Halton points over the log-bounds, rotated by a seeded uniform shift
/// (modulo 1) so different seeds explore different starts.
fn start_points(lower: &[f64], upper: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = lower.len();
    let mut rng = rng::seeded(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let base = crate::design::sample(
        crate::design::DesignKind::new(crate::design::DesignVariant::Halton, 0),
        count,
        d.min(crate::design::MAX_DIM),
    )
    .expect("halton supports the surrogate dimension");
    base.rows()
        .map(|row| {
            (0..d)
                .map(|j| {
                    let u = (row[j % row.len()] + shift[j]).fract();
                    lower[j] + u * (upper[j] - lower[j])
                })
                .collect()
        })
        .collect()
}
