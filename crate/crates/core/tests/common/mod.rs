//! Test-only oracles: dense linear algebra and a direct GP posterior.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut impl Rng, m: usize, d: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(lo..hi)).collect())
        .collect()
}

/// Matérn 5/2 covariance written out from the textbook form.
pub fn matern(a: &[f64], b: &[f64], lengthscales: &[f64], variance: f64) -> f64 {
    let r = a
        .iter()
        .zip(b)
        .zip(lengthscales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum::<f64>()
        .sqrt();
    let s = 5f64.sqrt() * r;
    variance * (1.0 + s + 5.0 * r * r / 3.0) * (-s).exp()
}

pub fn gram(x: &[Vec<f64>], lengthscales: &[f64], variance: f64, nugget: f64) -> Vec<Vec<f64>> {
    let m = x.len();
    let mut k = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            k[i][j] = matern(&x[i], &x[j], lengthscales, variance);
        }
        k[i][i] += nugget;
    }
    k
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..m).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..m {
        let p = (c..m)
            .max_by(|&i, &j| aug[i][c].abs().total_cmp(&aug[j][c].abs()))
            .unwrap();
        aug.swap(c, p);
        let piv = aug[c][c];
        for v in aug[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..m {
            if r != c {
                let f = aug[r][c];
                if f != 0.0 {
                    for j in 0..2 * m {
                        aug[r][j] -= f * aug[c][j];
                    }
                }
            }
        }
    }
    aug.into_iter().map(|r| r[m..].to_vec()).collect()
}

/// log |det A| by LU with partial pivoting.
pub fn log_abs_det(a: &[Vec<f64>]) -> f64 {
    let m = a.len();
    let mut u = a.to_vec();
    let mut acc = 0.0;
    for c in 0..m {
        let p = (c..m)
            .max_by(|&i, &j| u[i][c].abs().total_cmp(&u[j][c].abs()))
            .unwrap();
        u.swap(c, p);
        acc += u[c][c].abs().ln();
        for r in c + 1..m {
            let f = u[r][c] / u[c][c];
            for j in c..m {
                u[r][j] -= f * u[c][j];
            }
        }
    }
    acc
}

pub fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative log marginal likelihood via an explicit inverse.
pub fn dense_nll(x: &[Vec<f64>], y: &[f64], lengthscales: &[f64], variance: f64, nugget: f64, mean: f64) -> f64 {
    let k = gram(x, lengthscales, variance, nugget);
    let r: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let quad = dot(&r, &mat_vec(&inverse(&k), &r));
    0.5 * quad + 0.5 * log_abs_det(&k) + 0.5 * y.len() as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Posterior mean and sd at a point that is not a training input. The
/// nugget is part of the covariance function, so the prior variance at any
/// point is `variance + nugget`.
pub fn dense_posterior(
    x: &[Vec<f64>],
    y: &[f64],
    lengthscales: &[f64],
    variance: f64,
    nugget: f64,
    mean: f64,
    at: &[f64],
) -> (f64, f64) {
    let kinv = inverse(&gram(x, lengthscales, variance, nugget));
    let k: Vec<f64> = x.iter().map(|xi| matern(xi, at, lengthscales, variance)).collect();
    let r: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let mu = mean + dot(&k, &mat_vec(&kinv, &r));
    let var = variance + nugget - dot(&k, &mat_vec(&kinv, &k));
    (mu, var.max(0.0).sqrt())
}

/// Standard normal CDF by Simpson integration of the density from 0.
pub fn normal_cdf_oracle(z: f64) -> f64 {
    let steps = 20_000;
    let h = z.abs() / steps as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(z.abs());
    for i in 1..steps {
        s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let half = s * h / 3.0;
    if z >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}
