mod common;

use rand::Rng;
use smbo_lab::surrogate::{self, FitConfig, GpModel, KernelParams};

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn likelihood_matches_dense_inverse() {
    let mut rng = common::rng(1);
    for m in 1..=20 {
        for d in [1, 2, 4] {
            let x = common::random_points(&mut rng, m, d, -5.0, 5.0);
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
            let params = KernelParams {
                lengthscales: (0..d).map(|_| rng.random_range(0.5..4.0)).collect(),
                signal_variance: rng.random_range(0.1..20.0),
                nugget: 0.0,
                prior_mean: rng.random_range(-1.0..1.0),
            };
            let params = KernelParams {
                nugget: 1e-3 * params.signal_variance,
                ..params
            };
            let got = surrogate::neg_log_marginal_likelihood(&params, &x, &y).unwrap();
            let want = common::dense_nll(&x, &y, &params.lengthscales, params.signal_variance, params.nugget, params.prior_mean);
            assert!(rel_err(got, want) < 1e-8, "m={m} d={d}: {got} vs {want}");
        }
    }
}

#[test]
fn fitted_model_reports_its_own_likelihood() {
    let mut rng = common::rng(2);
    let x = common::random_points(&mut rng, 12, 2, -5.0, 5.0);
    let y: Vec<f64> = x.iter().map(|p| p[0].sin() * 3.0 + p[1] * p[1] * 0.2).collect();
    let model = GpModel::fit(&x, &y, &FitConfig::default()).unwrap();
    let direct = surrogate::neg_log_marginal_likelihood(model.params(), &x, &y).unwrap();
    assert!(rel_err(model.neg_log_marginal_likelihood(), direct) < 1e-10);
}

#[test]
fn fitted_likelihood_beats_nearby_parameters() {
    let mut rng = common::rng(3);
    let x = common::random_points(&mut rng, 15, 2, -5.0, 5.0);
    let y: Vec<f64> = x.iter().map(|p| (p[0] * 0.7).cos() + 0.3 * p[1]).collect();
    let model = GpModel::fit(&x, &y, &FitConfig::default()).unwrap();
    let best = model.neg_log_marginal_likelihood();
    let range = |t: usize| {
        let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[t]), hi.max(p[t])));
        hi - lo
    };
    for factor in [0.8, 1.25] {
        for t in 0..2 {
            let mut p = model.params().clone();
            p.lengthscales[t] *= factor;
            let (lo, hi) = surrogate::LENGTHSCALE_BOUNDS;
            if p.lengthscales[t] > hi * range(t) || p.lengthscales[t] < lo * range(t) {
                continue;
            }
            if let Ok(v) = surrogate::neg_log_marginal_likelihood(&p, &x, &y) {
                assert!(v >= best - 1e-6, "perturbed lengthscale {t} by {factor}: {v} < {best}");
            }
        }
    }
}

#[test]
fn posterior_matches_dense_formula() {
    let mut rng = common::rng(4);
    for _ in 0..10 {
        let x = common::random_points(&mut rng, 10, 3, -5.0, 5.0);
        let y: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
        let params = KernelParams {
            lengthscales: vec![2.0, 3.0, 1.5],
            signal_variance: 2.5,
            nugget: 2.5e-6,
            prior_mean: 0.4,
        };
        let model = GpModel::with_params(&x, &y, params.clone()).unwrap();
        for at in common::random_points(&mut rng, 5, 3, -5.0, 5.0) {
            let p = model.predict(&at);
            let (mu, sd) = common::dense_posterior(&x, &y, &params.lengthscales, 2.5, 2.5e-6, 0.4, &at);
            assert!((p.mean - mu).abs() < 1e-7 * (1.0 + mu.abs()));
            assert!((p.sd - sd).abs() < 1e-6);
        }
    }
}

#[test]
fn fitted_models_interpolate() {
    let mut rng = common::rng(5);
    let mut checked = 0;
    for _ in 0..10 {
        let x = common::random_points(&mut rng, 8, 2, -5.0, 5.0);
        let y: Vec<f64> = x.iter().map(|p| p[0] * p[0] + 2.0 * (p[1]).sin() - p[0] * p[1]).collect();
        let model = GpModel::fit(&x, &y, &FitConfig { ranges: Some(vec![10.0, 10.0]), ..FitConfig::default() }).unwrap();
        if model.escalations() > 0 {
            continue;
        }
        checked += 1;
        let ymax = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let sd_max = 1e-4 * model.params().signal_variance.sqrt();
        for (xi, yi) in x.iter().zip(&y) {
            let p = model.predict(xi);
            assert!((p.mean - yi).abs() <= 1e-6 * ymax);
            assert!(p.sd <= sd_max);
        }
    }
    assert!(checked > 0);
}
