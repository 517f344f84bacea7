mod common;

use rand::Rng;
use rand_distr::StandardNormal;
use smbo_lab::acquisition::{self, InfillConfig};
use smbo_lab::design::SearchBox;
use smbo_lab::surrogate::{FitConfig, GpModel};

/// Sample mean and standard error of max(f_min − Y, 0), Y ~ N(mean, sd²).
fn monte_carlo_ei(rng: &mut impl Rng, mean: f64, sd: f64, f_min: f64, draws: usize) -> (f64, f64) {
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..draws {
        let z: f64 = rng.sample(StandardNormal);
        let imp = (f_min - (mean + sd * z)).max(0.0);
        s += imp;
        s2 += imp * imp;
    }
    let n = draws as f64;
    let mu = s / n;
    let var = (s2 / n - mu * mu).max(0.0) * n / (n - 1.0);
    (mu, (var / n).sqrt())
}

#[test]
fn closed_form_matches_monte_carlo() {
    let mut rng = common::rng(10);
    for i in 0..20 {
        // Standardised gaps within ±3 keep the improvement event frequent
        // enough for the sample mean to be informative.
        let mean = rng.random_range(-3.0..3.0);
        let sd = rng.random_range(0.05..3.0);
        let f_min = mean + sd * rng.random_range(-3.0..3.0);
        let ei = acquisition::expected_improvement(mean, sd, f_min);
        let (mc, se) = monte_carlo_ei(&mut rng, mean, sd, f_min, 1_000_000);
        assert!((ei - mc).abs() <= 4.0 * se.max(1e-12), "triple {i}: {ei} vs {mc} ± {se}");
    }
}

#[test]
fn closed_form_reference_points() {
    assert!((acquisition::expected_improvement(0.0, 1.0, 0.0) - 0.3989423).abs() < 1e-6);
    for z in [-3.0, -1.2, -0.1, 0.0, 0.4, 2.5] {
        assert!((acquisition::normal_cdf(z) - common::normal_cdf_oracle(z)).abs() < 1e-10);
    }
    assert!((acquisition::expected_improvement(0.0, 1.0, 1.0) - 1.0833154).abs() < 1e-6);
    assert_eq!(acquisition::expected_improvement(1.0, 0.0, 3.0), 0.0);
    assert_eq!(acquisition::expected_improvement(-7.0, 0.0, 1.0), 0.0);
}

#[test]
fn proposal_reaches_dense_grid_maximum() {
    let bounds = SearchBox::cube(-5.0, 5.0, 2).unwrap();
    for seed in 0..4u64 {
        let mut rng = common::rng(100 + seed);
        let x = common::random_points(&mut rng, 7, 2, -5.0, 5.0);
        let y: Vec<f64> = x.iter().map(|p| (p[0] - 1.0).powi(2) + 0.5 * (p[1] + 2.0).powi(2)).collect();
        let cfg = FitConfig {
            ranges: Some(bounds.widths()),
            seed,
            ..FitConfig::default()
        };
        let model = GpModel::fit(&x, &y, &cfg).unwrap();
        let f_min = model.best_observed();
        let ei_at = |p: &[f64]| {
            let pr = model.predict(p);
            acquisition::expected_improvement(pr.mean, pr.sd, f_min)
        };
        let mut grid_max: f64 = 0.0;
        for i in 0..=100 {
            for j in 0..=100 {
                let p = [-5.0 + 0.1 * i as f64, -5.0 + 0.1 * j as f64];
                grid_max = grid_max.max(ei_at(&p));
            }
        }
        let prop = acquisition::propose(&model, &bounds, &InfillConfig { seed, ..InfillConfig::default() }).unwrap();
        assert!(bounds.contains(&prop.point));
        assert!((prop.expected_improvement - ei_at(&prop.point)).abs() <= 1e-12 * (1.0 + grid_max));
        assert!(
            prop.expected_improvement >= grid_max * (1.0 - 1e-6),
            "seed {seed}: proposal EI {} below grid maximum {grid_max}",
            prop.expected_improvement
        );
    }
}
