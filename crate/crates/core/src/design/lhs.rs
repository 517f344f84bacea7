use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng::SeededRng;

/// Number of candidate designs compared by the maximin criterion.
pub const MAXIMIN_CANDIDATES: usize = 10;

/// A jittered value inside stratum `[i/n, (i+1)/n)`, nudged down if rounding
/// pushes it onto the upper edge.
fn stratum_value(i: usize, n: usize, u: f64) -> f64 {
    let nf = n as f64;
    let mut v = (i as f64 + u) / nf;
    while v >= 1.0 || (v * nf).floor() as usize > i {
        v = v.next_down();
    }
    v
}

fn plain(n: usize, d: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut points = vec![0.0; n * d];
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        perm.shuffle(rng);
        for (i, &stratum) in perm.iter().enumerate() {
            points[i * d + j] = stratum_value(stratum, n, rng.random::<f64>());
        }
    }
    points
}

fn min_pairwise_sq_distance(points: &[f64], n: usize, d: usize) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            let dist: f64 = (0..d)
                .map(|j| (points[a * d + j] - points[b * d + j]).powi(2))
                .sum();
            best = best.min(dist);
        }
    }
    best
}

/// Best of [`MAXIMIN_CANDIDATES`] plain Latin hypercubes by minimum
/// inter-point distance; ties keep the earliest candidate.
pub(crate) fn maximin(n: usize, d: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut best = plain(n, d, rng);
    let mut best_score = min_pairwise_sq_distance(&best, n, d);
    for _ in 1..MAXIMIN_CANDIDATES {
        let candidate = plain(n, d, rng);
        let score = min_pairwise_sq_distance(&candidate, n, d);
        if score > best_score {
            best = candidate;
            best_score = score;
        }
    }
    best
}
