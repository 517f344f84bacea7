//! Bounded Nelder–Mead: trial points are clamped into the box before every
//! evaluation.

#[derive(Clone, Debug)]
pub struct NelderMead {
    /// Hard cap on objective evaluations, including the initial simplex.
    pub max_evals: usize,
    /// Initial simplex edge as a fraction of each box width.
    pub initial_step: f64,
    /// Stop once the spread of simplex values falls below this (absolute plus
    /// relative to the best value).
    pub f_tol: f64,
    /// Stop once every simplex edge is shorter than this fraction of the box.
    pub x_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_evals: 200,
            initial_step: 0.1,
            f_tol: 1e-10,
            x_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

impl NelderMead {
    /// Minimizes `f` from `x0` inside `[lower, upper]`. Non-finite values are
    /// treated as `+inf`.
    pub fn minimize<F>(&self, mut f: F, x0: &[f64], lower: &[f64], upper: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        let clamp = |x: &mut [f64]| {
            for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
                *v = v.clamp(*l, *u);
            }
        };
        let mut evals = 0usize;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut start = x0.to_vec();
        clamp(&mut start);
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let v0 = eval(&start, &mut evals);
        simplex.push((start.clone(), v0));
        for j in 0..n {
            if evals >= self.max_evals {
                break;
            }
            let width = upper[j] - lower[j];
            let mut x = start.clone();
            let step = self.initial_step * width;
            x[j] = if x[j] + step <= upper[j] { x[j] + step } else { x[j] - step };
            clamp(&mut x);
            let v = eval(&x, &mut evals);
            simplex.push((x, v));
        }
        if simplex.len() < n + 1 {
            return best_of(simplex, evals);
        }

        let scale: f64 = lower
            .iter()
            .zip(upper)
            .map(|(l, u)| u - l)
            .fold(0.0, f64::max);

        while evals < self.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[n].1;
            if best.is_finite() && worst.is_finite() {
                let spread = worst - best;
                let diameter = simplex[1..]
                    .iter()
                    .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                    .fold(0.0, f64::max);
                if spread <= self.f_tol * (1.0 + best.abs()) && diameter <= self.x_tol * scale {
                    break;
                }
            }

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v / n as f64;
                }
            }
            let toward = |t: f64, from: &[f64]| -> Vec<f64> {
                let mut p: Vec<f64> = centroid
                    .iter()
                    .zip(from)
                    .map(|(c, w)| c + t * (w - c))
                    .collect();
                clamp(&mut p);
                p
            };

            let worst_x = simplex[n].0.clone();
            let reflected = toward(-1.0, &worst_x);
            let fr = eval(&reflected, &mut evals);
            if fr < simplex[0].1 {
                if evals >= self.max_evals {
                    simplex[n] = (reflected, fr);
                    break;
                }
                let expanded = toward(-2.0, &worst_x);
                let fe = eval(&expanded, &mut evals);
                simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (reflected, fr);
                continue;
            }
            if evals >= self.max_evals {
                break;
            }
            let (contracted, fc) = if fr < simplex[n].1 {
                let p = toward(-0.5, &worst_x);
                let v = eval(&p, &mut evals);
                (p, v)
            } else {
                let p = toward(0.5, &worst_x);
                let v = eval(&p, &mut evals);
                (p, v)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
                continue;
            }
            // Shrink toward the best vertex.
            let best_x = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                if evals >= self.max_evals {
                    break;
                }
                let mut p: Vec<f64> = best_x
                    .iter()
                    .zip(&vertex.0)
                    .map(|(b, v)| b + 0.5 * (v - b))
                    .collect();
                clamp(&mut p);
                let v = eval(&p, &mut evals);
                *vertex = (p, v);
            }
        }
        best_of(simplex, evals)
    }
}

fn best_of(simplex: Vec<(Vec<f64>, f64)>, evals: usize) -> Minimum {
    let (x, value) = simplex
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("simplex has at least one vertex");
    Minimum { x, value, evals }
}
