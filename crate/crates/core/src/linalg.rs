//! Dense Cholesky factorization and triangular solves on row-major storage.
//!
//! The forward solve accumulates in the same order as the factorization, so
//! solving against a column of the factored matrix reproduces the matching
//! row of the factor.

/// Lower-triangular factor `L` with `L Lᵀ = a`, or `None` if a pivot is not
/// strictly positive and finite.
pub fn cholesky(a: &[f64], m: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), m * m);
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * m + i] = s.sqrt();
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    Some(l)
}

/// Solves `L v = b`.
pub fn forward_solve(l: &[f64], m: usize, b: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; m];
    for j in 0..m {
        let mut s = b[j];
        for k in 0..j {
            s -= l[j * m + k] * v[k];
        }
        v[j] = s / l[j * m + j];
    }
    v
}

/// Solves `Lᵀ x = b`.
pub fn backward_solve(l: &[f64], m: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; m];
    for j in (0..m).rev() {
        let mut s = b[j];
        for k in j + 1..m {
            s -= l[k * m + j] * x[k];
        }
        x[j] = s / l[j * m + j];
    }
    x
}

/// `log det(L Lᵀ)`.
pub fn log_det(l: &[f64], m: usize) -> f64 {
    2.0 * (0..m).map(|i| l[i * m + i].ln()).sum::<f64>()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
