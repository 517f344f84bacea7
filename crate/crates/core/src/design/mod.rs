//! Initial designs in the unit cube and their mapping onto a search box.

mod discrepancy;
mod halton;
mod lhs;
mod sobol;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use discrepancy::star_discrepancy_estimate;
pub use lhs::MAXIMIN_CANDIDATES;

/// Largest dimension any design supports (bounded by the Sobol' table).
pub const MAX_DIM: usize = sobol::MAX_DIM;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignVariant {
    Uniform,
    Lhs,
    Halton,
    Sobol,
}

/// A design distribution together with its randomisation.
///
/// `scramble` only affects Sobol'; `seed` is ignored by Halton and by
/// unscrambled Sobol'.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DesignKind {
    pub variant: DesignVariant,
    pub scramble: bool,
    pub seed: u64,
}

impl DesignKind {
    pub fn new(variant: DesignVariant, seed: u64) -> Self {
        Self {
            variant,
            scramble: variant == DesignVariant::Sobol,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Whether two seeds can produce different designs.
    pub fn is_random(&self) -> bool {
        match self.variant {
            DesignVariant::Uniform | DesignVariant::Lhs => true,
            DesignVariant::Halton => false,
            DesignVariant::Sobol => self.scramble,
        }
    }

    /// Stable label used in plans, records and reports: `uniform`, `lhs`,
    /// `halton`, `sobol` (scrambled) or `sobol-plain`.
    pub fn label(&self) -> &'static str {
        match (self.variant, self.scramble) {
            (DesignVariant::Uniform, _) => "uniform",
            (DesignVariant::Lhs, _) => "lhs",
            (DesignVariant::Halton, _) => "halton",
            (DesignVariant::Sobol, true) => "sobol",
            (DesignVariant::Sobol, false) => "sobol-plain",
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DesignKind {
    type Err = Error;

    /// Parses a label; the seed is set to 0.
    fn from_str(s: &str) -> Result<Self> {
        let (variant, scramble) = match s.to_ascii_lowercase().as_str() {
            "uniform" => (DesignVariant::Uniform, false),
            "lhs" => (DesignVariant::Lhs, false),
            "halton" => (DesignVariant::Halton, false),
            "sobol" => (DesignVariant::Sobol, true),
            "sobol-plain" => (DesignVariant::Sobol, false),
            other => {
                return Err(Error::contract(format!(
                    "unknown design '{other}' (expected uniform, lhs, halton, sobol or sobol-plain)"
                )))
            }
        };
        Ok(Self {
            variant,
            scramble,
            seed: 0,
        })
    }
}

impl Serialize for DesignKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for DesignKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `n` points in `[0, 1)^d`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    d: usize,
    points: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::contract("design rows must be non-empty and of equal length"));
        }
        if rows.iter().flatten().any(|&x| !(0.0..1.0).contains(&x)) {
            return Err(Error::contract("design coordinates must lie in [0, 1)"));
        }
        Ok(Self {
            n: rows.len(),
            d,
            points: rows.concat(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().skip(j).step_by(self.d).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }
}

/// Axis-aligned search box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::contract("box bounds must be non-empty and of equal length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::contract("box requires finite lower[i] < upper[i]"));
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^d`.
    pub fn cube(lo: f64, hi: f64, d: usize) -> Result<Self> {
        Self::new(vec![lo; d], vec![hi; d])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    /// Maps a unit-cube point into the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (l, h))| l + t * (h - l))
            .collect()
    }

    /// Inverse of [`SearchBox::from_unit`].
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, h))| (v - l) / (h - l))
            .collect()
    }
}

/// Samples `n` points of `kind` in `[0, 1)^d`.
///
/// Halton uses the first `d` primes as bases starting at index 1. Sobol'
/// skips the origin (index 0) and enumerates in Gray-code order.
pub fn sample(kind: DesignKind, n: usize, d: usize) -> Result<DesignMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::contract(format!("design needs n >= 1 and d >= 1 (got n={n}, d={d})")));
    }
    if d > MAX_DIM {
        return Err(Error::Capability(format!(
            "designs support at most {MAX_DIM} dimensions (Sobol' direction numbers), got {d}"
        )));
    }
    let points = match kind.variant {
        DesignVariant::Uniform => {
            let mut rng = rng::seeded(kind.seed);
            (0..n * d).map(|_| rng.random::<f64>()).collect()
        }
        DesignVariant::Lhs => lhs::maximin(n, d, &mut rng::seeded(kind.seed)),
        DesignVariant::Halton => (1..=n as u64)
            .flat_map(|i| halton::PRIMES[..d].iter().map(move |&p| halton::radical_inverse(i, p)))
            .collect(),
        DesignVariant::Sobol => {
            let bits = sobol::sobol_bits(n, d);
            if kind.scramble {
                let scramble = sobol::LinearScramble::new(d, kind.seed);
                bits.iter()
                    .enumerate()
                    .map(|(idx, &x)| sobol::to_unit(scramble.apply(idx % d, x)))
                    .collect()
            } else {
                bits.into_iter().map(sobol::to_unit).collect()
            }
        }
    };
    Ok(DesignMatrix { n, d, points })
}

/// Affine map of every design row onto `bounds`, row-major.
pub fn scale_to_box(dm: &DesignMatrix, bounds: &SearchBox) -> Result<Vec<Vec<f64>>> {
    if dm.d() != bounds.dim() {
        return Err(Error::contract(format!(
            "design dimension {} does not match box dimension {}",
            dm.d(),
            bounds.dim()
        )));
    }
    Ok(dm.rows().map(|r| bounds.from_unit(r)).collect())
}
