//! BBOB-like noiseless test functions on `[-5, 5]^d` with exactly known optima.
//!
//! Every function is a base landscape `g` with `g(0) = 0` as its unique (or
//! one of its) global minima, composed with a per-function shift of the
//! optimum into `[-4, 4]^d` and, for the non-separable members, a fixed
//! orthogonal rotation. Shifts, rotations and the Gallagher peak layout are
//! drawn from [`REGISTRY_SEED`] when the registry is built and never change.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::design::SearchBox;
use crate::error::{Error, Result};
use crate::rng;

pub const REGISTRY_SEED: u64 = 0x5EED_BB0B;
pub const DOMAIN_LO: f64 = -5.0;
pub const DOMAIN_HI: f64 = 5.0;
pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 20;

const SHIFT_RADIUS: f64 = 4.0;
const GALLAGHER_PEAKS: usize = 101;
const WEIERSTRASS_TERMS: i32 = 12;
/// Argmax of `w sin(sqrt(|w|))` on `[-500, 500]` (classic Schwefel optimum).
const SCHWEFEL_PEAK: f64 = 420.968_746_359_982;
const SCHWEFEL_STRETCH: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modality {
    SeparableUnimodal,
    Unimodal,
    Multimodal,
    HighlyMultimodal,
}

impl Modality {
    pub fn label(self) -> &'static str {
        match self {
            Modality::SeparableUnimodal => "separable-unimodal",
            Modality::Unimodal => "unimodal",
            Modality::Multimodal => "multimodal",
            Modality::HighlyMultimodal => "highly-multimodal",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Base landscapes, each minimized at `z = 0` with value 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Landscape {
    Sphere,
    Ellipsoid,
    AttractiveSector,
    Rosenbrock,
    RotatedEllipsoid,
    SharpRidge,
    DifferentPowers,
    Rastrigin,
    Weierstrass,
    Schaffer,
    Schwefel,
    Gallagher,
}

impl Landscape {
    fn rotated(self) -> bool {
        matches!(
            self,
            Landscape::RotatedEllipsoid
                | Landscape::SharpRidge
                | Landscape::Weierstrass
                | Landscape::Schaffer
                | Landscape::Gallagher
        )
    }

    /// Value of the untransformed landscape. Rosenbrock is evaluated in its
    /// textbook form with the minimum at `(1, …, 1)`; every other landscape
    /// has its minimum at the origin.
    pub fn base_value(self, z: &[f64]) -> f64 {
        let d = z.len();
        match self {
            Landscape::Sphere => z.iter().map(|v| v * v).sum(),
            Landscape::Ellipsoid | Landscape::RotatedEllipsoid => z
                .iter()
                .enumerate()
                .map(|(i, v)| 10f64.powf(6.0 * power_fraction(i, d)) * v * v)
                .sum(),
            Landscape::AttractiveSector => z
                .iter()
                .map(|&v| if v > 0.0 { (100.0 * v).powi(2) } else { v * v })
                .sum(),
            Landscape::Rosenbrock => z
                .windows(2)
                .map(|w| 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2))
                .sum(),
            Landscape::SharpRidge => {
                let tail: f64 = z[1..].iter().map(|v| v * v).sum();
                z[0] * z[0] + 100.0 * tail.sqrt()
            }
            Landscape::DifferentPowers => z
                .iter()
                .enumerate()
                .map(|(i, v)| v.abs().powf(2.0 + 4.0 * power_fraction(i, d)))
                .sum::<f64>()
                .sqrt(),
            Landscape::Rastrigin => z
                .iter()
                .map(|&v| v * v + 10.0 * (1.0 - (2.0 * PI * v).cos()))
                .sum(),
            Landscape::Weierstrass => {
                let floor = weierstrass_sum(0.0);
                let mean: f64 =
                    z.iter().map(|&v| weierstrass_sum(v) - floor).sum::<f64>() / d as f64;
                10.0 * mean.max(0.0).powi(3)
            }
            Landscape::Schaffer => {
                let terms: f64 = z
                    .windows(2)
                    .map(|w| {
                        let s = (w[0] * w[0] + w[1] * w[1]).sqrt();
                        s.sqrt() + s.sqrt() * (50.0 * s.powf(0.2)).sin().powi(2)
                    })
                    .sum();
                (terms / (d - 1) as f64).powi(2)
            }
            Landscape::Schwefel => {
                let peak = schwefel_gain(SCHWEFEL_PEAK);
                z.iter()
                    .map(|&v| {
                        let w = SCHWEFEL_PEAK + SCHWEFEL_STRETCH * v;
                        let excess = (w.abs() - 500.0).max(0.0);
                        peak - schwefel_gain(w) + excess * excess
                    })
                    .sum()
            }
            Landscape::Gallagher => {
                unreachable!("Gallagher depends on its peak layout; use BenchmarkFunction::evaluate")
            }
        }
    }
}

fn power_fraction(i: usize, d: usize) -> f64 {
    if d > 1 {
        i as f64 / (d - 1) as f64
    } else {
        0.0
    }
}

fn weierstrass_sum(v: f64) -> f64 {
    (0..WEIERSTRASS_TERMS)
        .map(|k| 0.5f64.powi(k) * (2.0 * PI * 3f64.powi(k) * (v + 0.5)).cos())
        .sum()
}

fn schwefel_gain(w: f64) -> f64 {
    w * w.abs().sqrt().sin()
}

/// Peaks of a Gallagher-style landscape: peak 0 sits at the origin (in
/// rotated, shifted coordinates) with the largest height.
#[derive(Clone, Debug)]
struct Peaks {
    centers: Vec<Vec<f64>>,
    heights: Vec<f64>,
    /// Per-peak diagonal precision, in rotated coordinates.
    scales: Vec<Vec<f64>>,
}

impl Peaks {
    fn generate(d: usize, shift: &[f64], seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let mut centers = Vec::with_capacity(GALLAGHER_PEAKS);
        let mut heights = Vec::with_capacity(GALLAGHER_PEAKS);
        let mut scales = Vec::with_capacity(GALLAGHER_PEAKS);
        for p in 0..GALLAGHER_PEAKS {
            let (center, height, alpha) = if p == 0 {
                (vec![0.0; d], 10.0, 1000.0)
            } else {
                // Centers relative to the shifted optimum, kept inside the domain.
                let center = shift
                    .iter()
                    .map(|&s| rng.random_range(-SHIFT_RADIUS - 0.9..SHIFT_RADIUS + 0.9) - s)
                    .collect();
                let height = 1.1 + 8.0 * (p - 1) as f64 / (GALLAGHER_PEAKS - 2) as f64;
                let exponent = rng.random_range(0..=99u32) as f64 * 2.0 / 99.0;
                (center, height, 1000f64.powf(exponent))
            };
            let mut scale: Vec<f64> = (0..d)
                .map(|i| alpha.powf(power_fraction(i, d) - 0.5) / alpha.powf(0.25))
                .collect();
            // Shuffle the axis conditioning so peaks are not all aligned alike.
            for i in (1..d).rev() {
                scale.swap(i, rng.random_range(0..=i));
            }
            centers.push(center);
            heights.push(height);
            scales.push(scale);
        }
        Self {
            centers,
            heights,
            scales,
        }
    }

    fn value(&self, z: &[f64]) -> f64 {
        let d = z.len() as f64;
        let best = self
            .centers
            .iter()
            .zip(&self.heights)
            .zip(&self.scales)
            .map(|((c, h), s)| {
                let q: f64 = z
                    .iter()
                    .zip(c)
                    .zip(s)
                    .map(|((zi, ci), si)| si * (zi - ci).powi(2))
                    .sum();
                h * (-q / (2.0 * d)).exp()
            })
            .fold(0.0, f64::max);
        (10.0 - best).max(0.0).powi(2)
    }
}

type CustomFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Landscape(Landscape),
    Custom(CustomFn),
}

/// One function materialized for one dimension.
#[derive(Clone)]
pub struct BenchmarkFunction {
    pub id: u32,
    pub name: String,
    pub modality: Modality,
    dim: usize,
    kind: Kind,
    shift: Vec<f64>,
    rotation: Option<Vec<f64>>,
    peaks: Option<Peaks>,
    optimum_location: Vec<f64>,
    optimum_value: f64,
}

impl fmt::Debug for BenchmarkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkFunction")
            .field("id", &self.id)
            .field("name", &self.name)
            .field("modality", &self.modality)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl BenchmarkFunction {
    fn from_landscape(id: u32, name: &str, modality: Modality, landscape: Landscape, d: usize) -> Self {
        let seed = rng::derive_seed(REGISTRY_SEED, &[u64::from(id), d as u64]);
        let mut rng = rng::seeded(seed);
        let shift: Vec<f64> = (0..d)
            .map(|_| rng.random_range(-SHIFT_RADIUS..SHIFT_RADIUS))
            .collect();
        let rotation = landscape
            .rotated()
            .then(|| random_rotation(d, rng::derive_seed(seed, &[1])));
        let peaks = (landscape == Landscape::Gallagher)
            .then(|| Peaks::generate(d, &shift, rng::derive_seed(seed, &[2])));
        Self {
            id,
            name: name.to_owned(),
            modality,
            dim: d,
            kind: Kind::Landscape(landscape),
            optimum_location: shift.clone(),
            optimum_value: 0.0,
            shift,
            rotation,
            peaks,
        }
    }

    /// A caller-supplied objective, e.g. a degenerate fixture. The caller
    /// vouches for the optimum.
    pub fn custom<F>(
        id: u32,
        name: &str,
        modality: Modality,
        optimum_location: Vec<f64>,
        optimum_value: f64,
        f: F,
    ) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let d = optimum_location.len();
        Self {
            id,
            name: name.to_owned(),
            modality,
            dim: d,
            kind: Kind::Custom(Arc::new(f)),
            shift: vec![0.0; d],
            rotation: None,
            peaks: None,
            optimum_location,
            optimum_value,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> SearchBox {
        SearchBox::cube(DOMAIN_LO, DOMAIN_HI, self.dim).expect("non-empty domain")
    }

    pub fn optimum_location(&self) -> &[f64] {
        &self.optimum_location
    }

    pub fn optimum_value(&self) -> f64 {
        self.optimum_value
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// Row-major rotation applied after the shift, if any.
    pub fn rotation(&self) -> Option<&[f64]> {
        self.rotation.as_deref()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::contract(format!(
                "function {} expects {} coordinates, got {}",
                self.id,
                self.dim,
                x.len()
            )));
        }
        if x.iter().any(|v| !(DOMAIN_LO..=DOMAIN_HI).contains(v)) {
            return Err(Error::contract(format!(
                "point {x:?} lies outside [{DOMAIN_LO}, {DOMAIN_HI}]^{}",
                self.dim
            )));
        }
        Ok(self.value_unchecked(x))
    }

    fn value_unchecked(&self, x: &[f64]) -> f64 {
        let landscape = match &self.kind {
            Kind::Custom(f) => return f(x),
            Kind::Landscape(l) => *l,
        };
        let d = self.dim;
        let centered: Vec<f64> = x.iter().zip(&self.shift).map(|(a, b)| a - b).collect();
        let z = match &self.rotation {
            Some(r) => (0..d)
                .map(|i| r[i * d..(i + 1) * d].iter().zip(&centered).map(|(a, b)| a * b).sum())
                .collect(),
            None => centered,
        };
        match landscape {
            Landscape::Gallagher => self.peaks.as_ref().expect("peaks").value(&z),
            Landscape::Rosenbrock => {
                let lifted: Vec<f64> = z.iter().map(|v| v + 1.0).collect();
                Landscape::Rosenbrock.base_value(&lifted)
            }
            other => other.base_value(&z),
        }
    }
}

/// Orthogonal matrix from Gram–Schmidt on a Gaussian matrix.
fn random_rotation(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::seeded(seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    while rows.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for r in &rows {
            let p: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            for (vi, ri) in v.iter_mut().zip(r) {
                *vi -= p * ri;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            rows.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    rows.concat()
}

const CATALOG: [(u32, &str, Modality, Landscape); 12] = [
    (1, "sphere", Modality::SeparableUnimodal, Landscape::Sphere),
    (2, "ellipsoid", Modality::SeparableUnimodal, Landscape::Ellipsoid),
    (3, "attractive-sector", Modality::Unimodal, Landscape::AttractiveSector),
    (4, "rosenbrock", Modality::Unimodal, Landscape::Rosenbrock),
    (5, "rotated-ellipsoid", Modality::Unimodal, Landscape::RotatedEllipsoid),
    (6, "sharp-ridge", Modality::Unimodal, Landscape::SharpRidge),
    (7, "different-powers", Modality::Unimodal, Landscape::DifferentPowers),
    (8, "rastrigin", Modality::HighlyMultimodal, Landscape::Rastrigin),
    (9, "weierstrass", Modality::HighlyMultimodal, Landscape::Weierstrass),
    (10, "schaffer", Modality::Multimodal, Landscape::Schaffer),
    (11, "schwefel", Modality::Multimodal, Landscape::Schwefel),
    (12, "gallagher", Modality::HighlyMultimodal, Landscape::Gallagher),
];

pub const SPHERE: u32 = 1;
pub const ROSENBROCK: u32 = 4;
pub const RASTRIGIN: u32 = 8;

/// Catalog entry, independent of dimension.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub id: u32,
    pub name: String,
    pub modality: Modality,
    pub optimum_value: f64,
}

/// Immutable registry of functions for every supported dimension.
#[derive(Clone)]
pub struct Registry {
    functions: BTreeMap<(u32, usize), BenchmarkFunction>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::new()
    }
}

impl Registry {
    /// Builds the standard suite for dimensions `MIN_DIM..=MAX_DIM`.
    pub fn new() -> Self {
        let mut functions = BTreeMap::new();
        for (id, name, modality, landscape) in CATALOG {
            for d in MIN_DIM..=MAX_DIM {
                functions.insert(
                    (id, d),
                    BenchmarkFunction::from_landscape(id, name, modality, landscape, d),
                );
            }
        }
        Self { functions }
    }

    /// Adds (or replaces) a function for its dimension.
    pub fn with_function(mut self, f: BenchmarkFunction) -> Self {
        self.functions.insert((f.id, f.dim), f);
        self
    }

    pub fn get(&self, id: u32, d: usize) -> Result<&BenchmarkFunction> {
        self.functions.get(&(id, d)).ok_or_else(|| {
            if self.functions.keys().any(|(i, _)| *i == id) {
                Error::NotFound(format!("function {id} is not available in dimension {d}"))
            } else {
                Error::NotFound(format!("no function with id {id}"))
            }
        })
    }

    pub fn evaluate(&self, id: u32, x: &[f64]) -> Result<f64> {
        self.get(id, x.len())?.evaluate(x)
    }

    pub fn optimum(&self, id: u32, d: usize) -> Result<(Vec<f64>, f64)> {
        let f = self.get(id, d)?;
        Ok((f.optimum_location.clone(), f.optimum_value))
    }

    /// One entry per id, ordered by id.
    pub fn list_functions(&self) -> Vec<CatalogEntry> {
        let mut out: Vec<CatalogEntry> = Vec::new();
        for f in self.functions.values() {
            if out.last().map(|e| e.id) != Some(f.id) {
                out.push(CatalogEntry {
                    id: f.id,
                    name: f.name.clone(),
                    modality: f.modality,
                    optimum_value: f.optimum_value,
                });
            }
        }
        out
    }

    pub fn ids(&self) -> Vec<u32> {
        self.list_functions().into_iter().map(|e| e.id).collect()
    }
}
