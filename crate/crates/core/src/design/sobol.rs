//! Sobol' points in Gray-code order with optional linear matrix scrambling.

use rand::Rng;

use crate::rng;

/// Highest dimension covered by the embedded direction numbers.
pub const MAX_DIM: usize = 32;

const BITS: usize = 32;

/// Joe & Kuo (new-joe-kuo-6.21201) parameters for dimensions 2..=32:
/// polynomial degree `s`, coefficient word `a` and initial numbers `m_1..m_s`.
/// Dimension 1 is the van der Corput sequence in base 2.
const JOE_KUO: [(u32, u32, &[u32]); MAX_DIM - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
    (7, 7, &[1, 1, 3, 13, 7, 35, 63]),
    (7, 8, &[1, 3, 5, 9, 1, 25, 53]),
    (7, 14, &[1, 3, 1, 13, 9, 35, 107]),
    (7, 19, &[1, 3, 1, 5, 27, 61, 31]),
    (7, 21, &[1, 1, 5, 11, 19, 41, 61]),
    (7, 28, &[1, 3, 5, 3, 3, 13, 69]),
    (7, 31, &[1, 1, 7, 13, 1, 19, 1]),
    (7, 32, &[1, 3, 7, 5, 13, 19, 59]),
    (7, 37, &[1, 1, 3, 9, 25, 29, 41]),
    (7, 41, &[1, 3, 5, 13, 23, 1, 55]),
    (7, 42, &[1, 3, 7, 3, 13, 59, 17]),
];

/// Direction numbers `v_1..v_32` of one dimension, as 32-bit fractions.
fn directions(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim - 1];
    let s = s as usize;
    for k in 0..s.min(BITS) {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut value = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                value ^= v[k - j];
            }
        }
        v[k] = value;
    }
    v
}

/// Raw 32-bit Sobol' coordinates of points `1..=n` (index 0, the origin, is
/// skipped), row-major `n × d`.
pub(crate) fn sobol_bits(n: usize, d: usize) -> Vec<u32> {
    let dirs: Vec<[u32; BITS]> = (0..d).map(directions).collect();
    let mut out = Vec::with_capacity(n * d);
    let mut state = vec![0u32; d];
    for i in 1..=n as u64 {
        // Gray-code successor: flip the direction of the lowest set bit of i.
        let c = i.trailing_zeros() as usize;
        for (x, v) in state.iter_mut().zip(&dirs) {
            *x ^= v[c];
        }
        out.extend_from_slice(&state);
    }
    out
}

/// Random linear matrix scramble (lower-triangular, unit diagonal) followed by
/// a random digital shift, one independent pair per dimension.
pub(crate) struct LinearScramble {
    rows: Vec<[u32; BITS]>,
    shifts: Vec<u32>,
}

impl LinearScramble {
    pub(crate) fn new(d: usize, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let mut rows = Vec::with_capacity(d);
        let mut shifts = Vec::with_capacity(d);
        for _ in 0..d {
            let mut matrix = [0u32; BITS];
            for (k, row) in matrix.iter_mut().enumerate() {
                // Output digit k (k = 0 is the most significant) mixes input
                // digit k with random subsets of the more significant digits.
                let own = 1u32 << (BITS - 1 - k);
                let above = if k == 0 { 0 } else { !0u32 << (BITS - k) };
                *row = own | (rng.random::<u32>() & above);
            }
            rows.push(matrix);
            shifts.push(rng.random::<u32>());
        }
        Self { rows, shifts }
    }

    pub(crate) fn apply(&self, dim: usize, x: u32) -> u32 {
        let mut y = 0u32;
        for (k, row) in self.rows[dim].iter().enumerate() {
            let bit = (row & x).count_ones() & 1;
            y |= bit << (BITS - 1 - k);
        }
        y ^ self.shifts[dim]
    }
}

pub(crate) fn to_unit(x: u32) -> f64 {
    f64::from(x) / 4_294_967_296.0
}
