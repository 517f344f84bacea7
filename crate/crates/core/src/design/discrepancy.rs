//! Star-discrepancy estimate over boxes anchored at sample coordinates.

use super::DesignMatrix;
use crate::error::{Error, Result};

pub const MAX_POINTS: usize = 512;
pub const MAX_DIM: usize = 3;

/// Maximum over anchored boxes `[0, q)` of the local discrepancy, where each
/// `q_j` ranges over the sample coordinates in dimension `j` plus 1.
///
/// Both the open and the closed box are counted at every anchor, so the value
/// is the exact star discrepancy of the critical grid and a lower bound on
/// the true star discrepancy.
pub fn star_discrepancy_estimate(dm: &DesignMatrix) -> Result<f64> {
    let (n, d) = (dm.n(), dm.d());
    if n > MAX_POINTS || d > MAX_DIM {
        return Err(Error::Capability(format!(
            "star discrepancy enumeration is limited to n <= {MAX_POINTS}, d <= {MAX_DIM} (got n={n}, d={d})"
        )));
    }
    let anchors: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut c: Vec<f64> = dm.column(j).collect();
            c.push(1.0);
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        })
        .collect();

    let last = d - 1;
    let nf = n as f64;
    let mut worst = 0.0f64;
    let mut prefix = vec![0usize; last];
    let mut open_last: Vec<f64> = Vec::with_capacity(n);
    let mut closed_last: Vec<f64> = Vec::with_capacity(n);
    loop {
        let q_prefix: Vec<f64> = prefix
            .iter()
            .enumerate()
            .map(|(j, &i)| anchors[j][i])
            .collect();
        let prefix_volume: f64 = q_prefix.iter().product();

        open_last.clear();
        closed_last.clear();
        for row in dm.rows() {
            let head = &row[..last];
            if head.iter().zip(&q_prefix).all(|(x, q)| x < q) {
                open_last.push(row[last]);
            }
            if head.iter().zip(&q_prefix).all(|(x, q)| x <= q) {
                closed_last.push(row[last]);
            }
        }
        open_last.sort_by(f64::total_cmp);
        closed_last.sort_by(f64::total_cmp);

        let (mut open_count, mut closed_count) = (0usize, 0usize);
        for &q in &anchors[last] {
            while open_count < open_last.len() && open_last[open_count] < q {
                open_count += 1;
            }
            while closed_count < closed_last.len() && closed_last[closed_count] <= q {
                closed_count += 1;
            }
            let volume = prefix_volume * q;
            worst = worst
                .max(volume - open_count as f64 / nf)
                .max(closed_count as f64 / nf - volume);
        }

        // Odometer over the anchor grid of the leading dimensions.
        let mut j = 0;
        while j < last {
            prefix[j] += 1;
            if prefix[j] < anchors[j].len() {
                break;
            }
            prefix[j] = 0;
            j += 1;
        }
        if j == last {
            break;
        }
    }
    Ok(worst.clamp(0.0, 1.0))
}
