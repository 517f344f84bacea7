//! Metrics over a results store: median target precision, the virtual best
//! solver, relative precision, win counts, percentiles and restart
//! comparisons.

mod heatmap;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::design::DesignKind;
use crate::ego::{Problem, RunRecord, RunStatus};
use crate::error::{Error, Result};
use crate::runner;

pub use heatmap::{emit_heatmap, Heatmap, DEFAULT_CAP};

/// Groups with fewer successful runs are excluded from every metric.
pub const MIN_SUCCESSES: usize = 3;

/// Floor applied to both numerator and denominator of a relative precision.
pub const PRECISION_FLOOR: f64 = 1e-12;

/// Percentile matching one run's median with the best of two runs.
pub fn q_half() -> f64 {
    1.0 - 0.5f64.sqrt()
}

/// Percentile matching one run's median with the best of four runs.
pub fn q_quarter() -> f64 {
    1.0 - 0.5f64.powf(0.25)
}

/// A strategy `(k, s)` as a grouping key; the design seed is dropped.
#[derive(Clone, Copy, Debug)]
pub struct StrategyKey {
    pub k: f64,
    pub design: DesignKind,
}

impl StrategyKey {
    pub fn new(k: f64, design: DesignKind) -> Self {
        Self {
            k,
            design: design.with_seed(0),
        }
    }
}

impl PartialEq for StrategyKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for StrategyKey {}

impl PartialOrd for StrategyKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for StrategyKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.k
            .total_cmp(&other.k)
            .then(self.design.variant.cmp(&other.design.variant))
            .then(self.design.scramble.cmp(&other.design.scramble))
    }
}

impl fmt::Display for StrategyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.k, self.design)
    }
}

impl FromStr for StrategyKey {
    type Err = Error;

    /// Parses `K:DESIGN`, e.g. `0.1:lhs`.
    fn from_str(s: &str) -> Result<Self> {
        let (k, design) = s
            .split_once(':')
            .ok_or_else(|| Error::contract(format!("strategy '{s}' is not of the form K:DESIGN")))?;
        let k: f64 = k
            .parse()
            .map_err(|_| Error::contract(format!("strategy '{s}': '{k}' is not a number")))?;
        Ok(Self::new(k, design.parse()?))
    }
}

/// Target precisions of one `(f, d, n, k, s)` cell.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Group {
    /// Successful runs only, sorted ascending.
    pub precisions: Vec<f64>,
    pub runs: usize,
}

impl Group {
    pub fn successes(&self) -> usize {
        self.precisions.len()
    }

    pub fn excluded(&self) -> bool {
        self.successes() < MIN_SUCCESSES
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PrecisionTable {
    groups: BTreeMap<Problem, BTreeMap<StrategyKey, Group>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vbs {
    pub value: f64,
    /// Every strategy whose median equals `value`.
    pub winners: Vec<StrategyKey>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Relative {
    pub value: f64,
    /// The VBS was below `PRECISION_FLOOR` and was floored.
    pub floored: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// One long run of budget `n` against two runs of `n/2` and four of `n/4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RestartRow {
    pub f: u32,
    pub d: usize,
    pub n: usize,
    pub median: Option<f64>,
    /// `P_{q_half}` at budget `n/2`.
    pub half: Option<f64>,
    /// `P_{q_quarter}` at budget `n/4`.
    pub quarter: Option<f64>,
    /// `half < median`.
    pub half_favorable: Option<bool>,
    /// `quarter < half`.
    pub quarter_favorable: Option<bool>,
}

/// Shortest round-trip text for a real, switching to exponent form outside
/// `[1e-5, 1e16)` so tiny precisions stay readable.
pub fn format_real(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Linear interpolation between order statistics at rank `q·(m−1)`.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::contract("percentile of an empty sample"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::contract(format!("percentile level {q} is outside [0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(sorted_percentile(&v, q))
}

fn sorted_percentile(v: &[f64], q: f64) -> f64 {
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        v[lo]
    } else {
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    }
}

impl PrecisionTable {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> Self {
        let mut groups: BTreeMap<Problem, BTreeMap<StrategyKey, Group>> = BTreeMap::new();
        for r in records {
            let g = groups
                .entry(r.problem)
                .or_default()
                .entry(StrategyKey::new(r.strategy.k, r.strategy.design))
                .or_default();
            g.runs += 1;
            if r.status == RunStatus::Success && r.target_precision.is_finite() {
                g.precisions.push(r.target_precision);
            }
        }
        for g in groups.values_mut().flat_map(|m| m.values_mut()) {
            g.precisions.sort_by(f64::total_cmp);
        }
        Self { groups }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::from_records(&runner::read_records(path)?))
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn problems(&self) -> impl Iterator<Item = Problem> + '_ {
        self.groups.keys().copied()
    }

    /// Every strategy present anywhere in the table, sorted.
    pub fn strategies(&self) -> Vec<StrategyKey> {
        let mut all: Vec<StrategyKey> = self.groups.values().flat_map(|m| m.keys().copied()).collect();
        all.sort();
        all.dedup();
        all
    }

    pub fn groups(&self) -> impl Iterator<Item = (Problem, StrategyKey, &Group)> {
        self.groups
            .iter()
            .flat_map(|(p, m)| m.iter().map(move |(s, g)| (*p, *s, g)))
    }

    pub fn group(&self, problem: Problem, strategy: StrategyKey) -> Result<&Group> {
        self.groups
            .get(&problem)
            .and_then(|m| m.get(&strategy))
            .ok_or_else(|| Error::NotFound(format!("no runs for {problem} {strategy}")))
    }

    fn included(&self, problem: Problem, strategy: StrategyKey) -> Result<&Group> {
        let g = self.group(problem, strategy)?;
        if g.excluded() {
            return Err(Error::ExcludedGroup(format!(
                "{problem} {strategy} ({} of {} runs succeeded)",
                g.successes(),
                g.runs
            )));
        }
        Ok(g)
    }

    pub fn median_precision(&self, problem: Problem, strategy: StrategyKey) -> Result<f64> {
        self.percentile(problem, strategy, 0.5)
    }

    pub fn percentile(&self, problem: Problem, strategy: StrategyKey, q: f64) -> Result<f64> {
        percentile(&self.included(problem, strategy)?.precisions, q)
    }

    pub fn vbs(&self, problem: Problem) -> Result<Vbs> {
        let medians: Vec<(StrategyKey, f64)> = self
            .groups
            .get(&problem)
            .into_iter()
            .flat_map(|m| m.iter())
            .filter(|(_, g)| !g.excluded())
            .map(|(s, g)| (*s, sorted_percentile(&g.precisions, 0.5)))
            .collect();
        let value = medians
            .iter()
            .map(|(_, m)| *m)
            .min_by(f64::total_cmp)
            .ok_or_else(|| Error::NoData(format!("no strategy has {MIN_SUCCESSES} successful runs on {problem}")))?;
        let winners = medians.iter().filter(|(_, m)| *m == value).map(|(s, _)| *s).collect();
        Ok(Vbs { value, winners })
    }

    pub fn relative_precision(&self, problem: Problem, strategy: StrategyKey) -> Result<Relative> {
        let m = self.median_precision(problem, strategy)?;
        let vbs = self.vbs(problem)?.value;
        Ok(Relative {
            value: m.max(PRECISION_FLOOR) / vbs.max(PRECISION_FLOOR),
            floored: vbs < PRECISION_FLOOR,
        })
    }

    /// Problems won per strategy; ties credit every winner. Strategies that
    /// never win appear with 0.
    pub fn vbs_counts(&self) -> BTreeMap<StrategyKey, usize> {
        let mut counts: BTreeMap<StrategyKey, usize> =
            self.strategies().into_iter().map(|s| (s, 0)).collect();
        for p in self.problems() {
            if let Ok(v) = self.vbs(p) {
                for w in v.winners {
                    *counts.entry(w).or_default() += 1;
                }
            }
        }
        counts
    }

    /// Five-number summaries of every included strategy on `problem`.
    pub fn distribution_summary(&self, problem: Problem) -> Vec<(StrategyKey, FiveNumber)> {
        self.groups
            .get(&problem)
            .into_iter()
            .flat_map(|m| m.iter())
            .filter(|(_, g)| !g.excluded())
            .map(|(s, g)| {
                let p = |q| sorted_percentile(&g.precisions, q);
                (
                    *s,
                    FiveNumber {
                        min: p(0.0),
                        q1: p(0.25),
                        median: p(0.5),
                        q3: p(0.75),
                        max: p(1.0),
                    },
                )
            })
            .collect()
    }

    pub fn restart_compare(&self, f: u32, d: usize, strategy: StrategyKey, n: usize) -> RestartRow {
        let at = |n: usize, q: f64| -> Option<f64> {
            if n == 0 {
                return None;
            }
            self.percentile(Problem { f, d, n }, strategy, q).ok()
        };
        let median = at(n, 0.5);
        let half = if n.is_multiple_of(2) { at(n / 2, q_half()) } else { None };
        let quarter = if n.is_multiple_of(4) { at(n / 4, q_quarter()) } else { None };
        let lt = |a: Option<f64>, b: Option<f64>| Some(a? < b?);
        RestartRow {
            f,
            d,
            n,
            median,
            half,
            quarter,
            half_favorable: lt(half, median),
            quarter_favorable: lt(quarter, half),
        }
    }

    /// Restart rows for every `(f, d, n)` in the table where `strategy` ran.
    pub fn restart_table(&self, strategy: StrategyKey) -> Vec<RestartRow> {
        self.groups
            .iter()
            .filter(|(_, m)| m.contains_key(&strategy))
            .map(|(p, _)| self.restart_compare(p.f, p.d, strategy, p.n))
            .collect()
    }

    /// Rows are strategies, columns `(d, n)`; each cell is the median over
    /// functions of the relative precision. A `Total` column is appended.
    pub fn relative_heatmap(&self) -> Heatmap {
        let strategies = self.strategies();
        let mut cols: Vec<(usize, usize)> = self.problems().map(|p| (p.d, p.n)).collect();
        cols.sort();
        cols.dedup();
        let mut hm = Heatmap::new(
            "strategy",
            strategies.iter().map(|s| s.to_string()).collect(),
            cols.iter().map(|(d, n)| format!("d{d}-n{n}")).collect(),
        );
        for (i, s) in strategies.iter().enumerate() {
            for (j, &(d, n)) in cols.iter().enumerate() {
                let cells: Vec<f64> = self
                    .problems()
                    .filter(|p| p.d == d && p.n == n)
                    .filter_map(|p| self.relative_precision(p, *s).ok())
                    .map(|r| r.value)
                    .collect();
                hm.values[i][j] = percentile(&cells, 0.5).ok();
            }
        }
        hm.with_total_column()
    }

    /// Rows are ratios `k`, columns designs; cells are VBS win counts.
    pub fn counts_heatmap(&self) -> Heatmap {
        let counts = self.vbs_counts();
        let mut ks: Vec<f64> = counts.keys().map(|s| s.k).collect();
        ks.dedup();
        let mut designs: Vec<DesignKind> = counts.keys().map(|s| s.design).collect();
        designs.sort_by_key(|d| (d.variant, d.scramble));
        designs.dedup();
        let mut hm = Heatmap::new(
            "k",
            ks.iter().map(|k| k.to_string()).collect(),
            designs.iter().map(|d| d.to_string()).collect(),
        );
        for (s, c) in counts {
            let i = ks.iter().position(|k| *k == s.k).expect("k listed");
            let j = designs.iter().position(|d| *d == s.design).expect("design listed");
            hm.values[i][j] = Some(c as f64);
        }
        hm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignVariant;
    use crate::ego::{Replicate, Strategy};

    fn key(k: f64, v: DesignVariant) -> StrategyKey {
        StrategyKey::new(k, DesignKind::new(v, 0))
    }

    fn rec(f: u32, n: usize, s: StrategyKey, p: f64, status: RunStatus) -> RunRecord {
        let problem = Problem { f, d: 2, n };
        let strategy = Strategy { k: s.k, design: s.design };
        let rep = Replicate { r_i: 1, r_a: 1, seed_design: 0, seed_algo: 0 };
        let mut r = RunRecord::errored(problem, strategy, rep, String::new());
        r.status = status;
        r.target_precision = p;
        r
    }

    fn table(cells: &[(u32, usize, StrategyKey, &[f64])]) -> PrecisionTable {
        let recs: Vec<RunRecord> = cells
            .iter()
            .flat_map(|(f, n, s, ps)| ps.iter().map(move |p| rec(*f, *n, *s, *p, RunStatus::Success)))
            .collect();
        PrecisionTable::from_records(&recs)
    }

    const P: Problem = Problem { f: 1, d: 2, n: 16 };

    #[test]
    fn medians() {
        let a = key(0.1, DesignVariant::Lhs);
        let b = key(0.2, DesignVariant::Lhs);
        let c = key(0.3, DesignVariant::Lhs);
        let t = table(&[(1, 16, a, &[9.0, 1.0, 2.0]), (1, 16, b, &[4.0, 1.0, 3.0, 2.0]), (1, 16, c, &[5.0])]);
        assert_eq!(t.median_precision(P, a).unwrap(), 2.0);
        assert_eq!(t.median_precision(P, b).unwrap(), 2.5);
        assert!(matches!(t.median_precision(P, c), Err(Error::ExcludedGroup(_))));
        assert!(matches!(
            t.median_precision(P, key(0.5, DesignVariant::Lhs)),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn real_formatting_round_trips() {
        assert_eq!(format_real(2.5), "2.5");
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(4.145062505992123e-6), "4.145062505992123e-6");
        assert_eq!(format_real(-3e20), "-3e20");
        for v in [1e-300, 5e-324, 0.1 + 0.2, 123456.789, 9.999999e15, 1e16] {
            assert_eq!(format_real(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn percentiles() {
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.5);
        assert_eq!(percentile(&[10.0, 20.0], 0.25).unwrap(), 12.5);
        assert_eq!(percentile(&[7.0], 0.13).unwrap(), 7.0);
        assert!(percentile(&[], 0.5).is_err());
        assert!(percentile(&[1.0], 1.5).is_err());
    }

    #[test]
    fn restart_levels() {
        assert!((q_half() - 0.2928932).abs() < 1e-7);
        assert!((q_quarter() - 0.1591035).abs() < 1e-7);
        assert!((1.0 - (1.0 - q_half()).powi(2) - 0.5).abs() < 1e-15);
        assert!((1.0 - (1.0 - q_quarter()).powi(4) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn vbs_and_relative() {
        let a = key(0.1, DesignVariant::Lhs);
        let b = key(0.1, DesignVariant::Halton);
        let t = table(&[(1, 16, a, &[2.0, 2.0, 2.0]), (1, 16, b, &[3.0, 3.0, 3.0])]);
        let v = t.vbs(P).unwrap();
        assert_eq!((v.value, v.winners.clone()), (2.0, vec![a]));
        assert_eq!(t.relative_precision(P, a).unwrap().value, 1.0);
        assert_eq!(t.relative_precision(P, b).unwrap().value, 1.5);

        let tied = table(&[(1, 16, a, &[2.0, 2.0, 2.0]), (1, 16, b, &[1.0, 2.0, 9.0])]);
        let v = tied.vbs(P).unwrap();
        assert_eq!(v.winners.len(), 2);
        assert!(v.winners.iter().all(|w| tied.relative_precision(P, *w).unwrap().value == 1.0));
    }

    #[test]
    fn zero_vbs_is_floored_and_flagged() {
        let a = key(0.1, DesignVariant::Lhs);
        let b = key(0.5, DesignVariant::Lhs);
        let t = table(&[(1, 16, a, &[0.0, 0.0, 0.0]), (1, 16, b, &[0.0, 1e-10, 1.0])]);
        let ra = t.relative_precision(P, a).unwrap();
        assert_eq!(ra, Relative { value: 1.0, floored: true });
        let rb = t.relative_precision(P, b).unwrap();
        assert!((rb.value - 100.0).abs() < 1e-9 && rb.floored);
    }

    #[test]
    fn counts() {
        let a = key(0.1, DesignVariant::Lhs);
        let b = key(0.5, DesignVariant::Sobol);
        let t = table(&[
            (1, 16, a, &[1.0, 1.0, 1.0]),
            (1, 16, b, &[2.0, 2.0, 2.0]),
            (2, 16, a, &[1.0, 1.0, 1.0]),
            (3, 16, a, &[1.0, 1.0, 1.0]),
            (3, 16, b, &[1.0, 1.0, 1.0]),
        ]);
        let c = t.vbs_counts();
        assert_eq!(c[&a], 3);
        assert_eq!(c[&b], 1);
        let hm = t.counts_heatmap();
        assert_eq!(hm.row_labels, vec!["0.1", "0.5"]);
        assert_eq!(hm.col_labels, vec!["lhs", "sobol"]);
        assert_eq!(hm.values, vec![vec![Some(3.0), None], vec![None, Some(1.0)]]);
    }

    #[test]
    fn excluded_groups_contribute_nothing() {
        let a = key(0.1, DesignVariant::Lhs);
        let b = key(0.5, DesignVariant::Lhs);
        let mut recs: Vec<RunRecord> = [0.5, 0.5].iter().map(|p| rec(1, 16, a, *p, RunStatus::Success)).collect();
        recs.push(rec(1, 16, a, 0.0, RunStatus::SurrogateFailure));
        recs.extend([1.0, 2.0, 3.0].iter().map(|p| rec(1, 16, b, *p, RunStatus::Success)));
        let t = PrecisionTable::from_records(&recs);
        assert_eq!(t.group(P, a).unwrap().runs, 3);
        assert!(t.group(P, a).unwrap().excluded());
        assert_eq!(t.vbs(P).unwrap().value, 2.0);
        assert_eq!(t.vbs_counts()[&a], 0);
        assert_eq!(t.distribution_summary(P).len(), 1);
        assert!(t.relative_precision(P, a).is_err());

        let only_failures: Vec<RunRecord> = (0..5).map(|_| rec(1, 16, a, 0.0, RunStatus::SurrogateFailure)).collect();
        let t = PrecisionTable::from_records(&only_failures);
        assert!(matches!(t.vbs(P), Err(Error::NoData(_))));
    }

    #[test]
    fn five_number_summary() {
        let a = key(0.1, DesignVariant::Lhs);
        let t = table(&[(1, 16, a, &[5.0, 3.0, 1.0, 2.0, 4.0])]);
        let (_, s) = t.distribution_summary(P)[0];
        assert_eq!(s, FiveNumber { min: 1.0, q1: 2.0, median: 3.0, q3: 4.0, max: 5.0 });
        assert_eq!(s.median, t.median_precision(P, a).unwrap());
        let t = table(&[(1, 16, a, &[7.0; 4])]);
        let (_, s) = t.distribution_summary(P)[0];
        assert!([s.min, s.q1, s.median, s.q3, s.max].iter().all(|v| *v == 7.0));
    }

    #[test]
    fn restart_flags() {
        let a = key(0.1, DesignVariant::Lhs);
        let t = table(&[
            (1, 64, a, &[4.0, 4.0, 4.0]),
            (1, 32, a, &[1.0, 5.0, 9.0]),
            (1, 16, a, &[10.0, 20.0, 30.0]),
        ]);
        let row = t.restart_compare(1, 2, a, 64);
        assert_eq!(row.median, Some(4.0));
        let half = 1.0 + 2.0 * q_half() * 4.0;
        assert!((row.half.unwrap() - half).abs() < 1e-12);
        let quarter = 10.0 + 2.0 * q_quarter() * 10.0;
        assert!((row.quarter.unwrap() - quarter).abs() < 1e-12);
        assert_eq!(row.half_favorable, Some(true));
        assert_eq!(row.quarter_favorable, Some(false));

        let partial = t.restart_compare(1, 2, a, 32);
        assert_eq!(partial.quarter, None);
        assert_eq!(partial.quarter_favorable, None);
        assert!(partial.half_favorable.is_some());
        assert_eq!(t.restart_table(a).len(), 3);
    }

    #[test]
    fn strategy_key_parsing() {
        let s: StrategyKey = "0.1:lhs".parse().unwrap();
        assert_eq!(s, key(0.1, DesignVariant::Lhs));
        assert_eq!(s.to_string(), "0.1:lhs");
        assert!("lhs".parse::<StrategyKey>().is_err());
        assert!("x:lhs".parse::<StrategyKey>().is_err());
    }

    #[test]
    fn relative_heatmap_has_unit_winner_and_total() {
        let a = key(0.1, DesignVariant::Lhs);
        let b = key(1.0, DesignVariant::Lhs);
        let t = table(&[(1, 16, a, &[1.0, 1.0, 1.0]), (1, 16, b, &[4.0, 4.0, 4.0])]);
        let hm = t.relative_heatmap();
        assert_eq!(hm.col_labels, vec!["d2-n16", "Total"]);
        assert_eq!(hm.values, vec![vec![Some(1.0), Some(1.0)], vec![Some(4.0), Some(4.0)]]);
    }
}
