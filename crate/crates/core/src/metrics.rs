//! Regret, estimation error and trade-off summaries over replicated runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::AteEstimate;

/// One round of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub arm: usize,
    /// Unit-averaged realized reward.
    pub reward: f64,
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    pub records: Vec<RoundRecord>,
    pub estimate: Option<AteEstimate>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        iter.into_iter().for_each(|v| s.add(v));
        s
    }
}

/// Pseudo-regret: sum of oracle regret increments.
pub fn cumulative_regret(trace: &RunTrace) -> f64 {
    trace
        .records
        .iter()
        .map(|r| r.regret)
        .collect::<CompensatedSum>()
        .total()
}

/// Mean and standard error of the mean; the error needs two or more values.
pub fn mean_and_standard_error(values: &[f64]) -> (f64, Option<f64>) {
    if values.is_empty() {
        return (f64::NAN, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<CompensatedSum>().total() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let ss = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<CompensatedSum>()
        .total();
    (mean, Some((ss / (n - 1.0) / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub mean_regret: f64,
    pub regret_se: Option<f64>,
    pub mean_error: f64,
    pub error_se: Option<f64>,
    pub product: f64,
    pub replications: usize,
}

impl AggregateResult {
    /// Aggregates per-replication `(regret, error)` pairs in the given order.
    pub fn from_runs(regrets: &[f64], errors: &[f64]) -> Result<Self> {
        if regrets.len() != errors.len() {
            return Err(Error::DimensionMismatch("regret and error counts differ".into()));
        }
        if regrets.is_empty() {
            return Err(Error::InvalidInput("no replications to aggregate".into()));
        }
        let (mean_regret, regret_se) = mean_and_standard_error(regrets);
        let (mean_error, error_se) = mean_and_standard_error(errors);
        Ok(Self {
            mean_regret,
            regret_se,
            mean_error,
            error_se,
            product: tradeoff_product(mean_regret, mean_error),
            replications: regrets.len(),
        })
    }
}

/// `sqrt(mean regret) * mean estimation error`.
pub fn tradeoff_product(mean_regret: f64, mean_error: f64) -> f64 {
    mean_regret.max(0.0).sqrt() * mean_error
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares fit of `ln y` on `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch("xs and ys differ in length".into()));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidInput(format!("slope fit needs 3 points, got {}", xs.len())));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidInput(format!("log-log fit needs positive values, got {v}")));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Indices of the non-dominated `(regret, error)` points, in input order.
/// `q` dominates `p` when it is no worse in both coordinates and better in one.
pub fn pareto_front(points: &[(f64, f64)]) -> Result<Vec<usize>> {
    if points.iter().any(|(x, y)| x.is_nan() || y.is_nan()) {
        return Err(Error::InvalidInput("NaN in Pareto input".into()));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .0
            .total_cmp(&points[b].0)
            .then(points[a].1.total_cmp(&points[b].1))
    });
    let mut keep = vec![false; points.len()];
    let mut best_before = f64::INFINITY;
    let mut start = 0;
    while start < order.len() {
        let x = points[order[start]].0;
        let mut end = start;
        while end < order.len() && points[order[end]].0 == x {
            end += 1;
        }
        // group is sorted by y, so its first entry has the group minimum
        let group_min = points[order[start]].1;
        for &i in &order[start..end] {
            let y = points[i].1;
            keep[i] = y < best_before && y <= group_min;
        }
        best_before = best_before.min(group_min);
        start = end;
    }
    Ok((0..points.len()).filter(|&i| keep[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace(regrets: &[f64]) -> RunTrace {
        RunTrace {
            seed: 0,
            records: regrets
                .iter()
                .enumerate()
                .map(|(t, &regret)| RoundRecord {
                    round: t + 1,
                    arm: 0,
                    reward: 0.0,
                    regret,
                })
                .collect(),
            estimate: None,
        }
    }

    #[test]
    fn regret_examples() {
        assert_eq!(cumulative_regret(&trace(&[0.0; 20])), 0.0);
        let mut incs = vec![0.4; 10];
        incs.extend([0.0; 5]);
        assert!((cumulative_regret(&trace(&incs)) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn product_examples() {
        assert_eq!(tradeoff_product(100.0, 0.5), 5.0);
        assert_eq!(tradeoff_product(100.0, 0.0), 0.0);
    }

    #[test]
    fn aggregate_standard_errors() {
        let agg = AggregateResult::from_runs(&[1.0, 3.0], &[0.5, 0.5]).unwrap();
        assert_eq!(agg.mean_regret, 2.0);
        assert!((agg.regret_se.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(agg.error_se, Some(0.0));
        assert!((agg.product - 2f64.sqrt() * 0.5).abs() < 1e-15);
        let single = AggregateResult::from_runs(&[1.0], &[0.1]).unwrap();
        assert_eq!(single.regret_se, None);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.total(), 1000.0);
    }

    #[test]
    fn slope_examples() {
        let fit = loglog_slope(&[1.0, 2.0, 5.0], &[1.0, 2.0, 5.0]).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12 && (fit.r_squared - 1.0).abs() < 1e-12);
        let xs = [4.0, 16.0, 64.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 1.0 / x.sqrt()).collect();
        assert!((loglog_slope(&xs, &ys).unwrap().slope + 0.5).abs() < 1e-10);
        assert!(loglog_slope(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(loglog_slope(&[1.0, 0.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn slope_with_small_noise() {
        let xs: Vec<f64> = (0..8).map(|i| 2f64.powi(8 + i)).collect();
        let wobble = [1e-3, -2e-3, 5e-4, 0.0, -1e-3, 2e-3, -5e-4, 1e-3];
        let ys: Vec<f64> = xs.iter().zip(wobble).map(|(x, w)| 3.0 * x.sqrt() * (1.0 + w)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap().slope - 0.5).abs() < 0.02);
    }

    #[test]
    fn pareto_examples() {
        assert_eq!(pareto_front(&[(1.0, 1.0)]).unwrap(), vec![0]);
        assert_eq!(pareto_front(&[(1.0, 2.0), (2.0, 1.0), (2.0, 2.0)]).unwrap(), vec![0, 1]);
        // duplicates do not dominate each other
        assert_eq!(pareto_front(&[(1.0, 1.0), (1.0, 1.0)]).unwrap(), vec![0, 1]);
        assert!(pareto_front(&[]).unwrap().is_empty());
    }

    fn brute_force(points: &[(f64, f64)]) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| {
                let (px, py) = points[i];
                !points
                    .iter()
                    .any(|&(qx, qy)| qx <= px && qy <= py && (qx < px || qy < py))
            })
            .collect()
    }

    proptest! {
        #[test]
        fn pareto_matches_brute_force(points in proptest::collection::vec((0u8..12, 0u8..12), 0..60)) {
            let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (f64::from(x), f64::from(y))).collect();
            prop_assert_eq!(pareto_front(&pts).unwrap(), brute_force(&pts));
        }

        #[test]
        fn regret_prefixes_are_monotone(incs in proptest::collection::vec(0.0f64..1.0, 1..50)) {
            let mut last = 0.0;
            for end in 1..=incs.len() {
                let r = cumulative_regret(&trace(&incs[..end]));
                prop_assert!(r >= 0.0 && r >= last - 1e-12);
                last = r;
            }
        }

        #[test]
        fn power_law_exponent_is_recovered(exponent in -2.0f64..2.0, scale in 0.1f64..10.0) {
            let xs = [2.0, 8.0, 32.0, 128.0];
            let ys: Vec<f64> = xs.iter().map(|x: &f64| scale * x.powf(exponent)).collect();
            prop_assert!((loglog_slope(&xs, &ys).unwrap().slope - exponent).abs() < 1e-10);
        }
    }
}
