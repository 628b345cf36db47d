//! ATE estimates frozen at the end of the exploration phase.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::OracleReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateSource {
    MeanDiff,
    Ipw,
}

/// Pairwise ATE estimates between exposure arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AteEstimate {
    pub values: Vec<Vec<f64>>,
    pub source: EstimateSource,
    /// Round at which the estimate was frozen.
    pub frozen_at: usize,
}

fn pairwise(means: &[f64]) -> Vec<Vec<f64>> {
    means
        .iter()
        .map(|&a| means.iter().map(|&b| a - b).collect())
        .collect()
}

/// Difference of per-arm sample means; every arm must have been pulled.
pub fn mean_diff_ate(means: &[f64], counts: &[u64], frozen_at: usize) -> Result<AteEstimate> {
    if means.len() != counts.len() {
        return Err(Error::DimensionMismatch("means and counts differ in length".into()));
    }
    if let Some(arm) = counts.iter().position(|&c| c == 0) {
        return Err(Error::UncoveredArm(arm));
    }
    Ok(AteEstimate {
        values: pairwise(means),
        source: EstimateSource::MeanDiff,
        frozen_at,
    })
}

/// Differences of cumulative IPW scores divided by the number of rounds.
/// Values are left unclamped.
pub fn ipw_ate(scores: &[f64], rounds: usize) -> Result<AteEstimate> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("IPW estimate needs at least one round".into()));
    }
    let scaled: Vec<f64> = scores.iter().map(|s| s / rounds as f64).collect();
    Ok(AteEstimate {
        values: pairwise(&scaled),
        source: EstimateSource::Ipw,
        frozen_at: rounds,
    })
}

impl AteEstimate {
    pub fn num_arms(&self) -> usize {
        self.values.len()
    }

    /// Flat `(i, j, value)` triples for `i != j`.
    pub fn triples(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i != j {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

/// Worst absolute error over arm pairs against the oracle ATE matrix.
pub fn estimation_error(estimate: &AteEstimate, report: &OracleReport) -> Result<f64> {
    if estimate.num_arms() != report.num_arms() {
        return Err(Error::DimensionMismatch(format!(
            "estimate covers {} arms, oracle {}",
            estimate.num_arms(),
            report.num_arms()
        )));
    }
    let mut worst = 0.0f64;
    for (est_row, true_row) in estimate.values.iter().zip(&report.ate_matrix) {
        for (e, t) in est_row.iter().zip(true_row) {
            worst = worst.max((e - t).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OracleMethod;
    use proptest::prelude::*;

    #[test]
    fn mean_diff_examples() {
        let e = mean_diff_ate(&[0.7, 0.3], &[1, 1], 2).unwrap();
        assert!((e.values[0][1] - 0.4).abs() < 1e-15);
        assert!((e.values[1][0] + 0.4).abs() < 1e-15);
        let flat = mean_diff_ate(&[0.2; 3], &[4; 3], 12).unwrap();
        assert!(flat.values.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(mean_diff_ate(&[0.2, 0.1], &[3, 0], 3), Err(Error::UncoveredArm(1)));
    }

    #[test]
    fn ipw_examples() {
        let e = ipw_ate(&[1.0, 1.0], 1).unwrap();
        assert_eq!(e.values[0][1], 0.0);
        assert_eq!(e.source, EstimateSource::Ipw);
        assert!(ipw_ate(&[0.0, 1.0], 0).is_err());
        // unclamped
        let wild = ipw_ate(&[5.0, -3.0], 2).unwrap();
        assert_eq!(wild.values[0][1], 4.0);
    }

    #[test]
    fn error_examples() {
        let report = OracleReport::from_exposure_means(vec![vec![0.7], vec![0.3]], OracleMethod::Exact);
        let exact = mean_diff_ate(&[0.7, 0.3], &[1, 1], 2).unwrap();
        assert_eq!(estimation_error(&exact, &report), Ok(0.0));
        let off = mean_diff_ate(&[0.6, 0.3], &[1, 1], 2).unwrap();
        assert!((estimation_error(&off, &report).unwrap() - 0.1).abs() < 1e-12);
        let wrong = mean_diff_ate(&[0.6, 0.3, 0.1], &[1, 1, 1], 3).unwrap();
        assert!(estimation_error(&wrong, &report).is_err());
    }

    #[test]
    fn triples_skip_diagonal() {
        let e = mean_diff_ate(&[0.5, 0.25], &[1, 1], 2).unwrap();
        assert_eq!(e.triples(), vec![(0, 1, 0.25), (1, 0, -0.25)]);
    }

    proptest! {
        #[test]
        fn estimates_are_antisymmetric(means in proptest::collection::vec(-50.0f64..50.0, 2..8), rounds in 1usize..100) {
            for est in [mean_diff_ate(&means, &vec![1; means.len()], rounds).unwrap(), ipw_ate(&means, rounds).unwrap()] {
                for i in 0..means.len() {
                    prop_assert_eq!(est.values[i][i], 0.0);
                    for j in 0..means.len() {
                        prop_assert_eq!(est.values[i][j], -est.values[j][i]);
                    }
                }
            }
        }
    }
}
