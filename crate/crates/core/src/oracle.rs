//! Ground truth for an instance: exposure-level means, the best exposure arm,
//! true ATEs and per-round pseudo-regret.
//!
//! The report is computed once per instance and shared read-only by every
//! replication.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{Instance, OutcomeModel};
use crate::error::{Error, Result};
use crate::exposure::{CompatibleSampler, ExposureArmSpace, ExposureSuperArm};

/// How exposure means were obtained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum OracleMethod {
    #[default]
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// `exposure_means[s][i]`: mean of `Y_i` over assignments compatible with arm `s`.
    pub exposure_means: Vec<Vec<f64>>,
    /// Unit-averaged exposure mean of each arm.
    pub arm_means: Vec<f64>,
    pub best_arm_index: usize,
    /// `ate_matrix[i][j]`: true ATE of arm `i` against arm `j`.
    pub ate_matrix: Vec<Vec<f64>>,
    pub method: OracleMethod,
}

/// Exact per-unit exposure means of `s`.
pub fn exposure_means_exact(instance: &Instance, s: &ExposureSuperArm, budget: u128) -> Result<Vec<f64>> {
    exact_for(instance.outcome(), instance, s, budget)
}

fn exact_for(outcome: &OutcomeModel, instance: &Instance, s: &ExposureSuperArm, budget: u128) -> Result<Vec<f64>> {
    let model = instance.model();
    let n = model.n();
    match outcome {
        OutcomeModel::ExposureFaithful(table) => {
            model.compatible_count(s, budget)?;
            (0..n).map(|i| table.get(i, s.0[i])).collect()
        }
        OutcomeModel::Needle {
            gap,
            target,
            baseline,
        } => {
            let count = model.compatible_count(s, budget)?;
            let hit = model.profile(target)? == *s;
            let v = if hit { baseline + gap / count } else { *baseline };
            Ok(vec![v; n])
        }
        OutcomeModel::Shifted {
            base,
            target,
            shift,
        } => {
            let mut means = exact_for(base, instance, s, budget)?;
            if s == target {
                means.iter_mut().for_each(|m| *m -= shift);
            }
            Ok(means)
        }
        OutcomeModel::DenseTable(_) => {
            let arms = model.compatible_super_arms(s, budget)?;
            let mut sums = vec![0.0; n];
            for a in &arms {
                for (acc, y) in sums.iter_mut().zip(instance.mean_outcomes(a)?) {
                    *acc += y;
                }
            }
            Ok(sums.into_iter().map(|x| x / arms.len() as f64).collect())
        }
    }
}

/// Monte-Carlo estimate of the per-unit exposure means of arm `index`.
pub fn exposure_means_monte_carlo(
    instance: &Instance,
    sampler: &CompatibleSampler,
    index: usize,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::InvalidParameter("Monte-Carlo oracle needs samples > 0".into()));
    }
    let mut sums = vec![0.0; instance.n()];
    for _ in 0..samples {
        let a = sampler.sample(index, rng);
        for (acc, y) in sums.iter_mut().zip(instance.mean_outcomes(&a)?) {
            *acc += y;
        }
    }
    Ok(sums.into_iter().map(|x| x / samples as f64).collect())
}

/// Index of the largest value; ties go to the lowest index.
pub fn best_exposure_arm(arm_means: &[f64]) -> usize {
    let mut best = 0;
    for (i, &m) in arm_means.iter().enumerate().skip(1) {
        if m > arm_means[best] {
            best = i;
        }
    }
    best
}

impl OracleReport {
    pub fn compute(
        instance: &Instance,
        space: &ExposureArmSpace,
        sampler: &CompatibleSampler,
        method: OracleMethod,
        budget: u128,
    ) -> Result<Self> {
        let exposure_means = match method {
            OracleMethod::Exact => space
                .arms()
                .iter()
                .map(|s| exposure_means_exact(instance, s, budget))
                .collect::<Result<Vec<_>>>()?,
            OracleMethod::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..space.len())
                    .map(|i| exposure_means_monte_carlo(instance, sampler, i, samples, &mut rng))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(Self::from_exposure_means(exposure_means, method))
    }

    pub fn from_exposure_means(exposure_means: Vec<Vec<f64>>, method: OracleMethod) -> Self {
        let arm_means: Vec<f64> = exposure_means
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .collect();
        let best_arm_index = best_exposure_arm(&arm_means);
        let ate_matrix = arm_means
            .iter()
            .map(|&mi| arm_means.iter().map(|&mj| mi - mj).collect())
            .collect();
        Self {
            exposure_means,
            arm_means,
            best_arm_index,
            ate_matrix,
            method,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.arm_means.len()
    }

    pub fn true_ate(&self, i: usize, j: usize) -> f64 {
        self.ate_matrix[i][j]
    }

    /// Pseudo-regret of pulling arm `chosen` for one round.
    pub fn regret_increment(&self, chosen: usize) -> f64 {
        self.ate_matrix[self.best_arm_index][chosen]
    }
}
