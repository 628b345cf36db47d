//! Uniform sampling of a joint assignment compatible with an exposure arm.
//!
//! The conditional law of the joint assignment given the exposure arm is
//! uniform over the compatible set. Proportion mappings are sampled directly
//! from counting tables; the neighborhood mapping falls back to bucketed
//! enumeration.

use std::collections::HashMap;

use rand::Rng;

use super::{ExposureArmSpace, ExposureMapping, ExposureModel, ExposureSuperArm, SuperArm};
use crate::error::{Error, Result};

/// `count(m, s)`: number of length-`m` vectors over `[0, k)` summing to `s`.
#[derive(Debug, Clone)]
pub struct CompositionTable {
    k: usize,
    rows: Vec<Vec<f64>>,
}

impl CompositionTable {
    pub fn new(max_len: usize, k: usize) -> Self {
        let mut rows = Vec::with_capacity(max_len + 1);
        rows.push(vec![1.0]);
        for m in 1..=max_len {
            let prev: &Vec<f64> = &rows[m - 1];
            let width = m * (k - 1) + 1;
            let row = (0..width)
                .map(|s| {
                    (0..k.min(s + 1))
                        .filter_map(|v| prev.get(s - v))
                        .sum()
                })
                .collect();
            rows.push(row);
        }
        Self { k, rows }
    }

    pub fn count(&self, len: usize, total: usize) -> f64 {
        self.rows
            .get(len)
            .and_then(|row| row.get(total))
            .copied()
            .unwrap_or(0.0)
    }

    /// Fills `units` of `a` with a uniform draw among vectors summing to `total`.
    fn fill<R: Rng + ?Sized>(&self, units: &[usize], total: usize, a: &mut [usize], rng: &mut R) {
        let mut remaining = total;
        for (pos, &u) in units.iter().enumerate() {
            let rest = units.len() - pos - 1;
            let denom = self.count(rest + 1, remaining);
            let mut draw = rng.random::<f64>() * denom;
            let hi = remaining.min(self.k - 1);
            let mut chosen = hi;
            for v in 0..=hi {
                let w = self.count(rest, remaining - v);
                if draw < w {
                    chosen = v;
                    break;
                }
                draw -= w;
            }
            // rounding can push the draw past the last positive weight
            while self.count(rest, remaining - chosen) == 0.0 {
                chosen -= 1;
            }
            a[u] = chosen;
            remaining -= chosen;
        }
    }
}

#[derive(Debug, Clone)]
enum Plan {
    Fixed(SuperArm),
    Blocks(Vec<(Vec<usize>, usize)>),
    Listed(Vec<SuperArm>),
}

/// Blocks whose totals are all extreme admit exactly one assignment.
fn forced(n: usize, k: usize, blocks: Vec<(Vec<usize>, usize)>) -> Plan {
    let mut a = vec![0usize; n];
    for (units, total) in &blocks {
        let value = if *total == 0 {
            0
        } else if *total == units.len() * (k - 1) {
            k - 1
        } else {
            return Plan::Blocks(blocks);
        };
        units.iter().for_each(|&u| a[u] = value);
    }
    Plan::Fixed(SuperArm(a))
}

/// Per-arm sampling plans for a whole exposure space.
#[derive(Debug, Clone)]
pub struct CompatibleSampler {
    n: usize,
    table: CompositionTable,
    plans: Vec<Plan>,
}

impl CompatibleSampler {
    pub fn new(model: &ExposureModel, space: &ExposureArmSpace, budget: u128) -> Result<Self> {
        let n = model.n();
        let plans = match model.mapping() {
            ExposureMapping::PerUnit => space
                .arms()
                .iter()
                .map(|s| Ok(Plan::Fixed(SuperArm(s.0.clone()))))
                .collect::<Result<Vec<_>>>()?,
            ExposureMapping::GlobalProportion | ExposureMapping::ClusterProportion => space
                .arms()
                .iter()
                .map(|s| model.block_targets(s).map(|blocks| forced(n, model.k(), blocks)))
                .collect::<Result<Vec<_>>>()?,
            ExposureMapping::NeighborhoodThreshold { .. } => {
                let mut buckets: Vec<Vec<SuperArm>> = vec![Vec::new(); space.len()];
                let lookup: HashMap<&ExposureSuperArm, usize> =
                    space.arms().iter().enumerate().map(|(i, s)| (s, i)).collect();
                model.for_each_super_arm(budget, |a| {
                    let p = model.profile_unchecked(a)?;
                    if let Some(&i) = lookup.get(&p) {
                        buckets[i].push(SuperArm(a.to_vec()));
                    }
                    Ok(())
                })?;
                if buckets.iter().any(Vec::is_empty) {
                    return Err(Error::NotRealizable);
                }
                buckets.into_iter().map(Plan::Listed).collect()
            }
        };
        let max_block = plans
            .iter()
            .filter_map(|p| match p {
                Plan::Blocks(b) => b.iter().map(|(u, _)| u.len()).max(),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        Ok(Self {
            n,
            table: CompositionTable::new(max_block, model.k()),
            plans,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.plans.len()
    }

    /// Uniform draw from the compatible set of arm `index` of the space.
    pub fn sample<R: Rng + ?Sized>(&self, index: usize, rng: &mut R) -> SuperArm {
        match &self.plans[index] {
            Plan::Fixed(a) => a.clone(),
            Plan::Listed(list) => list[rng.random_range(0..list.len())].clone(),
            Plan::Blocks(blocks) => {
                let mut a = vec![0usize; self.n];
                for (units, total) in blocks {
                    self.table.fill(units, *total, &mut a, rng);
                }
                SuperArm(a)
            }
        }
    }

    /// Same as [`sample`](Self::sample) keyed by the exposure arm itself.
    pub fn sample_for<R: Rng + ?Sized>(
        &self,
        space: &ExposureArmSpace,
        s: &ExposureSuperArm,
        rng: &mut R,
    ) -> Result<SuperArm> {
        let index = space.position(s).ok_or(Error::UnknownExposureArm)?;
        Ok(self.sample(index, rng))
    }
}
