//! Exposure mappings and the cluster-switchback exposure arm space.
//!
//! An exposure mapping compresses a joint assignment of `K` arms to `N`
//! units into one label per unit. The policy's decision space is the set of
//! exposure profiles that are constant on every cluster and realizable by at
//! least one joint assignment.

mod label;
mod sampler;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use label::Label;
pub use sampler::{CompatibleSampler, CompositionTable};

use crate::error::{Error, Result};
use crate::network::{AdjacencyMatrix, Clustering};

/// Default cap on the number of joint assignments any enumeration may visit.
pub const DEFAULT_BUDGET: u128 = 1 << 20;

/// Joint assignment: one arm index in `[0, K)` per unit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SuperArm(pub Vec<usize>);

impl SuperArm {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }
}

/// Per-unit exposure profile, stored as indices into the mapping's codomain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExposureSuperArm(pub Vec<usize>);

impl ExposureSuperArm {
    pub fn labels(&self) -> &[usize] {
        &self.0
    }
}

/// The built-in exposure mappings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ExposureMapping {
    /// Each unit's label is its own arm.
    PerUnit,
    /// Every unit sees the population mean of the arm indices.
    GlobalProportion,
    /// Indicator that the weighted neighborhood mean of arm indices is below
    /// `threshold`.
    NeighborhoodThreshold { threshold: f64 },
    /// Each unit sees the mean of the arm indices within its own cluster.
    ClusterProportion,
}

impl ExposureMapping {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PerUnit => "per_unit",
            Self::GlobalProportion => "global_proportion",
            Self::NeighborhoodThreshold { .. } => "neighborhood_threshold",
            Self::ClusterProportion => "cluster_proportion",
        }
    }
}

/// A mapping bound to its network, clustering and arm count.
#[derive(Debug, Clone)]
pub struct ExposureModel {
    mapping: ExposureMapping,
    k: usize,
    network: AdjacencyMatrix,
    clustering: Clustering,
    codomain: Vec<Label>,
    neighbor_sums: Vec<f64>,
}

impl ExposureModel {
    pub fn new(
        mapping: ExposureMapping,
        k: usize,
        network: AdjacencyMatrix,
        clustering: Clustering,
    ) -> Result<Self> {
        let n = network.n();
        if clustering.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "network has {n} units, clustering has {}",
                clustering.n()
            )));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("arm count K must be positive".into()));
        }
        if let ExposureMapping::NeighborhoodThreshold { threshold } = mapping {
            if !(threshold > 0.0 && threshold <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "threshold {threshold} must lie in (0, 1]"
                )));
            }
        }
        let km1 = (k - 1) as u64;
        let codomain = match mapping {
            ExposureMapping::PerUnit => (0..k as u64).map(Label::integer).collect(),
            ExposureMapping::GlobalProportion => (0..=n as u64 * km1)
                .map(|c| Label::new(c, n as u64))
                .collect::<Result<Vec<_>>>()?,
            ExposureMapping::NeighborhoodThreshold { .. } => vec![Label::integer(0), Label::integer(1)],
            ExposureMapping::ClusterProportion => {
                let mut set = BTreeSet::new();
                for members in clustering.clusters() {
                    let m = members.len() as u64;
                    for c in 0..=m * km1 {
                        set.insert(Label::new(c, m)?);
                    }
                }
                set.into_iter().collect()
            }
        };
        let neighbor_sums = (0..n).map(|i| network.row(i).iter().sum()).collect();
        Ok(Self {
            mapping,
            k,
            network,
            clustering,
            codomain,
            neighbor_sums,
        })
    }

    pub fn mapping(&self) -> ExposureMapping {
        self.mapping
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.network.n()
    }

    pub fn network(&self) -> &AdjacencyMatrix {
        &self.network
    }

    pub fn clustering(&self) -> &Clustering {
        &self.clustering
    }

    /// Ordered codomain; label indices refer to positions in this slice.
    pub fn codomain(&self) -> &[Label] {
        &self.codomain
    }

    pub fn label_index(&self, label: Label) -> Option<usize> {
        self.codomain.binary_search(&label).ok()
    }

    pub fn label(&self, index: usize) -> Label {
        self.codomain[index]
    }

    /// Raw joint-assignment space size `K^N`, saturating.
    pub fn raw_space_size(&self) -> u128 {
        (self.k as u128).checked_pow(self.n() as u32).unwrap_or(u128::MAX)
    }

    pub fn check_super_arm(&self, a: &SuperArm) -> Result<()> {
        if a.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "super arm has {} entries, expected {}",
                a.len(),
                self.n()
            )));
        }
        if let Some(&arm) = a.0.iter().find(|&&x| x >= self.k) {
            return Err(Error::ArmOutOfRange { arm, k: self.k });
        }
        Ok(())
    }

    /// Exposure label index of unit `i` under joint assignment `a`.
    pub fn apply(&self, i: usize, a: &SuperArm) -> Result<usize> {
        self.check_super_arm(a)?;
        if i >= self.n() {
            return Err(Error::UnitOutOfRange { index: i, n: self.n() });
        }
        self.apply_unchecked(i, &a.0)
    }

    fn apply_unchecked(&self, i: usize, a: &[usize]) -> Result<usize> {
        match self.mapping {
            ExposureMapping::PerUnit => Ok(a[i]),
            ExposureMapping::GlobalProportion => Ok(a.iter().sum()),
            ExposureMapping::NeighborhoodThreshold { threshold } => {
                let total = self.neighbor_sums[i];
                if total <= 0.0 {
                    return Err(Error::IsolatedUnit(i));
                }
                let exposed: f64 = self
                    .network
                    .row(i)
                    .iter()
                    .zip(a)
                    .map(|(&h, &aj)| h * aj as f64)
                    .sum();
                Ok(usize::from(exposed / total < threshold))
            }
            ExposureMapping::ClusterProportion => {
                let q = self.clustering.assignment()[i];
                let members = self.clustering.members(q);
                let total: usize = members.iter().map(|&j| a[j]).sum();
                let label = Label::new(total as u64, members.len() as u64)?;
                Ok(self
                    .label_index(label)
                    .expect("cluster proportion labels are in the codomain"))
            }
        }
    }

    /// Exposure profile of every unit under `a`.
    pub fn profile(&self, a: &SuperArm) -> Result<ExposureSuperArm> {
        self.check_super_arm(a)?;
        self.profile_unchecked(&a.0)
    }

    fn profile_unchecked(&self, a: &[usize]) -> Result<ExposureSuperArm> {
        match self.mapping {
            ExposureMapping::GlobalProportion => Ok(ExposureSuperArm(vec![a.iter().sum(); a.len()])),
            _ => (0..a.len())
                .map(|i| self.apply_unchecked(i, a))
                .collect::<Result<Vec<_>>>()
                .map(ExposureSuperArm),
        }
    }

    /// Whether units sharing a cluster share a label.
    pub fn is_cluster_constant(&self, s: &ExposureSuperArm) -> bool {
        self.clustering.clusters().all(|members| {
            let first = s.0[members[0]];
            members.iter().all(|&u| s.0[u] == first)
        })
    }

    fn check_exposure_arm(&self, s: &ExposureSuperArm) -> Result<()> {
        if s.0.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "exposure arm has {} entries, expected {}",
                s.0.len(),
                self.n()
            )));
        }
        if s.0.iter().any(|&l| l >= self.codomain.len()) {
            return Err(Error::InvalidLabel("label index outside the codomain".into()));
        }
        Ok(())
    }

    /// Visits every joint assignment in lexicographic order.
    fn for_each_super_arm(&self, budget: u128, mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
        let required = self.raw_space_size();
        if required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }
        let n = self.n();
        let mut a = vec![0usize; n];
        loop {
            f(&a)?;
            // odometer increment, last unit fastest
            let mut pos = n;
            loop {
                if pos == 0 {
                    return Ok(());
                }
                pos -= 1;
                a[pos] += 1;
                if a[pos] < self.k {
                    break;
                }
                a[pos] = 0;
            }
        }
    }

    /// Brute-force `U_E` (before any restriction) together with `|U_O|`.
    pub fn enumerate_brute_force(&self, budget: u128) -> Result<(Vec<ExposureSuperArm>, u128)> {
        let mut realizable = BTreeSet::new();
        self.for_each_super_arm(budget, |a| {
            realizable.insert(self.profile_unchecked(a)?);
            Ok(())
        })?;
        let count = realizable.len() as u128;
        let arms = realizable
            .into_iter()
            .filter(|s| self.is_cluster_constant(s))
            .collect();
        Ok((arms, count))
    }

    fn cluster_constant_count(&self) -> u128 {
        let d = self.codomain.len() as u128;
        d.checked_pow(self.clustering.num_clusters() as u32)
            .unwrap_or(u128::MAX)
    }

    /// Spreads one label per cluster onto units.
    fn expand_cluster_labels(&self, per_cluster: &[usize]) -> ExposureSuperArm {
        ExposureSuperArm(
            self.clustering
                .assignment()
                .iter()
                .map(|&q| per_cluster[q])
                .collect(),
        )
    }

    /// Enumerates `U_E`, analytically where the mapping has structure and by
    /// brute force otherwise, then intersects with `restriction` if given.
    pub fn enumerate_space(
        &self,
        budget: u128,
        restriction: Option<&[Label]>,
    ) -> Result<ExposureArmSpace> {
        let km1 = self.k - 1;
        let (mut arms, realizable) = match self.mapping {
            ExposureMapping::PerUnit => {
                let c = self.clustering.num_clusters();
                let size = (self.k as u128).checked_pow(c as u32).unwrap_or(u128::MAX);
                if size > budget {
                    return Err(Error::BudgetExceeded { required: size, budget });
                }
                let ranges = vec![self.k; c];
                let arms = cartesian(&ranges)
                    .map(|labels| self.expand_cluster_labels(&labels))
                    .collect();
                (arms, self.raw_space_size())
            }
            ExposureMapping::GlobalProportion => {
                let n = self.n();
                let arms = (0..=n * km1).map(|c| ExposureSuperArm(vec![c; n])).collect();
                ((arms), (n * km1 + 1) as u128)
            }
            ExposureMapping::ClusterProportion => {
                let sizes: Vec<usize> = self.clustering.clusters().map(|m| m.len()).collect();
                let ranges: Vec<usize> = sizes.iter().map(|&m| m * km1 + 1).collect();
                let size = ranges
                    .iter()
                    .try_fold(1u128, |acc, &r| acc.checked_mul(r as u128))
                    .unwrap_or(u128::MAX);
                if size > budget {
                    return Err(Error::BudgetExceeded { required: size, budget });
                }
                let arms = cartesian(&ranges)
                    .map(|counts| {
                        let per_cluster: Vec<usize> = counts
                            .iter()
                            .zip(&sizes)
                            .map(|(&c, &m)| {
                                let label = Label::new(c as u64, m as u64).expect("m > 0");
                                self.label_index(label).expect("label in codomain")
                            })
                            .collect();
                        self.expand_cluster_labels(&per_cluster)
                    })
                    .collect();
                (arms, size)
            }
            ExposureMapping::NeighborhoodThreshold { .. } => self.enumerate_brute_force(budget)?,
        };
        arms.sort();
        arms.dedup();
        if let Some(allowed) = restriction {
            let allowed: BTreeSet<usize> = allowed
                .iter()
                .map(|&l| {
                    self.label_index(l).ok_or_else(|| {
                        Error::InvalidLabel(format!("restricted label {l} is not in the codomain"))
                    })
                })
                .collect::<Result<_>>()?;
            arms.retain(|s| s.0.iter().all(|l| allowed.contains(l)));
        }
        if arms.len() < 2 {
            return Err(Error::TooFewArms(arms.len()));
        }
        let index = arms.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(ExposureArmSpace {
            arms,
            index,
            cluster_constant_count: self.cluster_constant_count(),
            realizable_count: realizable,
        })
    }

    /// For proportion mappings, the number of treated "arm units" each
    /// cluster (or the whole population) must carry to realize `s`.
    fn block_targets(&self, s: &ExposureSuperArm) -> Result<Vec<(Vec<usize>, usize)>> {
        let km1 = self.k - 1;
        let blocks: Vec<Vec<usize>> = match self.mapping {
            ExposureMapping::GlobalProportion => vec![(0..self.n()).collect()],
            ExposureMapping::ClusterProportion => {
                self.clustering.clusters().map(<[usize]>::to_vec).collect()
            }
            _ => unreachable!("block_targets is only used by proportion mappings"),
        };
        let mut out = Vec::with_capacity(blocks.len());
        for units in blocks {
            let first = s.0[units[0]];
            if units.iter().any(|&u| s.0[u] != first) {
                return Err(Error::NotRealizable);
            }
            let total = match self.mapping {
                ExposureMapping::GlobalProportion => first,
                _ => {
                    let label = self.codomain[first];
                    let m = units.len() as u64;
                    // label * m must be a whole number of arm units
                    if !(label.numer() * m).is_multiple_of(label.denom()) {
                        return Err(Error::NotRealizable);
                    }
                    (label.numer() * m / label.denom()) as usize
                }
            };
            if total > units.len() * km1 {
                return Err(Error::NotRealizable);
            }
            out.push((units, total));
        }
        Ok(out)
    }

    /// Number of joint assignments whose profile is `s`.
    pub fn compatible_count(&self, s: &ExposureSuperArm, budget: u128) -> Result<f64> {
        self.check_exposure_arm(s)?;
        let count = match self.mapping {
            ExposureMapping::PerUnit => 1.0,
            ExposureMapping::GlobalProportion | ExposureMapping::ClusterProportion => {
                let blocks = self.block_targets(s)?;
                let max_len = blocks.iter().map(|(u, _)| u.len()).max().unwrap_or(0);
                let table = CompositionTable::new(max_len, self.k);
                blocks
                    .iter()
                    .map(|(units, total)| table.count(units.len(), *total))
                    .product()
            }
            ExposureMapping::NeighborhoodThreshold { .. } => {
                let mut count = 0u64;
                self.for_each_super_arm(budget, |a| {
                    if self.profile_unchecked(a)? == *s {
                        count += 1;
                    }
                    Ok(())
                })?;
                count as f64
            }
        };
        if count == 0.0 {
            return Err(Error::NotRealizable);
        }
        Ok(count)
    }

    /// Every joint assignment whose profile is `s`, in lexicographic order.
    pub fn compatible_super_arms(&self, s: &ExposureSuperArm, budget: u128) -> Result<Vec<SuperArm>> {
        self.check_exposure_arm(s)?;
        let out = match self.mapping {
            ExposureMapping::PerUnit => {
                if s.0.iter().any(|&l| l >= self.k) {
                    return Err(Error::NotRealizable);
                }
                vec![SuperArm(s.0.clone())]
            }
            ExposureMapping::GlobalProportion | ExposureMapping::ClusterProportion => {
                let count = self.compatible_count(s, budget)?;
                if count > budget as f64 {
                    return Err(Error::BudgetExceeded {
                        required: count as u128,
                        budget,
                    });
                }
                let blocks = self.block_targets(s)?;
                let mut partial = vec![vec![0usize; self.n()]];
                for (units, total) in &blocks {
                    let fills = bounded_compositions(units.len(), *total, self.k);
                    let mut next = Vec::with_capacity(partial.len() * fills.len());
                    for base in &partial {
                        for fill in &fills {
                            let mut a = base.clone();
                            for (&u, &v) in units.iter().zip(fill) {
                                a[u] = v;
                            }
                            next.push(a);
                        }
                    }
                    partial = next;
                }
                let mut arms: Vec<SuperArm> = partial.into_iter().map(SuperArm).collect();
                arms.sort();
                arms
            }
            ExposureMapping::NeighborhoodThreshold { .. } => {
                let mut arms = Vec::new();
                self.for_each_super_arm(budget, |a| {
                    if self.profile_unchecked(a)? == *s {
                        arms.push(SuperArm(a.to_vec()));
                    }
                    Ok(())
                })?;
                arms
            }
        };
        if out.is_empty() {
            return Err(Error::NotRealizable);
        }
        Ok(out)
    }

    /// Whether every arm of `space` is realized by exactly one joint assignment.
    pub fn is_one_to_one(&self, space: &ExposureArmSpace, budget: u128) -> Result<bool> {
        for s in space.arms() {
            if self.compatible_count(s, budget)? != 1.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Human-readable labels of an exposure arm.
    pub fn describe(&self, s: &ExposureSuperArm) -> Vec<String> {
        s.0.iter().map(|&l| self.codomain[l].to_string()).collect()
    }
}

/// All vectors of length `len` over `[0, k)` summing to `total`, lexicographic.
fn bounded_compositions(len: usize, total: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(len: usize, total: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if len == 0 {
            if total == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        let rest_cap = (len - 1) * (k - 1);
        let lo = total.saturating_sub(rest_cap);
        let hi = total.min(k - 1);
        for v in lo..=hi {
            prefix.push(v);
            rec(len - 1, total - v, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if total <= len * (k - 1) {
        rec(len, total, k, &mut Vec::with_capacity(len), &mut out);
    }
    out
}

/// Lexicographic iterator over the mixed-radix product `[0, r0) x [0, r1) x ...`.
fn cartesian(ranges: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let mut current = if ranges.iter().all(|&r| r > 0) {
        Some(vec![0usize; ranges.len()])
    } else {
        None
    };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut pos = ranges.len();
        let mut advanced = false;
        while pos > 0 {
            pos -= 1;
            let cur = current.as_mut().unwrap();
            cur[pos] += 1;
            if cur[pos] < ranges[pos] {
                advanced = true;
                break;
            }
            cur[pos] = 0;
        }
        if !advanced {
            current = None;
        }
        Some(out)
    })
}

/// The enumerated decision space `U_E`, lexicographically ordered.
#[derive(Debug, Clone)]
pub struct ExposureArmSpace {
    arms: Vec<ExposureSuperArm>,
    index: HashMap<ExposureSuperArm, usize>,
    cluster_constant_count: u128,
    realizable_count: u128,
}

impl ExposureArmSpace {
    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arms(&self) -> &[ExposureSuperArm] {
        &self.arms
    }

    pub fn arm(&self, index: usize) -> &ExposureSuperArm {
        &self.arms[index]
    }

    pub fn position(&self, s: &ExposureSuperArm) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// `|U_C|`, saturating at `u128::MAX`.
    pub fn cluster_constant_count(&self) -> u128 {
        self.cluster_constant_count
    }

    /// `|U_O|`, saturating at `u128::MAX`.
    pub fn realizable_count(&self) -> u128 {
        self.realizable_count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(mapping: ExposureMapping, k: usize, assignment: Vec<usize>) -> ExposureModel {
        let n = assignment.len();
        ExposureModel::new(
            mapping,
            k,
            AdjacencyMatrix::empty(n).unwrap(),
            Clustering::new(assignment).unwrap(),
        )
        .unwrap()
    }

    fn chain3() -> AdjacencyMatrix {
        AdjacencyMatrix::build(3, &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)]).unwrap()
    }

    #[test]
    fn per_unit_apply() {
        let m = model(ExposureMapping::PerUnit, 2, vec![0, 1, 2]);
        assert_eq!(m.apply(0, &SuperArm(vec![1, 0, 1])), Ok(1));
        let p = m.profile(&SuperArm(vec![1, 0, 1])).unwrap();
        assert_eq!(p.0, vec![1, 0, 1]);
    }

    #[test]
    fn global_proportion_apply() {
        let m = model(ExposureMapping::GlobalProportion, 2, vec![0; 4]);
        let a = SuperArm(vec![1, 0, 1, 0]);
        for i in 0..4 {
            let l = m.apply(i, &a).unwrap();
            assert_eq!(m.label(l), Label::new(1, 2).unwrap());
        }
        let full = m.profile(&SuperArm(vec![1; 4])).unwrap();
        assert!(full.0.iter().all(|&l| m.label(l) == Label::integer(1)));
    }

    #[test]
    fn neighborhood_threshold_apply() {
        let m = ExposureModel::new(
            ExposureMapping::NeighborhoodThreshold { threshold: 0.5 },
            2,
            chain3(),
            Clustering::singletons(3).unwrap(),
        )
        .unwrap();
        // neighbors of unit 1 are 0 and 2: (1 + 0) / 2 = 0.5, not < 0.5
        let brute = {
            let h = chain3();
            let a = [1.0, 1.0, 0.0];
            let num: f64 = (0..3).map(|j| h.weight(1, j) * a[j]).sum();
            let den: f64 = (0..3).map(|j| h.weight(1, j)).sum();
            usize::from(num / den < 0.5)
        };
        assert_eq!(m.apply(1, &SuperArm(vec![1, 1, 0])), Ok(brute));
        assert_eq!(brute, 0);
        assert_eq!(m.apply(1, &SuperArm(vec![0, 1, 0])), Ok(1));
    }

    #[test]
    fn neighborhood_threshold_rejects_isolated_units() {
        let m = ExposureModel::new(
            ExposureMapping::NeighborhoodThreshold { threshold: 0.5 },
            2,
            AdjacencyMatrix::build(3, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap(),
            Clustering::singletons(3).unwrap(),
        )
        .unwrap();
        assert_eq!(m.apply(2, &SuperArm(vec![0, 0, 0])), Err(Error::IsolatedUnit(2)));
        assert!(m.apply(0, &SuperArm(vec![0, 0, 0])).is_ok());
    }

    #[test]
    fn cluster_proportion_profile() {
        let m = model(ExposureMapping::ClusterProportion, 2, vec![0, 0, 1, 1]);
        let p = m.profile(&SuperArm(vec![1, 0, 0, 0])).unwrap();
        let labels: Vec<Label> = p.0.iter().map(|&l| m.label(l)).collect();
        let half = Label::new(1, 2).unwrap();
        let zero = Label::integer(0);
        assert_eq!(labels, vec![half, half, zero, zero]);
    }

    #[test]
    fn rejects_malformed_super_arms() {
        let m = model(ExposureMapping::PerUnit, 2, vec![0, 1]);
        assert!(matches!(m.apply(0, &SuperArm(vec![2, 0])), Err(Error::ArmOutOfRange { .. })));
        assert!(matches!(m.profile(&SuperArm(vec![0])), Err(Error::DimensionMismatch(_))));
        assert!(matches!(m.apply(5, &SuperArm(vec![0, 0])), Err(Error::UnitOutOfRange { .. })));
    }

    #[test]
    fn per_unit_space_is_cluster_switchback() {
        let m = model(ExposureMapping::PerUnit, 2, vec![0, 0, 1, 1]);
        let space = m.enumerate_space(DEFAULT_BUDGET, None).unwrap();
        let arms: Vec<Vec<usize>> = space.arms().iter().map(|s| s.0.clone()).collect();
        assert_eq!(
            arms,
            vec![vec![0, 0, 0, 0], vec![0, 0, 1, 1], vec![1, 1, 0, 0], vec![1, 1, 1, 1]]
        );
        assert_eq!(space.cluster_constant_count(), 4);
        assert_eq!(space.realizable_count(), 16);
    }

    #[test]
    fn per_unit_singletons_give_full_space() {
        let m = model(ExposureMapping::PerUnit, 2, vec![0, 1]);
        let space = m.enumerate_space(DEFAULT_BUDGET, None).unwrap();
        assert_eq!(space.len(), 4);
    }

    #[test]
    fn restricted_global_proportion() {
        let m = model(ExposureMapping::GlobalProportion, 2, vec![0; 3]);
        let restriction = [Label::integer(0), Label::integer(1)];
        let space = m.enumerate_space(DEFAULT_BUDGET, Some(&restriction)).unwrap();
        let arms: Vec<Vec<String>> = space.arms().iter().map(|s| m.describe(s)).collect();
        assert_eq!(arms, vec![vec!["0"; 3], vec!["1"; 3]]);
    }

    #[test]
    fn too_small_space_is_rejected() {
        let m = model(ExposureMapping::GlobalProportion, 2, vec![0; 3]);
        let restriction = [Label::integer(1)];
        assert_eq!(
            m.enumerate_space(DEFAULT_BUDGET, Some(&restriction)).unwrap_err(),
            Error::TooFewArms(1)
        );
        let bad = [Label::new(1, 7).unwrap()];
        assert!(matches!(
            m.enumerate_space(DEFAULT_BUDGET, Some(&bad)),
            Err(Error::InvalidLabel(_))
        ));
    }

    #[test]
    fn brute_force_budget_is_enforced() {
        let n = 22;
        let m = ExposureModel::new(
            ExposureMapping::NeighborhoodThreshold { threshold: 0.5 },
            2,
            AdjacencyMatrix::build(n, &(0..n).map(|i| (i, (i + 1) % n, 1.0)).collect::<Vec<_>>())
                .unwrap(),
            Clustering::singletons(n).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            m.enumerate_space(DEFAULT_BUDGET, None),
            Err(Error::BudgetExceeded { .. })
        ));
        // the analytic per-unit enumerator has no such limit on N
        let per_unit = model(ExposureMapping::PerUnit, 2, vec![0; 64]);
        assert_eq!(per_unit.enumerate_space(DEFAULT_BUDGET, None).unwrap().len(), 2);
    }

    #[test]
    fn compatible_sets() {
        let m = model(ExposureMapping::PerUnit, 2, vec![0, 1]);
        assert_eq!(
            m.compatible_super_arms(&ExposureSuperArm(vec![1, 0]), DEFAULT_BUDGET).unwrap(),
            vec![SuperArm(vec![1, 0])]
        );

        let g = model(ExposureMapping::GlobalProportion, 2, vec![0; 3]);
        let third = ExposureSuperArm(vec![1; 3]);
        // brute force over all 2^3 joint assignments
        let mut brute = Vec::new();
        for code in 0..8usize {
            let a: Vec<usize> = (0..3).map(|b| (code >> (2 - b)) & 1).collect();
            if a.iter().sum::<usize>() == 1 {
                brute.push(SuperArm(a));
            }
        }
        brute.sort();
        assert_eq!(g.compatible_super_arms(&third, DEFAULT_BUDGET).unwrap(), brute);
        assert_eq!(brute.len(), 3);
        assert_eq!(
            g.compatible_super_arms(&ExposureSuperArm(vec![3; 3]), DEFAULT_BUDGET).unwrap(),
            vec![SuperArm(vec![1, 1, 1])]
        );
        assert_eq!(
            g.compatible_super_arms(&ExposureSuperArm(vec![0, 1, 1]), DEFAULT_BUDGET),
            Err(Error::NotRealizable)
        );
    }

    #[test]
    fn cluster_proportion_rejects_unrealizable_fraction() {
        // clusters of size 2 and 3: label 1/3 cannot occur in the size-2 cluster
        let m = model(ExposureMapping::ClusterProportion, 2, vec![0, 0, 1, 1, 1]);
        let third = m.label_index(Label::new(1, 3).unwrap()).unwrap();
        let zero = m.label_index(Label::integer(0)).unwrap();
        let s = ExposureSuperArm(vec![third, third, zero, zero, zero]);
        assert_eq!(m.compatible_count(&s, DEFAULT_BUDGET), Err(Error::NotRealizable));
    }

    #[test]
    fn compositions_match_filter() {
        for k in 2..4 {
            for len in 0..5 {
                for total in 0..=len * (k - 1) + 1 {
                    let fast = bounded_compositions(len, total, k);
                    let mut slow = Vec::new();
                    for v in cartesian(&vec![k; len]) {
                        if v.iter().sum::<usize>() == total {
                            slow.push(v);
                        }
                    }
                    assert_eq!(fast, slow, "k={k} len={len} total={total}");
                }
            }
        }
    }
}
