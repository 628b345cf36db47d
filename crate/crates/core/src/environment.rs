//! Bandit instances: potential outcomes, noise and drift.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exposure::{ExposureModel, ExposureSuperArm, Label, SuperArm, DEFAULT_BUDGET};

/// Mean outcome per `(unit, exposure label)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureTable {
    means: Vec<Vec<Option<f64>>>,
}

/// One row of an exposure-faithful table as written in config files.
/// A missing `unit` applies the mean to every unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureTableEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<usize>,
    pub label: Label,
    pub mean: f64,
}

impl ExposureTable {
    pub fn from_entries(model: &ExposureModel, entries: &[ExposureTableEntry]) -> Result<Self> {
        let mut means = vec![vec![None; model.codomain().len()]; model.n()];
        for e in entries {
            let l = model.label_index(e.label).ok_or_else(|| {
                Error::InvalidLabel(format!("label {} is not in the mapping's codomain", e.label))
            })?;
            match e.unit {
                Some(u) if u >= model.n() => {
                    return Err(Error::UnitOutOfRange { index: u, n: model.n() })
                }
                Some(u) => means[u][l] = Some(e.mean),
                None => means.iter_mut().for_each(|row| row[l] = Some(e.mean)),
            }
        }
        Ok(Self { means })
    }

    /// Same mean for every unit, one value per codomain label.
    pub fn uniform_by_label(model: &ExposureModel, per_label: &[f64]) -> Result<Self> {
        if per_label.len() != model.codomain().len() {
            return Err(Error::DimensionMismatch(format!(
                "{} means for {} labels",
                per_label.len(),
                model.codomain().len()
            )));
        }
        Ok(Self {
            means: vec![per_label.iter().map(|&m| Some(m)).collect(); model.n()],
        })
    }

    pub fn get(&self, unit: usize, label: usize) -> Result<f64> {
        self.means[unit][label]
            .ok_or_else(|| Error::MissingOutcome(format!("unit {unit}, label index {label}")))
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.means.iter().flatten().filter_map(|m| *m)
    }
}

/// Potential-outcome model `Y_i(A)`.
#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeModel {
    /// Explicit means per joint assignment.
    DenseTable(HashMap<SuperArm, Vec<f64>>),
    /// `Y_i(A)` depends on `A` only through unit `i`'s exposure label.
    ExposureFaithful(ExposureTable),
    /// `baseline + gap` on `target`, `baseline` everywhere else.
    Needle {
        gap: f64,
        target: SuperArm,
        baseline: f64,
    },
    /// `base` minus `shift` on every joint assignment whose profile is `target`.
    Shifted {
        base: Box<OutcomeModel>,
        target: ExposureSuperArm,
        shift: f64,
    },
}

impl OutcomeModel {
    fn range(&self) -> (f64, f64) {
        let fold = |it: &mut dyn Iterator<Item = f64>| {
            it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        match self {
            Self::DenseTable(t) => fold(&mut t.values().flatten().copied()),
            Self::ExposureFaithful(t) => fold(&mut t.values()),
            Self::Needle { gap, baseline, .. } => (*baseline, baseline + gap),
            Self::Shifted { base, shift, .. } => {
                let (lo, hi) = base.range();
                (lo - shift, hi)
            }
        }
    }

    /// Per-unit means under `a`; `profile` is computed lazily when needed.
    fn means(&self, model: &ExposureModel, a: &SuperArm, out: &mut [f64]) -> Result<()> {
        match self {
            Self::DenseTable(t) => {
                let row = t
                    .get(a)
                    .ok_or_else(|| Error::MissingOutcome(format!("super arm {:?}", a.0)))?;
                out.copy_from_slice(row);
            }
            Self::ExposureFaithful(t) => {
                let p = model.profile(a)?;
                for (i, (o, &l)) in out.iter_mut().zip(&p.0).enumerate() {
                    *o = t.get(i, l)?;
                }
            }
            Self::Needle {
                gap,
                target,
                baseline,
            } => {
                let v = if a == target { baseline + gap } else { *baseline };
                out.fill(v);
            }
            Self::Shifted {
                base,
                target,
                shift,
            } => {
                base.means(model, a, out)?;
                if model.profile(a)? == *target {
                    out.iter_mut().for_each(|o| *o -= shift);
                }
            }
        }
        Ok(())
    }
}

/// Reward noise around the (drifted) mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    /// Reward in `{0, 1}` with the given mean.
    BoundedBernoulli,
    /// Reward in `{-1, 1}` with the given mean.
    Rademacher,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::Gaussian { sigma: 1.0 }
    }
}

impl NoiseModel {
    fn draw<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        match *self {
            Self::Gaussian { sigma } => {
                if sigma == 0.0 {
                    mean
                } else {
                    mean + sigma * rng.sample::<f64, _>(StandardNormal)
                }
            }
            Self::BoundedBernoulli => f64::from(u8::from(rng.random::<f64>() < mean)),
            Self::Rademacher => {
                if rng.random::<f64>() < (1.0 + mean) / 2.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// Pre-specified additive drift `f_t`, shared by all units and arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DriftSchedule {
    #[default]
    None,
    Constant { value: f64 },
    /// `amplitude * sin(2 pi t / period)`.
    Sinusoidal { amplitude: f64, period: f64 },
    /// `values[t - 1]` at round `t`.
    Table { values: Vec<f64> },
}

impl DriftSchedule {
    pub fn is_none(&self) -> bool {
        matches!(self, Self::None)
    }

    /// Drift at round `t >= 1`.
    pub fn value(&self, t: usize) -> Result<f64> {
        match self {
            Self::None => Ok(0.0),
            Self::Constant { value } => Ok(*value),
            Self::Sinusoidal { amplitude, period } => {
                Ok(amplitude * (2.0 * PI * t as f64 / period).sin())
            }
            Self::Table { values } => t
                .checked_sub(1)
                .and_then(|i| values.get(i))
                .copied()
                .ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "drift table has {} rounds, round {t} requested",
                        values.len()
                    ))
                }),
        }
    }
}

/// A bandit instance over a fixed exposure model.
#[derive(Debug, Clone)]
pub struct Instance {
    model: Arc<ExposureModel>,
    outcome: OutcomeModel,
    noise: NoiseModel,
    drift: DriftSchedule,
    horizon: usize,
}

impl Instance {
    /// Validates dimensions, mean ranges and, for drifting instances, that every
    /// realized reward over rounds `1..=horizon` stays in `[0, 1]`.
    pub fn new(
        model: Arc<ExposureModel>,
        outcome: OutcomeModel,
        noise: NoiseModel,
        drift: DriftSchedule,
        horizon: usize,
    ) -> Result<Self> {
        let n = model.n();
        match &outcome {
            OutcomeModel::DenseTable(t) => {
                let required = model.raw_space_size();
                if required > DEFAULT_BUDGET {
                    return Err(Error::BudgetExceeded {
                        required,
                        budget: DEFAULT_BUDGET,
                    });
                }
                for (a, means) in t {
                    model.check_super_arm(a)?;
                    if means.len() != n {
                        return Err(Error::DimensionMismatch(format!(
                            "{} means for {n} units",
                            means.len()
                        )));
                    }
                }
            }
            OutcomeModel::ExposureFaithful(t) => {
                if t.means.len() != n || t.means.iter().any(|r| r.len() != model.codomain().len()) {
                    return Err(Error::DimensionMismatch("exposure table shape".into()));
                }
            }
            OutcomeModel::Needle { gap, target, .. } => {
                if !(0.0..=0.5).contains(gap) {
                    return Err(Error::InvalidParameter(format!("gap {gap} outside [0, 1/2]")));
                }
                model.check_super_arm(target)?;
            }
            OutcomeModel::Shifted { target, shift, .. } => {
                if !matches!(noise, NoiseModel::Rademacher) {
                    return Err(Error::InvalidParameter(
                        "shifted outcomes are only defined for Rademacher rewards".into(),
                    ));
                }
                if !(0.0..=1.0).contains(shift) {
                    return Err(Error::InvalidParameter(format!("shift {shift} outside [0, 1]")));
                }
                if target.0.len() != n {
                    return Err(Error::DimensionMismatch("shift target length".into()));
                }
            }
        }
        let (lo, hi) = outcome.range();
        let floor = if matches!(outcome, OutcomeModel::Shifted { .. }) { -1.0 } else { 0.0 };
        for v in [lo, hi] {
            if v.is_finite() && !(floor..=1.0).contains(&v) {
                return Err(Error::OutcomeOutOfRange { value: v, lo: floor, hi: 1.0 });
            }
            if v.is_nan() {
                return Err(Error::OutcomeOutOfRange { value: v, lo: floor, hi: 1.0 });
            }
        }
        if let NoiseModel::Gaussian { sigma } = noise {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(Error::InvalidParameter(format!("noise sigma {sigma}")));
            }
        }
        if !drift.is_none() {
            if !matches!(noise, NoiseModel::BoundedBernoulli) {
                return Err(Error::InvalidParameter(
                    "drifting (adversarial) instances require bounded_bernoulli rewards".into(),
                ));
            }
            for t in 1..=horizon {
                let f = drift.value(t)?;
                for mean in [lo + f, hi + f] {
                    if !(0.0..=1.0).contains(&mean) {
                        return Err(Error::RewardRange {
                            round: t,
                            mean,
                            lo: 0.0,
                            hi: 1.0,
                        });
                    }
                }
            }
        }
        Ok(Self {
            model,
            outcome,
            noise,
            drift,
            horizon,
        })
    }

    pub fn model(&self) -> &ExposureModel {
        &self.model
    }

    pub fn shared_model(&self) -> Arc<ExposureModel> {
        Arc::clone(&self.model)
    }

    pub fn outcome(&self) -> &OutcomeModel {
        &self.outcome
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn drift(&self) -> &DriftSchedule {
        &self.drift
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    /// `Y_i(a)`.
    pub fn mean_outcome(&self, i: usize, a: &SuperArm) -> Result<f64> {
        if i >= self.n() {
            return Err(Error::UnitOutOfRange { index: i, n: self.n() });
        }
        self.model.check_super_arm(a)?;
        match &self.outcome {
            OutcomeModel::ExposureFaithful(t) => t.get(i, self.model.apply(i, a)?),
            _ => Ok(self.mean_outcomes(a)?[i]),
        }
    }

    pub fn mean_outcomes(&self, a: &SuperArm) -> Result<Vec<f64>> {
        self.model.check_super_arm(a)?;
        let mut out = vec![0.0; self.n()];
        self.outcome.means(&self.model, a, &mut out)?;
        Ok(out)
    }

    /// Realized per-unit rewards `Y_i(a) + f_t + eta_{i,t}` at round `t >= 1`.
    pub fn pull<R: Rng + ?Sized>(&self, a: &SuperArm, t: usize, rng: &mut R) -> Result<Vec<f64>> {
        if t == 0 {
            return Err(Error::InvalidParameter("rounds are numbered from 1".into()));
        }
        let f = self.drift.value(t)?;
        let mut rewards = self.mean_outcomes(a)?;
        for r in rewards.iter_mut() {
            let mean = *r + f;
            if matches!(self.noise, NoiseModel::BoundedBernoulli) && !(0.0..=1.0).contains(&mean) {
                return Err(Error::RewardRange {
                    round: t,
                    mean,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
            *r = self.noise.draw(mean, rng);
        }
        Ok(rewards)
    }

    /// Sub-Gaussian variance proxy of the unit-averaged reward noise.
    pub fn aggregate_variance_proxy(&self, one_to_one: bool) -> f64 {
        aggregate_variance_proxy(self.n(), one_to_one)
    }
}

/// `1/N` when each exposure arm has a single compatible joint assignment,
/// `1/N + 1/4` otherwise (the extra term covers the assignment resampling).
pub fn aggregate_variance_proxy(n: usize, one_to_one: bool) -> f64 {
    let base = 1.0 / n as f64;
    if one_to_one {
        base
    } else {
        base + 0.25
    }
}

/// Gap of the needle instance that makes `K^N` joint assignments hard to
/// separate within `horizon` rounds: `sqrt((K^N - 1) / (4 T N))`, capped at 1/2.
pub fn hard_gap(k: usize, n: usize, horizon: usize) -> f64 {
    let arms = (k as f64).powi(n as i32);
    ((arms - 1.0) / (4.0 * horizon as f64 * n as f64)).sqrt().min(0.5)
}

/// Needle instance: every unit has mean `gap` on `target` and 0 elsewhere.
pub fn make_needle_instance(
    model: Arc<ExposureModel>,
    gap: f64,
    target: SuperArm,
    noise: NoiseModel,
    horizon: usize,
) -> Result<Instance> {
    Instance::new(
        model,
        OutcomeModel::Needle {
            gap,
            target,
            baseline: 0.0,
        },
        noise,
        DriftSchedule::None,
        horizon,
    )
}

/// Two Rademacher-reward instances that agree everywhere except on joint
/// assignments compatible with `target`, where the second has its means
/// lowered by `alpha`.
pub fn make_rademacher_pair(
    model: Arc<ExposureModel>,
    base: ExposureTable,
    target: ExposureSuperArm,
    alpha: f64,
    horizon: usize,
) -> Result<(Instance, Instance)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside [0, 1]")));
    }
    model.compatible_count(&target, DEFAULT_BUDGET)?;
    for (i, &l) in target.0.iter().enumerate() {
        let shifted = base.get(i, l)? - alpha;
        if shifted < -1.0 {
            return Err(Error::InvalidParameter(format!(
                "unit {i}: mean {shifted} is not a valid Rademacher mean"
            )));
        }
    }
    let first = Instance::new(
        Arc::clone(&model),
        OutcomeModel::ExposureFaithful(base.clone()),
        NoiseModel::Rademacher,
        DriftSchedule::None,
        horizon,
    )?;
    let second = Instance::new(
        model,
        OutcomeModel::Shifted {
            base: Box::new(OutcomeModel::ExposureFaithful(base)),
            target,
            shift: alpha,
        },
        NoiseModel::Rademacher,
        DriftSchedule::None,
        horizon,
    )?;
    Ok((first, second))
}
