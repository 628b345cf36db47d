//! Sequential policies over the exposure arm space.
//!
//! Both two-phase policies explore uniformly for `T1` rounds, freeze an ATE
//! estimate, then switch to a regret-minimizing rule: upper confidence
//! bounds for stochastic rewards, exponential weights over importance-weighted
//! scores for drifting rewards.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{ipw_ate, mean_diff_ate, AteEstimate};

/// Default exploration constant in the UCB bonus.
pub const DEFAULT_BONUS_C: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    UcbTsn,
    Exp3Tsn,
    Uniform,
    Ucb,
    Exp3,
}

impl PolicyName {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::UcbTsn => "ucb_tsn",
            Self::Exp3Tsn => "exp3_tsn",
            Self::Uniform => "uniform",
            Self::Ucb => "ucb",
            Self::Exp3 => "exp3",
        }
    }
}

/// Policy section of an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub name: PolicyName,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "T1", default, skip_serializing_if = "Option::is_none")]
    pub explore_rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bonus_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// Smallest integer `x` with `x^2 >= value`.
pub fn ceil_sqrt(value: u128) -> u128 {
    if value == 0 {
        return 0;
    }
    let mut x = (value as f64).sqrt() as u128;
    while x * x < value {
        x += 1;
    }
    while x > 0 && (x - 1) * (x - 1) >= value {
        x -= 1;
    }
    x
}

/// Default exploration length `ceil(sqrt(|U_E| T))`, capped at `T`.
pub fn default_explore_rounds(num_arms: usize, horizon: usize) -> usize {
    (ceil_sqrt(num_arms as u128 * horizon as u128) as usize).min(horizon)
}

/// Default learning rate `sqrt(ln|U_E| / (|U_E| T))`.
pub fn default_epsilon(num_arms: usize, horizon: usize) -> f64 {
    ((num_arms as f64).ln() / (num_arms as f64 * horizon as f64)).sqrt()
}

impl PolicySpec {
    /// Exploration length actually used for a space of `num_arms` arms.
    pub fn resolved_explore_rounds(&self, num_arms: usize) -> usize {
        match self.name {
            PolicyName::Ucb | PolicyName::Exp3 => 0,
            PolicyName::Uniform => self.horizon,
            PolicyName::UcbTsn | PolicyName::Exp3Tsn => self
                .explore_rounds
                .unwrap_or_else(|| default_explore_rounds(num_arms, self.horizon)),
        }
    }
}

/// Two-phase UCB policy. With `explore_rounds == 0` it is plain UCB (each
/// arm is pulled once before the index rule applies) and the estimate is
/// frozen at the horizon instead.
#[derive(Debug, Clone)]
pub struct UcbTsnState {
    round: usize,
    explore_rounds: usize,
    horizon: usize,
    delta: f64,
    bonus_c: f64,
    counts: Vec<u64>,
    means: Vec<f64>,
    cursor: usize,
    snapshot: Option<AteEstimate>,
}

impl UcbTsnState {
    pub fn new(num_arms: usize, horizon: usize, explore_rounds: usize, delta: f64, bonus_c: f64) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::InvalidParameter("policy needs at least one arm".into()));
        }
        if explore_rounds > horizon {
            return Err(Error::InvalidParameter(format!("T1 = {explore_rounds} exceeds T = {horizon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta {delta} outside (0, 1)")));
        }
        if !(bonus_c.is_finite() && bonus_c >= 0.0) {
            return Err(Error::InvalidParameter(format!("bonus constant {bonus_c}")));
        }
        Ok(Self {
            round: 0,
            explore_rounds,
            horizon,
            delta,
            bonus_c,
            counts: vec![0; num_arms],
            means: vec![0.0; num_arms],
            cursor: 0,
            snapshot: None,
        })
    }

    /// `delta = 1/T^2`, `bonus_c = 9`.
    pub fn with_defaults(num_arms: usize, horizon: usize, explore_rounds: usize) -> Result<Self> {
        let t = horizon.max(2) as f64;
        Self::new(num_arms, horizon, explore_rounds, 1.0 / (t * t), DEFAULT_BONUS_C)
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn snapshot(&self) -> Option<&AteEstimate> {
        self.snapshot.as_ref()
    }

    pub fn ucb_value(&self, arm: usize) -> Result<f64> {
        let n = self.counts[arm];
        if n == 0 {
            return Err(Error::UncoveredArm(arm));
        }
        Ok(self.means[arm] + (self.bonus_c * (1.0 / self.delta).ln() / n as f64).sqrt())
    }

    pub fn choose(&self) -> Result<usize> {
        let next = self.round + 1;
        if next > self.horizon {
            return Err(Error::PastHorizon {
                round: next,
                horizon: self.horizon,
            });
        }
        if next <= self.explore_rounds {
            return Ok(self.cursor);
        }
        if let Some(arm) = self.counts.iter().position(|&c| c == 0) {
            return Ok(arm);
        }
        let mut best = 0;
        let mut best_value = self.ucb_value(0)?;
        for arm in 1..self.counts.len() {
            let v = self.ucb_value(arm)?;
            if v > best_value {
                best = arm;
                best_value = v;
            }
        }
        Ok(best)
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if !reward.is_finite() {
            return Err(Error::InvalidInput(format!("reward {reward}")));
        }
        if arm >= self.counts.len() {
            return Err(Error::ArmOutOfRange {
                arm,
                k: self.counts.len(),
            });
        }
        self.round += 1;
        let previous = self.counts[arm];
        self.counts[arm] += 1;
        self.means[arm] = (self.means[arm] * previous as f64 + reward) / self.counts[arm] as f64;
        if self.round <= self.explore_rounds {
            self.cursor = (self.cursor + 1) % self.counts.len();
        }
        let freeze_at = if self.explore_rounds == 0 { self.horizon } else { self.explore_rounds };
        if self.round == freeze_at {
            self.snapshot = Some(mean_diff_ate(&self.means, &self.counts, self.round)?);
        }
        Ok(())
    }
}

/// Two-phase EXP3 policy with importance-weighted reward scores. With
/// `explore_rounds == 0` it is plain EXP3 and the IPW estimate is frozen at
/// the horizon.
#[derive(Debug, Clone)]
pub struct Exp3TsnState {
    round: usize,
    explore_rounds: usize,
    horizon: usize,
    epsilon: f64,
    scores: Vec<f64>,
    probs: Vec<f64>,
    snapshot: Option<AteEstimate>,
}

impl Exp3TsnState {
    pub fn new(num_arms: usize, horizon: usize, explore_rounds: usize, epsilon: f64) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::InvalidParameter("policy needs at least one arm".into()));
        }
        if explore_rounds > horizon {
            return Err(Error::InvalidParameter(format!("T1 = {explore_rounds} exceeds T = {horizon}")));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("learning rate {epsilon}")));
        }
        Ok(Self {
            round: 0,
            explore_rounds,
            horizon,
            epsilon,
            scores: vec![0.0; num_arms],
            probs: vec![1.0 / num_arms as f64; num_arms],
            snapshot: None,
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Sampling distribution used for the most recent choice.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn snapshot(&self) -> Option<&AteEstimate> {
        self.snapshot.as_ref()
    }

    /// Distribution for the next round.
    pub fn distribution(&self) -> Vec<f64> {
        let mut probs = vec![0.0; self.scores.len()];
        self.fill_distribution(&mut probs);
        probs
    }

    fn fill_distribution(&self, probs: &mut [f64]) {
        let k = self.scores.len() as f64;
        if self.round < self.explore_rounds {
            probs.fill(1.0 / k);
            return;
        }
        let mut top = f64::NEG_INFINITY;
        for &s in &self.scores {
            top = top.max(self.epsilon * s);
        }
        let mut total = 0.0;
        for (p, &s) in probs.iter_mut().zip(&self.scores) {
            *p = (self.epsilon * s - top).exp();
            total += *p;
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
    }

    pub fn choose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        let next = self.round + 1;
        if next > self.horizon {
            return Err(Error::PastHorizon {
                round: next,
                horizon: self.horizon,
            });
        }
        let mut probs = std::mem::take(&mut self.probs);
        self.fill_distribution(&mut probs);
        self.probs = probs;
        Ok(sample_index(&self.probs, rng))
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::RewardOutOfUnit(reward));
        }
        ipw_step(&mut self.scores, &self.probs, arm, reward)?;
        self.round += 1;
        if self.explore_rounds > 0 && self.round == self.explore_rounds {
            self.snapshot = Some(ipw_ate(&self.scores, self.explore_rounds)?);
            self.scores.iter_mut().for_each(|s| *s = 0.0);
        } else if self.explore_rounds == 0 && self.round == self.horizon {
            self.snapshot = Some(ipw_ate(&self.scores, self.horizon)?);
        }
        Ok(())
    }
}

/// Every arm gains 1; the pulled arm additionally loses its importance-weighted loss.
fn ipw_step(scores: &mut [f64], probs: &[f64], arm: usize, reward: f64) -> Result<()> {
    if arm >= scores.len() {
        return Err(Error::ArmOutOfRange { arm, k: scores.len() });
    }
    scores.iter_mut().for_each(|s| *s += 1.0);
    scores[arm] -= (1.0 - reward) / probs[arm];
    Ok(())
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let mut u = rng.random::<f64>();
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    // rounding: fall back to the last arm with positive mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Uniform random choice every round; the estimate is the IPW estimate over
/// the whole horizon, which is defined for any reward range.
#[derive(Debug, Clone)]
pub struct UniformState {
    round: usize,
    horizon: usize,
    scores: Vec<f64>,
    probs: Vec<f64>,
    snapshot: Option<AteEstimate>,
}

impl UniformState {
    pub fn new(num_arms: usize, horizon: usize) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::InvalidParameter("policy needs at least one arm".into()));
        }
        Ok(Self {
            round: 0,
            horizon,
            scores: vec![0.0; num_arms],
            probs: vec![1.0 / num_arms as f64; num_arms],
            snapshot: None,
        })
    }

    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if self.round >= self.horizon {
            return Err(Error::PastHorizon {
                round: self.round + 1,
                horizon: self.horizon,
            });
        }
        Ok(rng.random_range(0..self.scores.len()))
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if !reward.is_finite() {
            return Err(Error::InvalidInput(format!("reward {reward}")));
        }
        ipw_step(&mut self.scores, &self.probs, arm, reward)?;
        self.round += 1;
        if self.round == self.horizon {
            self.snapshot = Some(ipw_ate(&self.scores, self.horizon)?);
        }
        Ok(())
    }
}

/// A policy instance owned by one replication.
#[derive(Debug, Clone)]
pub enum Policy {
    UcbTsn(UcbTsnState),
    Exp3Tsn(Exp3TsnState),
    Uniform(UniformState),
}

impl Policy {
    pub fn from_spec(spec: &PolicySpec, num_arms: usize) -> Result<Self> {
        let horizon = spec.horizon;
        let explore = spec.resolved_explore_rounds(num_arms);
        match spec.name {
            PolicyName::UcbTsn | PolicyName::Ucb => {
                let t = horizon.max(2) as f64;
                let delta = spec.delta.unwrap_or(1.0 / (t * t));
                let bonus_c = spec.bonus_c.unwrap_or(DEFAULT_BONUS_C);
                Ok(Self::UcbTsn(UcbTsnState::new(num_arms, horizon, explore, delta, bonus_c)?))
            }
            PolicyName::Exp3Tsn | PolicyName::Exp3 => {
                let epsilon = spec.epsilon.unwrap_or_else(|| default_epsilon(num_arms, horizon));
                Ok(Self::Exp3Tsn(Exp3TsnState::new(num_arms, horizon, explore, epsilon)?))
            }
            PolicyName::Uniform => Ok(Self::Uniform(UniformState::new(num_arms, horizon)?)),
        }
    }

    pub fn choose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        match self {
            Self::UcbTsn(s) => s.choose(),
            Self::Exp3Tsn(s) => s.choose(rng),
            Self::Uniform(s) => s.choose(rng),
        }
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        match self {
            Self::UcbTsn(s) => s.update(arm, reward),
            Self::Exp3Tsn(s) => s.update(arm, reward),
            Self::Uniform(s) => s.update(arm, reward),
        }
    }

    pub fn estimate(&self) -> Option<&AteEstimate> {
        match self {
            Self::UcbTsn(s) => s.snapshot(),
            Self::Exp3Tsn(s) => s.snapshot(),
            Self::Uniform(s) => s.snapshot.as_ref(),
        }
    }
}
