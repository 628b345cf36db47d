//! Declarative experiment description and its validation.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::environment::{hard_gap, DriftSchedule, ExposureTable, ExposureTableEntry, Instance, NoiseModel, OutcomeModel};
use crate::error::{Error, Result};
use crate::exposure::{CompatibleSampler, ExposureArmSpace, ExposureMapping, ExposureModel, Label, SuperArm, DEFAULT_BUDGET};
use crate::network::{AdjacencyMatrix, Clustering, ClusteringFile, NetworkFile};
use crate::oracle::{OracleMethod, OracleReport};
use crate::policy::{PolicyName, PolicySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingSpec {
    #[serde(flatten)]
    pub mapping: ExposureMapping,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restrict_labels: Option<Vec<Label>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedGap {
    /// Gap at which the needle is hard to find within the horizon.
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GapSpec {
    Value(f64),
    Named(NamedGap),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseRow {
    pub assignment: Vec<usize>,
    pub means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OutcomeSpec {
    Needle {
        gap: GapSpec,
        target: Vec<usize>,
        #[serde(default)]
        baseline: f64,
    },
    ExposureFaithful {
        table: Vec<ExposureTableEntry>,
    },
    DenseTable {
        rows: Vec<DenseRow>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub outcome: OutcomeSpec,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub drift: DriftSchedule,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// Every `T` with every `T1`.
    #[default]
    Product,
    /// `T[i]` paired with `T1[i]`.
    Zip,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<usize>>,
    #[serde(rename = "T1", default, skip_serializing_if = "Option::is_none")]
    pub explore_rounds: Option<Vec<usize>>,
    #[serde(default)]
    pub mode: GridMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network_file: Option<PathBuf>,
    /// Number of units when no network is given (no edges).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clustering: Option<ClusteringFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clustering_file: Option<PathBuf>,
    pub k: usize,
    pub mapping: MappingSpec,
    pub instance: InstanceSpec,
    pub policy: PolicySpec,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub oracle: OracleMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Directory that relative file references are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn one() -> usize {
    1
}

/// A `(T, T1)` combination to run; `T1 = None` means the policy default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "T1")]
    pub explore_rounds: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        serde_json::from_str(text).context("parsing experiment config")
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config = Self::from_json(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        Ok(config)
    }

    pub fn budget(&self) -> u128 {
        self.budget.map_or(DEFAULT_BUDGET, u128::from)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn network(&self) -> anyhow::Result<AdjacencyMatrix> {
        let file = match (&self.network, &self.network_file, self.n) {
            (Some(net), None, _) => net.clone(),
            (None, Some(path), _) => {
                let path = self.resolve(path);
                let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            (None, None, Some(n)) => NetworkFile { n, edges: Vec::new() },
            (Some(_), Some(_), _) => bail!("give either `network` or `network_file`, not both"),
            (None, None, None) => bail!("config needs `network`, `network_file` or `n`"),
        };
        Ok(AdjacencyMatrix::try_from(file)?)
    }

    /// Singleton clusters when no clustering is given.
    pub fn clustering(&self, n: usize) -> anyhow::Result<Clustering> {
        let file = match (&self.clustering, &self.clustering_file) {
            (Some(c), None) => c.clone(),
            (None, Some(path)) => {
                let path = self.resolve(path);
                let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            (None, None) => return Ok(Clustering::singletons(n)?),
            (Some(_), Some(_)) => bail!("give either `clustering` or `clustering_file`, not both"),
        };
        Ok(Clustering::try_from(file)?)
    }

    pub fn exposure_model(&self) -> anyhow::Result<Arc<ExposureModel>> {
        let network = self.network()?;
        let clustering = self.clustering(network.n())?;
        Ok(Arc::new(ExposureModel::new(
            self.mapping.mapping,
            self.k,
            network,
            clustering,
        )?))
    }

    pub fn space(&self, model: &ExposureModel) -> Result<ExposureArmSpace> {
        model.enumerate_space(self.budget(), self.mapping.restrict_labels.as_deref())
    }

    pub fn instance(&self, model: Arc<ExposureModel>, horizon: usize) -> Result<Instance> {
        let outcome = match &self.instance.outcome {
            OutcomeSpec::Needle { gap, target, baseline } => OutcomeModel::Needle {
                gap: match gap {
                    GapSpec::Value(g) => *g,
                    GapSpec::Named(NamedGap::Hard) => hard_gap(model.k(), model.n(), horizon),
                },
                target: SuperArm(target.clone()),
                baseline: *baseline,
            },
            OutcomeSpec::ExposureFaithful { table } => {
                OutcomeModel::ExposureFaithful(ExposureTable::from_entries(&model, table)?)
            }
            OutcomeSpec::DenseTable { rows } => {
                let mut map = HashMap::with_capacity(rows.len());
                for row in rows {
                    map.insert(SuperArm(row.assignment.clone()), row.means.clone());
                }
                OutcomeModel::DenseTable(map)
            }
        };
        Instance::new(
            model,
            outcome,
            self.instance.noise,
            self.instance.drift.clone(),
            horizon,
        )
    }

    /// Grid points in run order; a config without a grid has one point.
    pub fn grid_points(&self) -> anyhow::Result<Vec<GridPoint>> {
        let grid = self.grid.clone().unwrap_or_default();
        let horizons = grid.horizons.unwrap_or_else(|| vec![self.policy.horizon]);
        let explore: Vec<Option<usize>> = match grid.explore_rounds {
            Some(v) => v.into_iter().map(Some).collect(),
            None => vec![self.policy.explore_rounds],
        };
        if horizons.is_empty() || explore.is_empty() {
            bail!("grid axes must not be empty");
        }
        let points = match grid.mode {
            GridMode::Product => horizons
                .iter()
                .flat_map(|&horizon| {
                    explore.iter().map(move |&explore_rounds| GridPoint {
                        horizon,
                        explore_rounds,
                    })
                })
                .collect(),
            GridMode::Zip => {
                if horizons.len() != explore.len() {
                    bail!("zipped grid axes differ in length: {} vs {}", horizons.len(), explore.len());
                }
                horizons
                    .iter()
                    .zip(&explore)
                    .map(|(&horizon, &explore_rounds)| GridPoint {
                        horizon,
                        explore_rounds,
                    })
                    .collect()
            }
        };
        Ok(points)
    }

    /// Policy spec specialized to a grid point.
    pub fn policy_at(&self, point: GridPoint) -> PolicySpec {
        PolicySpec {
            horizon: point.horizon,
            explore_rounds: point.explore_rounds,
            ..self.policy.clone()
        }
    }

    /// Short stable hash of the config and grid point.
    pub fn fingerprint(&self, point: GridPoint) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(self).unwrap_or_default());
        hasher.update(serde_json::to_vec(&point).unwrap_or_default());
        hex::encode(&hasher.finalize()[..8])
    }
}

/// Everything a replication reads, built once per grid point.
#[derive(Debug, Clone)]
pub struct Setup {
    pub instance: Instance,
    pub space: ExposureArmSpace,
    pub sampler: CompatibleSampler,
    pub report: OracleReport,
}

impl Setup {
    pub fn build(config: &ExperimentConfig, horizon: usize) -> anyhow::Result<Self> {
        let model = config.exposure_model()?;
        let space = config.space(&model)?;
        let sampler = CompatibleSampler::new(&model, &space, config.budget())?;
        let instance = config.instance(model, horizon)?;
        let report = OracleReport::compute(&instance, &space, &sampler, config.oracle, config.budget())?;
        Ok(Self {
            instance,
            space,
            sampler,
            report,
        })
    }
}

/// Horizon needed by the adversarial guarantee:
/// `(2m + 1)^2 ln(t m^2) / (2 (e - 2) m)` for `m` exposure arms.
pub fn adversarial_threshold(t: usize, num_arms: usize) -> f64 {
    let m = num_arms as f64;
    (2.0 * m + 1.0).powi(2) * (t as f64 * m * m).ln() / (2.0 * (std::f64::consts::E - 2.0) * m)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Hard errors for invalid spaces and round budgets; warnings when an
/// adversarial run is too short for its guarantee to apply.
pub fn validate(config: &ExperimentConfig) -> anyhow::Result<ValidationReport> {
    let mut report = ValidationReport::default();
    let points = config.grid_points()?;
    if config.replications == 0 {
        report.errors.push("replications must be at least 1".into());
    }
    let model = match config.exposure_model() {
        Ok(m) => m,
        Err(e) => {
            report.errors.push(format!("{e:#}"));
            return Ok(report);
        }
    };
    let space = match config.space(&model) {
        Ok(s) => s,
        Err(e) => {
            report.errors.push(match e {
                Error::TooFewArms(m) => format!("exposure arm space has {m} arm(s); at least 2 are required"),
                other => other.to_string(),
            });
            return Ok(report);
        }
    };
    let m = space.len();
    for point in points {
        let spec = config.policy_at(point);
        let t = spec.horizon;
        let t1 = spec.resolved_explore_rounds(m);
        let at = format!("T={t}, T1={t1}");
        if m > t {
            report.errors.push(format!("{at}: |U_E| = {m} exceeds the horizon (need 2 <= |U_E| <= T)"));
        }
        if t1 > t {
            report.errors.push(format!("{at}: T1 exceeds T"));
        }
        match spec.name {
            PolicyName::UcbTsn if t1 < m => report
                .errors
                .push(format!("{at}: ucb_tsn needs T1 >= |U_E| = {m}")),
            PolicyName::Exp3Tsn if t1 == 0 => report.errors.push(format!("{at}: exp3_tsn needs T1 >= 1")),
            _ => {}
        }
        if matches!(spec.name, PolicyName::Exp3Tsn | PolicyName::Exp3) {
            let need = adversarial_threshold(t, m);
            if (t as f64) < need {
                report
                    .warnings
                    .push(format!("{at}: T is below the adversarial threshold {need:.1}"));
            }
            if spec.name == PolicyName::Exp3Tsn {
                let need1 = adversarial_threshold(t1.max(1), m);
                if (t1 as f64) < need1 {
                    report
                        .warnings
                        .push(format!("{at}: T1 is below the adversarial threshold {need1:.1}"));
                }
            }
        }
        if let Err(e) = config.instance(Arc::clone(&model), t) {
            report.errors.push(format!("{at}: {e}"));
        }
    }
    Ok(report)
}
