//! Adaptive experimental design under network interference.
//!
//! Treatments are assigned to units of a network; outcomes depend on a unit's
//! own treatment and on its neighbours only through an exposure mapping. The
//! crate enumerates the induced exposure arm space, simulates bandit
//! environments over it, runs two-phase policies that trade regret against
//! ATE estimation error, and drives replicated experiments.

pub mod environment;
pub mod error;
pub mod estimators;
pub mod exposure;
pub mod harness;
pub mod metrics;
pub mod network;
pub mod oracle;
pub mod policy;

pub use environment::{DriftSchedule, Instance, NoiseModel, OutcomeModel};
pub use error::{Error, Result};
pub use estimators::{estimation_error, AteEstimate};
pub use harness::{ExperimentConfig, RunOptions};
pub use metrics::{AggregateResult, RunTrace};
pub use exposure::{ExposureArmSpace, ExposureMapping, ExposureModel, ExposureSuperArm, Label, SuperArm};
pub use network::{AdjacencyMatrix, Clustering};
pub use oracle::{OracleMethod, OracleReport};
pub use policy::{Policy, PolicyName, PolicySpec};
