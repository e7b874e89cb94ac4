//! Training-set selection from a pool of hidden samples.
//!
//! Each hidden sample exposes only its metadata until it is explicitly
//! revealed. Metadata columns partition the pool into clusters, every cluster
//! is a bandit arm with a Beta posterior, and Thompson sampling decides which
//! cluster to draw the next sample from. A reveal is rewarded when it raises
//! the validation r² of a ridge regression refit on everything revealed so far.
//!
//! Module map:
//!
//! - [`pool`]: hidden samples, the reveal contract, CSV ingestion and the
//!   synthetic generator.
//! - [`partition`]: metadata binning into the merged cluster set.
//! - [`bandit`]: Beta sampling, arm selection and posterior updates.
//! - [`learner`]: standardized ridge regression and r².
//! - [`engine`]: the selection loop and the baseline policies.
//! - [`harness`]: data splits, repeated experiments, curve aggregation and a
//!   bandit-only regret benchmark.

pub mod bandit;
pub mod engine;
pub mod harness;
pub mod learner;
pub mod partition;
pub mod pool;
pub mod rng;

pub use bandit::{ArmState, Reward};
pub use engine::{EngineConfig, EvalSets, RewardBaseline, RunLedger, RunOutcome};
pub use harness::{CurveBundle, ExperimentConfig, Policy, SplitSpec};
pub use learner::{Dataset, RidgeModel};
pub use partition::{Binning, Cluster, ClusterSet, PartitionSpec};
pub use pool::{HiddenSample, MetaColumn, MetaKind, SourcePool, SyntheticConfig};
pub use rng::SeedStreams;
