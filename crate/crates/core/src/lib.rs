//! QoT estimation toolkit for sliced elastic optical networks.
//!
//! The crate simulates a dynamic flex-grid network (Dijkstra routing,
//! distance-adaptive modulation, first-fit spectrum), labels every
//! established lightpath with an analytic ground-truth BER, and trains two
//! families of small neural classifiers on the result:
//!
//! - a centralized model that predicts one of `K + 1` QoT classes, and
//! - `K` per-slice binary models that predict whether a lightpath meets its
//!   own slice's BER requirement.
//!
//! [`pipelines`] runs both frameworks with cross-validation and produces
//! comparable [`pipelines::EvaluationReport`]s.

pub mod config;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod neuralnet;
pub mod phy;
pub mod pipelines;
pub mod seed;
pub mod sim;
pub mod spectrum;
pub mod topology;
pub mod traffic;

pub use dataset::{Dataset, FeatureVector, Normalizer, Pattern};
pub use error::{Error, Result};
pub use neuralnet::{Mlp, TrainConfig};
pub use phy::{Lightpath, PhyConfig};
pub use pipelines::{EvaluationReport, FeasibilityRule, Framework};
pub use spectrum::{GridConfig, ModulationFormat, ReachTable, SlotRange, SpectrumState};
pub use topology::{load_topology, Path, PathMetrics, Topology};
pub use traffic::{SliceProfile, TrafficConfig};
