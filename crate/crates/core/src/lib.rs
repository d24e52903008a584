//! Deterministic desk-scale simulator of a battery-powered fog fleet with a
//! regression-driven resource-allocation layer.
//!
//! The crate is organized around the pipeline of a run: [`trace`] replays
//! CPU-utilization series, [`energy`] turns utilization into power and
//! battery drain, [`regression`] fits the execution-time and energy
//! predictors over a telemetry window, [`alloc`] turns predictions into
//! placement decisions, [`sim`] drives the event loop, and [`metrics`]
//! folds the logs into a run report.

pub mod alloc;
pub mod domain;
pub mod energy;
pub mod metrics;
pub mod regression;
pub mod sim;
pub mod trace;

pub use alloc::{AllocParams, AllocationDecision, Candidate, DeviceScore, ModelSet, Policy};
pub use domain::{ApplicationRequest, FogDevice, PowerSource, Requirement, Task, TelemetryRecord};
pub use energy::PowerModel;
pub use metrics::{CostRates, RunReport, SlaTerms};
pub use regression::{RegressionModel, Schema, TrainingWindow};
pub use sim::{RunArtifacts, Scenario, SimParams};
pub use trace::UtilizationTrace;
