//! Monte Carlo counterparts of the analytic quantities.

pub mod estimator;
pub mod paths;
pub mod queue;

pub use estimator::{
    estimate_effective_bandwidth, estimate_effective_bandwidth_with, estimate_effective_capacity,
    estimate_effective_capacity_with, Estimate, EstimatorOptions,
};
pub use queue::{simulate, Discretization, SimConfig, SimReport, TailPoint};
