//! Decision engine for sharing VNF instances inside a single point of presence.
//!
//! Given a [`Scenario`] (VMs, VNFs, services with per-VNF arrival rates and
//! delay targets), services are admitted one at a time. Each admission builds
//! a bipartite VNF/VM candidate graph, picks a minimum-cost assignment with the
//! Hungarian method, solves a continuous scaling problem over VM capabilities
//! and higher-priority arrival rates, realizes priorities for the configured
//! scheme and, when the scaling problem is infeasible, prunes the candidate
//! graph using an irreducible infeasible subset of its constraints.
//!
//! The queueing formulas and the assignment solver are generic over the scalar
//! type; the aliases at the crate root pin the common instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN on purpose

pub mod assignment;
pub mod convex;
pub mod error;
pub mod model;
pub mod oracle;
pub mod pruning;
pub mod queueing;
pub mod report;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    AveragingFactor, DeploymentState, PriorityScheme, PrioritySpec, Scenario, Service, ServiceIdx,
    Usage, Vm, VmIdx, Vnf, VnfIdx,
};
pub use pruning::{admit, deploy_all, deploy_sequence, AdmissionResult, AdmissionStatus, Deployment, Strategy};
pub use scalar::Scalar;

/// Scalar used by the scenario model, the scaling solver and the simulator.
pub type Real = f64;

pub type QueueLoadF64 = queueing::QueueLoad<f64>;
pub type QueueLoadF32 = queueing::QueueLoad<f32>;

/// Dense cost matrix with missing edges, as consumed by [`assignment::hungarian::solve`].
pub type CostMatrix<C> = Vec<Vec<Option<C>>>;
pub type CostMatrixF64 = CostMatrix<f64>;
pub type CostMatrixI64 = CostMatrix<i64>;
