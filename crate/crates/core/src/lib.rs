//! Simulation and verification toolkit for local gradient descent on
//! heterogeneous data.
//!
//! `M` simulated workers each own a smooth convex objective `f_m` and jointly
//! minimize `f = (1/M) Σ f_m`. Workers take local gradient steps and average
//! their models at synchronization times. The crate runs that method with
//! full instrumentation ([`engine`]), checks its convergence bounds along
//! real trajectories ([`theory`]), and plans communication budgets.

pub mod engine;
pub mod error;
pub mod libsvm;
pub mod linalg;
pub mod objectives;
pub mod sweep;
pub mod synthetic;
pub mod theory;

pub use engine::{run_gd, run_local_gd, run_local_gd_with, EngineOptions, SyncSchedule, TrajectoryRecord};
pub use error::{Error, Result};
pub use libsvm::{parse_libsvm, partition_by_index, read_libsvm, shards_to_suite, PartitionSpec, SparseDataset};
pub use objectives::{estimate_smoothness, LocalFunction, ObjectiveSuite, ReferenceSolution};
pub use theory::{
    check_lemma1, check_lemma2, check_lemma3, check_lemma4, check_theorem1, corollary_bound, plan_communication,
    theorem1_bound, CheckReport, PlannerResult, Regime,
};
