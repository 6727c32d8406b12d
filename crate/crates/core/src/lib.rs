//! Dynamic vehicle routing: instance model, time-slice simulation, particle
//! swarm solvers, instance features and the solver selector.

#![allow(clippy::needless_range_loop)]

pub mod baseline;
pub mod domain;
pub mod dynamics;
pub mod error;
pub mod features;
pub mod harness;
pub mod instance_io;
pub mod local_search;
pub mod memso;
pub mod pso;
pub mod selector;
pub mod synthetic;
pub mod two_mpso;

pub use domain::{
    check_feasibility, route_length, solution_cost, Bounds, FeasibilityReport, FleetSpec,
    InstanceBuilder, Point, ProblemInstance, Request, RequestId, Solution, Violation,
};
pub use dynamics::{
    advance, repair, run_day, CommitmentState, DayOutcome, DvrpSolver, FrozenSnapshot, SliceClock,
    TraceRow, VehicleCommitment,
};
pub use error::{DvrpError, Result};
pub use features::{extract_features, FeatureOptions, FeatureVector, MomentMode};
pub use harness::{
    batch_solve, emit_report, loocv_experiment, welch_t_test, RunRecord, SuiteConfig,
};
pub use memso::{MemsoConfig, MemsoSolver};
pub use pso::SwarmConfig;
pub use selector::{choose_solver, stepwise_aic, Algorithm, SelectorModel, TrainingRow};
pub use two_mpso::{TwoMpsoConfig, TwoMpsoSolver};
