//! Offline/online orchestration around the solver core: run configuration,
//! parameter sampling, artifact files, result tables and exports.

pub mod config;
pub mod io;
pub mod pipeline;
pub mod rng;

pub use config::{Experiment, RunConfig, SolverChoice};
pub use pipeline::{
    convergence, offline, online, report, OfflineResult, OnlineResult, ReportRow, SampleRecord,
};
