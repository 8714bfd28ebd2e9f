//! Lion-family optimizers with a deterministic multi-node simulator.
//!
//! * [`vecops`]: dense vectors, `sign` and the unbiased randomized sign.
//! * [`estimators`]: plain momentum and the STORM recursion.
//! * [`problems`]: synthetic finite-sum problems with certified constants.
//! * [`lion`]: centralized Lion and Lion with variance reduction.
//! * [`distributed`]: parameter-server simulation, plain and 1-bit compressed.
//! * [`schedules`]: theorem-driven hyperparameters with constraint checks.
//! * [`harness`]: run records, sweeps, rate fits and paired comparisons.
//! * [`cli`]: config files, CSV/JSON output and the `run`/`verify`/`rates` commands.

pub mod cli;
pub mod distributed;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod lion;
pub mod problems;
pub mod rng;
pub mod schedules;
pub mod vecops;

pub use distributed::{cluster_run, ClusterVariant, CommLedger, CompressorId};
pub use error::{LionError, Result};
pub use harness::{
    compare_variants, fit_rate, run_variant, sweep, RateFit, RunRecord, SweepSpec, Variant,
};
pub use lion::{lion_run, CentralVariant, Hyper};
pub use problems::{make_logreg_problem, Problem, ProblemConfig};
pub use schedules::{schedule_for, Schedule, TheoremId};
pub use vecops::{sign, unbiased_sign, SignVector, Vector};
