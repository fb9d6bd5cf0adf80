//! Best-arm identification with a fixed confidence.
//!
//! Exponential-family bandit models, the optimal-allocation solver, GLLR
//! stopping, the TCB and ITCB samplers with top-two baselines, and a seeded
//! Monte Carlo harness.

pub mod complexity;
pub mod error;
pub mod gllr;
pub mod harness;
pub mod instances;
pub mod model;
pub mod oracle;
pub mod samplers;

pub use complexity::{optimal_allocation, Allocation, ComplexitySolution};
pub use error::{BaiError, Result};
pub use gllr::ExperimentState;
pub use harness::{run_trials, summarize, Summary, SweepRow, TraceRecord, TrialResult};
pub use model::{BanditInstance, DistributionFamily};
pub use samplers::{BaiRun, SamplerConfig, SamplerKind, StepDecision};
