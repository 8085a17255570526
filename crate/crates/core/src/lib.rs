//! Dyna-style planning with linear function approximation.
//!
//! The crate is organised bottom-up:
//!
//! - [`features`]: sparse feature vectors, Boyan interpolation features and
//!   hashed tile coding.
//! - [`envs`]: the Boyan chain and Mountain Car benchmarks, plus the fixed
//!   evaluation policy.
//! - [`model`]: the learned linear world model `(F, b)` with dual row/column
//!   sparse storage, per-action model sets and batch least-squares fitting.
//! - [`planners`]: TD(0) and residual-gradient updates, the sweep queue and
//!   the four Dyna planners (random sampling, PWMA, MG, and MG control).
//! - [`analysis`]: closed-form oracles (fixed point, LSTD, numerical radius)
//!   and the two loss measures used by the experiments.
//! - [`harness`]: configuration, step-size schedule, seeded multi-run
//!   orchestration, aggregation and CSV output.
//! - [`verify`]: a self-check suite that exercises the analysis oracles.

pub mod analysis;
pub mod envs;
pub mod error;
pub mod features;
pub mod harness;
pub mod model;
pub mod planners;
pub mod verify;

pub use error::{Error, Result};
pub use features::{SparseVec, TileCoder, TileCoderConfig};
pub use model::{ActionModelSet, LinearModel, Transition, TransitionDataset};
pub use planners::{
    ControlAgent, DynaAgent, PlannerConfig, PlanningMethod, SampleDistribution, SweepQueue, Theta,
    UpdateRule,
};
