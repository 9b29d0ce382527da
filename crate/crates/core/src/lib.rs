//! Planning and inverse planning for dual-system agents in finite MDPs.
//!
//! A dual-system agent has an impulsive system 1 with reward `r1` and discount
//! `gamma1`, and a deliberative system 2 with `r2` and `gamma2`. System 2 acts,
//! but pays `psi` per unit of system-1 value it overrides. [`planner`] computes
//! the resulting compromise policies, [`behavior`] samples Boltzmann
//! trajectories from them, and [`irl`] recovers rewards from trajectories.

pub mod behavior;
pub mod error;
pub mod irl;
pub mod mdp;
pub mod planner;
pub mod worlds;

pub use behavior::{generate_dataset, softmax_policy, Dataset, SamplingConfig, Trajectory};
pub use error::{Error, Result};
pub use irl::{fit_irl, log_likelihood, DeConfig, IrlEstimate, ModelKind, ModelSpec, RewardBasis};
pub use mdp::{Mdp, Policy, QTable, RewardPair, RewardTable, SolverConfig, ValueTable};
pub use planner::{plan, CompromisePlan, DualParams, PlanKind};
pub use worlds::{bundled_world, WorldBundle};
