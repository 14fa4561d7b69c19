//! Simulation of learning and forgetting with multi-component knowledge
//! models.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: state, parameters and right-hand sides of the ODE systems;
//! * [`integrator`]: fixed-step RK4/Euler integration;
//! * [`solver`]: logistic task-solving probability and seeded attempts;
//! * [`scenario`]: lesson schedules, the task-sequence teacher loop and the
//!   school career;
//! * [`config`], [`export`], [`report`]: batch configuration, trace files and
//!   summaries used by the `simulate` command.

pub mod config;
pub mod error;
pub mod export;
pub mod integrator;
pub mod model;
pub mod report;
pub mod scenario;
pub mod solver;
pub mod trace;

pub use error::{Error, Result};
pub use integrator::{integrate, step, Dynamics, Integrator, IntegratorConfig, Method};
pub use model::{
    derivatives_four, derivatives_general, derivatives_two, gamma_from_tau, strength_pf, strength_pr,
    total_knowledge, KnowledgeState, Model, ModelKind, ModelParams, StrengthKind, TeachingControl,
};
pub use scenario::{
    requirement_at, run_lessons, run_school_career, run_task_sequence, ConsolidationDynamics, ConstantDynamics,
    RequirementSchedule,
    RequirementSegment, SchoolCareerConfig, TaskSet,
};
pub use solver::{attempt, solve_probability, AttemptRecord, Outcome};
pub use trace::{Event, Sample, SimulationTrace, TraceMetadata};
