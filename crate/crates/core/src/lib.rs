//! Causal analysis for cyber-physical systems.
//!
//! Given a hybrid-system model, a failing trajectory and a safety property,
//! this crate searches for actual causes: slices of endogenous variable
//! trajectories whose counterfactual replacement flips the property. The
//! pipeline is built from small layers:
//!
//! * [`trajectory`]: uniformly sampled trajectories, intervals and slices
//! * [`event_logic`]: the property grammar (interval-tagged comparisons)
//! * [`equations`]: arithmetic expressions and guards for system equations
//! * [`simulator`]: fixed-step simulation of system models, builtin examples
//! * [`causal_model`]: signatures, trajectory stores, model updates
//! * [`hp_discrete`]: exhaustive discrete-model cause checking (oracle)
//! * [`cause_checker`]: the three actual-cause conditions over slices
//! * [`search_engine`]: granularity-refining genetic candidate search
//! * [`report`]: analysis report schema for the CLI and re-verification

pub mod cause_checker;
pub mod causal_model;
pub mod equations;
pub mod event_logic;
pub mod hp_discrete;
pub mod report;
pub mod search_engine;
pub mod simulator;
pub mod trajectory;

/// Default sampling step, in seconds.
pub const DEFAULT_DT: f64 = 0.01;

/// Default absolute tolerance for value comparisons.
pub const DEFAULT_TOL: f64 = 1e-6;
