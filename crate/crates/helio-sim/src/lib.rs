//! Discrete-time simulator for energy-harvesting BDI agents.
//!
//! The crate pairs a microjoule-accounted energy platform (harvest traces,
//! storage buffer, persistent media) with a reasoning engine that runs
//! `helio-asl` programs against it. Simulations advance in whole
//! milliseconds, log every observable step as a JSON line, and are
//! deterministic for a given program, configuration, and trace.

pub mod batch;
pub mod beliefs;
pub mod config;
pub mod engine;
pub mod error;
pub mod log;
pub mod persist;
pub mod platform;
pub mod sim;

pub use batch::{
    conservation_trial, for_each_seed, guard_soundness_trial, ConservationReport, GuardReport,
    SweepMode,
};
pub use beliefs::{BeliefBase, BeliefEntry, ChangeEvent, ChangeOp, Lifetime, Origin};
pub use config::{OnIdle, SimConfig};
pub use engine::{select_plan, EnergyCheckpoint, EstimatePolicy, Event, Intention, IntentionStatus, Provenance};
pub use error::{BeliefError, PersistError, SimError};
pub use log::{parse_jsonl, EventLog, LogRecord, RecordKind, Summary};
pub use persist::{decode_image, encode_image, MediaStore, Medium, MediumProfile, PersistImage};
pub use platform::{EnergyBuffer, EnergyPlatform, HarvestTrace, RunCondition, RunStop, StepOutcome, StopCause};
pub use sim::{Phase, Simulation};
