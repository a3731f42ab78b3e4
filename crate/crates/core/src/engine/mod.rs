//! Protocol-agnostic simulation engine: ground truth, geometric queries, the
//! random scheduler, the interaction loop and the silence scan.
//!
//! Stabilisation is measured from outside the model. A trial halts when an
//! oracle predicate over the configuration holds; the reported time is the
//! index of the last interaction that changed any state, divided by `n`.

mod schedule;
mod trial;
mod truth;

pub use schedule::{schedule_pair, PermutedScheduler, PopulationTooSmall, Scheduler, UniformScheduler};
pub use trial::{
    run_trial, run_trial_observed, verify_silence, Configuration, Interaction, NoObserver, Observer,
    Protocol, ProtocolFault, StopRule, TrialError, TrialOutcome, TrialResult, Update,
};
pub use truth::{evaluate_query, Datum, GroundTruth, Query, QueryError, QueryModel, TruthError};
