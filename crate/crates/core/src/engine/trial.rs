use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Index, IndexMut};

use rayon::prelude::*;
use thiserror::Error;

use super::schedule::Scheduler;
use super::truth::{GroundTruth, Query, QueryError, QueryModel};
use crate::geometry::GeometryError;

/// Why a transition could not be applied.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolFault {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Result of one transition.
#[derive(Debug, Clone, PartialEq)]
pub enum Update<S> {
    Unchanged,
    Initiator(S),
    Responder(S),
    Both(S, S),
}

impl<S: Clone> Update<S> {
    /// Post-interaction states, given the pre-interaction ones.
    pub fn resolve(&self, initiator: &S, responder: &S) -> (S, S) {
        match self {
            Update::Unchanged => (initiator.clone(), responder.clone()),
            Update::Initiator(u) => (u.clone(), responder.clone()),
            Update::Responder(v) => (initiator.clone(), v.clone()),
            Update::Both(u, v) => (u.clone(), v.clone()),
        }
    }
}

/// A population protocol: a pure transition over pairs of agent states.
pub trait Protocol: Sync {
    type State: Clone + PartialEq + Debug + Send + Sync;

    fn query_model(&self) -> QueryModel;

    fn interact(
        &self,
        initiator: &Self::State,
        responder: &Self::State,
        query: &Query<'_>,
    ) -> Result<Update<Self::State>, ProtocolFault>;
}

/// States of all agents. Indices are simulator bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration<S>(Vec<S>);

impl<S> Configuration<S> {
    pub fn new(states: Vec<S>) -> Self {
        Configuration(states)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn states(&self) -> &[S] {
        &self.0
    }

    pub fn into_states(self) -> Vec<S> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.0.iter()
    }
}

impl<S> Index<usize> for Configuration<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

impl<S> IndexMut<usize> for Configuration<S> {
    fn index_mut(&mut self, i: usize) -> &mut S {
        &mut self.0[i]
    }
}

impl<S> FromIterator<S> for Configuration<S> {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Configuration(iter.into_iter().collect())
    }
}

/// When to halt a trial: an oracle predicate, checked periodically, plus an
/// interaction budget.
pub struct StopRule<F> {
    pub converged: F,
    pub budget: u64,
    pub check_interval: u64,
}

impl<F> StopRule<F> {
    /// Budget expressed in parallel time for a population of `n`; the
    /// predicate is checked once per unit of parallel time.
    pub fn new(converged: F, max_parallel_time: f64, n: usize) -> Self {
        StopRule {
            converged,
            budget: (max_parallel_time * n as f64).ceil().max(0.0) as u64,
            check_interval: n.max(1) as u64,
        }
    }

    pub fn check_every(mut self, interactions: u64) -> Self {
        self.check_interval = interactions.max(1);
        self
    }
}

/// Bookkeeping for one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub interactions: u64,
    pub last_change_interaction: u64,
    pub parallel_time: f64,
    pub converged: bool,
    pub silence_verified: bool,
    pub extras: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome<S> {
    pub result: TrialResult,
    pub config: Configuration<S>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrialError {
    #[error("initial configuration has {config} agents but ground truth has {truth}")]
    SizeMismatch { config: usize, truth: usize },
    #[error("a population needs at least two agents, got {0}")]
    TooSmall(usize),
    #[error("interaction {interaction} (initiator {initiator}, responder {responder}): {fault}")]
    Fault {
        interaction: u64,
        initiator: usize,
        responder: usize,
        fault: ProtocolFault,
    },
}

/// One scheduled interaction, reported before its update is applied.
pub struct Interaction<'a, S> {
    pub t: u64,
    pub initiator: usize,
    pub responder: usize,
    pub config: &'a [S],
    pub update: &'a Update<S>,
}

pub trait Observer<S> {
    fn observe(&mut self, event: &Interaction<'_, S>);
}

pub struct NoObserver;

impl<S> Observer<S> for NoObserver {
    #[inline(always)]
    fn observe(&mut self, _: &Interaction<'_, S>) {}
}

impl<S, F: FnMut(&Interaction<'_, S>)> Observer<S> for F {
    fn observe(&mut self, event: &Interaction<'_, S>) {
        self(event)
    }
}

pub fn run_trial<P, Sch, F>(
    protocol: &P,
    gt: &GroundTruth,
    init: Configuration<P::State>,
    scheduler: &mut Sch,
    stop: &StopRule<F>,
) -> Result<TrialOutcome<P::State>, TrialError>
where
    P: Protocol,
    Sch: Scheduler,
    F: Fn(&[P::State]) -> bool,
{
    run_trial_observed(protocol, gt, init, scheduler, stop, &mut NoObserver)
}

/// Runs interactions until the stop predicate holds or the budget runs out.
pub fn run_trial_observed<P, Sch, F, O>(
    protocol: &P,
    gt: &GroundTruth,
    init: Configuration<P::State>,
    scheduler: &mut Sch,
    stop: &StopRule<F>,
    observer: &mut O,
) -> Result<TrialOutcome<P::State>, TrialError>
where
    P: Protocol,
    Sch: Scheduler,
    F: Fn(&[P::State]) -> bool,
    O: Observer<P::State>,
{
    let n = gt.n();
    if init.len() != n {
        return Err(TrialError::SizeMismatch {
            config: init.len(),
            truth: n,
        });
    }
    if n < 2 {
        return Err(TrialError::TooSmall(n));
    }
    let model = protocol.query_model();
    let mut states = init.into_states();
    let mut last_change = 0u64;
    let mut t = 0u64;
    let mut converged = (stop.converged)(&states);
    let mut next_check = stop.check_interval;

    while !converged && t < stop.budget {
        t += 1;
        let (i, r) = scheduler.next_pair(n);
        let query = Query::truth(gt, i, r, model);
        let update = protocol
            .interact(&states[i], &states[r], &query)
            .map_err(|fault| TrialError::Fault {
                interaction: t,
                initiator: i,
                responder: r,
                fault,
            })?;
        observer.observe(&Interaction {
            t,
            initiator: i,
            responder: r,
            config: &states,
            update: &update,
        });
        let changed = match update {
            Update::Unchanged => false,
            Update::Initiator(u) => replace(&mut states[i], u),
            Update::Responder(v) => replace(&mut states[r], v),
            Update::Both(u, v) => {
                let a = replace(&mut states[i], u);
                let b = replace(&mut states[r], v);
                a || b
            }
        };
        if changed {
            last_change = t;
        }
        if t >= next_check {
            next_check = t + stop.check_interval;
            converged = (stop.converged)(&states);
        }
    }
    if !converged {
        converged = (stop.converged)(&states);
    }

    Ok(TrialOutcome {
        result: TrialResult {
            interactions: t,
            last_change_interaction: last_change,
            parallel_time: last_change as f64 / n as f64,
            converged,
            silence_verified: false,
            extras: BTreeMap::new(),
        },
        config: Configuration::new(states),
    })
}

#[inline]
fn replace<S: PartialEq>(slot: &mut S, new: S) -> bool {
    if *slot != new {
        *slot = new;
        true
    } else {
        false
    }
}

/// Exhaustive silence check: applies the transition to every ordered pair
/// with its true datum and reports whether none of them changes a state.
/// A faulting transition counts as not silent.
pub fn verify_silence<P: Protocol>(
    protocol: &P,
    config: &Configuration<P::State>,
    gt: &GroundTruth,
) -> bool {
    let states = config.states();
    let n = states.len();
    if n != gt.n() {
        return false;
    }
    let model = protocol.query_model();
    (0..n).into_par_iter().all(|i| {
        let u = &states[i];
        (0..n).filter(|&r| r != i).all(|r| {
            let v = &states[r];
            match protocol.interact(u, v, &Query::truth(gt, i, r, model)) {
                Ok(Update::Unchanged) => true,
                Ok(update) => {
                    let (u2, v2) = update.resolve(u, v);
                    u2 == *u && v2 == *v
                }
                Err(_) => false,
            }
        })
    })
}
