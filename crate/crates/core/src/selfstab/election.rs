//! Coin-flip leader election.
//!
//! Neutral agents pair up into heads/tails coins; an agent counting towards
//! leadership tosses by meeting a coin holder as initiator. `L` heads in a
//! row make a leader, any tails makes a follower.

use crate::engine::{Protocol, ProtocolFault, Query, QueryModel, Update};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coin {
    N,
    H,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    /// Heads seen so far plus one, in `1..=L`.
    Counter(u32),
    Leader,
    Follower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElectionState {
    pub coin: Coin,
    pub progress: Progress,
}

impl ElectionState {
    /// The state every agent takes on leaving the buffer line.
    pub const START: ElectionState = ElectionState {
        coin: Coin::N,
        progress: Progress::Counter(1),
    };

    pub fn is_done(&self) -> bool {
        !matches!(self.progress, Progress::Counter(_))
    }
}

/// Number of tosses for `n` agents: `ceil(log2 n)`.
pub fn toss_count(n: usize) -> u32 {
    (n.max(2) as f64).log2().ceil() as u32
}

/// The initiator's toss against a responder's coin.
pub fn toss(progress: Progress, responder_coin: Coin, l: u32) -> Option<Progress> {
    let Progress::Counter(i) = progress else {
        return None;
    };
    match responder_coin {
        Coin::N => None,
        Coin::H if i >= l => Some(Progress::Leader),
        Coin::H => Some(Progress::Counter(i + 1)),
        Coin::T => Some(Progress::Follower),
    }
}

/// One interaction between two agents running the election.
pub fn transition_election(u: &ElectionState, v: &ElectionState, l: u32) -> Update<ElectionState> {
    if u.coin == Coin::N && v.coin == Coin::N {
        return Update::Both(
            ElectionState { coin: Coin::H, ..*u },
            ElectionState { coin: Coin::T, ..*v },
        );
    }
    match toss(u.progress, v.coin, l) {
        Some(progress) => Update::Initiator(ElectionState { progress, ..*u }),
        None => Update::Unchanged,
    }
}

/// The election on its own, with leaders and followers left in place.
#[derive(Debug, Clone, Copy)]
pub struct ElectionProtocol {
    pub tosses: u32,
}

impl ElectionProtocol {
    pub fn for_population(n: usize) -> Self {
        ElectionProtocol { tosses: toss_count(n) }
    }
}

impl Protocol for ElectionProtocol {
    type State = ElectionState;

    fn query_model(&self) -> QueryModel {
        QueryModel::SymmetricDistance
    }

    fn interact(
        &self,
        initiator: &ElectionState,
        responder: &ElectionState,
        _query: &Query<'_>,
    ) -> Result<Update<ElectionState>, ProtocolFault> {
        Ok(transition_election(initiator, responder, self.tosses))
    }
}

/// Probability that exactly one of `n` agents gets `l` heads in a row.
pub fn unique_leader_probability(n: usize, l: u32) -> f64 {
    let p = 0.5f64.powi(l as i32);
    n as f64 * p * (1.0 - p).powi(n as i32 - 1)
}
