//! One-way and k-contact epidemics.
//!
//! A blue agent turns green after meeting `k` distinct green agents. With
//! `k = 1` this is the ordinary one-way epidemic.
//!
//! Distinctness needs some notion of identity. Here every agent carries a
//! simulator-issued token that it shows when green; this is the one place an
//! agent state holds something other than protocol data. The localisation
//! protocols get distinctness from labels instead.

use rand::seq::index::sample;
use rand::Rng;
use smallvec::SmallVec;

use crate::engine::{Configuration, Protocol, ProtocolFault, Query, QueryModel, Update};

pub type ContactToken = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EpidemicState {
    Green {
        token: ContactToken,
    },
    Blue {
        token: ContactToken,
        contacts: SmallVec<[ContactToken; 4]>,
    },
}

impl EpidemicState {
    pub fn green(token: ContactToken) -> Self {
        EpidemicState::Green { token }
    }

    pub fn blue(token: ContactToken) -> Self {
        EpidemicState::Blue {
            token,
            contacts: SmallVec::new(),
        }
    }

    pub fn is_green(&self) -> bool {
        matches!(self, EpidemicState::Green { .. })
    }

    pub fn token(&self) -> ContactToken {
        match self {
            EpidemicState::Green { token } | EpidemicState::Blue { token, .. } => *token,
        }
    }
}

/// Blue `agent` meets green `green_token`.
fn absorb(agent: &EpidemicState, green_token: ContactToken, k: usize) -> Option<EpidemicState> {
    let EpidemicState::Blue { token, contacts } = agent else {
        return None;
    };
    if contacts.contains(&green_token) {
        return None;
    }
    if contacts.len() + 1 >= k {
        return Some(EpidemicState::Green { token: *token });
    }
    let mut contacts = contacts.clone();
    contacts.push(green_token);
    Some(EpidemicState::Blue {
        token: *token,
        contacts,
    })
}

/// Symmetric k-contact rule: whichever side is blue records the other if it
/// is green, and converts once it has `k` distinct green contacts.
pub fn k_contact_transition(
    u: &EpidemicState,
    v: &EpidemicState,
    k: usize,
) -> Update<EpidemicState> {
    match (u, v) {
        (EpidemicState::Blue { .. }, EpidemicState::Green { token }) => {
            absorb(u, *token, k).map_or(Update::Unchanged, Update::Initiator)
        }
        (EpidemicState::Green { token }, EpidemicState::Blue { .. }) => {
            absorb(v, *token, k).map_or(Update::Unchanged, Update::Responder)
        }
        _ => Update::Unchanged,
    }
}

pub fn epidemic_complete(config: &[EpidemicState]) -> bool {
    config.iter().all(EpidemicState::is_green)
}

/// The k-contact epidemic as a population protocol. No geometric query is
/// consulted.
#[derive(Debug, Clone, Copy)]
pub struct KContactEpidemic {
    pub k: usize,
}

impl KContactEpidemic {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "contact threshold must be at least 1");
        KContactEpidemic { k }
    }
}

impl Protocol for KContactEpidemic {
    type State = EpidemicState;

    fn query_model(&self) -> QueryModel {
        QueryModel::SymmetricDistance
    }

    #[inline]
    fn interact(
        &self,
        initiator: &EpidemicState,
        responder: &EpidemicState,
        _query: &Query<'_>,
    ) -> Result<Update<EpidemicState>, ProtocolFault> {
        Ok(k_contact_transition(initiator, responder, self.k))
    }
}

/// `n` agents of which `greens` (chosen uniformly) start green. Tokens are the
/// agent indices.
pub fn initial_configuration<R: Rng + ?Sized>(
    n: usize,
    greens: usize,
    rng: &mut R,
) -> Configuration<EpidemicState> {
    let greens = greens.min(n);
    let mut states: Vec<EpidemicState> = (0..n as ContactToken).map(EpidemicState::blue).collect();
    for i in sample(rng, n, greens) {
        states[i] = EpidemicState::green(i as ContactToken);
    }
    Configuration::new(states)
}

/// Parallel time bound `n^(1-1/k) (ln n)^(1/k)` with unit constant.
pub fn time_bound(n: usize, k: usize) -> f64 {
    let n = n as f64;
    let k = k as f64;
    n.powf(1.0 - 1.0 / k) * n.ln().powf(1.0 / k)
}
