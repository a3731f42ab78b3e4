//! Leader-based localisation with symmetric distance queries.
//!
//! The leader sits at the origin and approves the first `k` greens one at a
//! time; each approved agent gains one new coordinate axis. After that every
//! blue agent positions itself by multilateration once it has met `k + 1`
//! distinct greens (the leader included).

mod improved;

pub use improved::{
    resolve_greenish_pair, time_bound as improved_time_bound, transition_improved1d, GreenishState, ImprovedLine,
};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{Configuration, GroundTruth, Protocol, ProtocolFault, Query, QueryModel, Update};
use crate::geometry::{self, Anchor, AnchorSet, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocParams {
    pub k: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderState {
    /// Always the origin.
    pub label: Point,
    /// Approved greens as `(label, distance to the leader)`.
    pub registry: AnchorSet,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlueState {
    /// Distinct non-leader green contacts with measured distances.
    pub contacts: AnchorSet,
    /// Distance to the leader, once met as an ordinary green contact.
    pub leader_distance: Option<f64>,
}

impl BlueState {
    /// Number of distinct greens met, counting the leader.
    pub fn contact_count(&self) -> usize {
        self.contacts.len() + usize::from(self.leader_distance.is_some())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenState {
    pub label: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocRole {
    Leader(LeaderState),
    Blue(BlueState),
    Greenish(GreenishState),
    Green(GreenState),
}

impl LocRole {
    pub fn leader(k: usize) -> Self {
        LocRole::Leader(LeaderState {
            label: Point::origin(k),
            registry: AnchorSet::new(),
        })
    }

    pub fn blue() -> Self {
        LocRole::Blue(BlueState::default())
    }

    pub fn green(label: Point) -> Self {
        LocRole::Green(GreenState { label })
    }

    /// Label of a positioned agent (green or leader).
    pub fn label(&self) -> Option<&Point> {
        match self {
            LocRole::Leader(l) => Some(&l.label),
            LocRole::Green(g) => Some(&g.label),
            _ => None,
        }
    }

    pub fn is_positioned(&self) -> bool {
        self.label().is_some()
    }
}

fn leader_anchor(k: usize, d: f64) -> Anchor {
    Anchor::new(Point::origin(k), d)
}

/// Leader meets blue. Returns the new leader (if changed) and the new blue
/// role (if changed).
fn leader_meets_blue(
    leader: &LeaderState,
    blue: &BlueState,
    d: f64,
    p: LocParams,
) -> Result<(Option<LeaderState>, Option<LocRole>), ProtocolFault> {
    let i = leader.registry.len();
    if i < p.k && blue.contacts.len() == i {
        if !blue.contacts.same_positions(&leader.registry, p.tol) {
            return Err(ProtocolFault::Invariant(
                "blue contacts differ from the leader registry at approval".into(),
            ));
        }
        let mut anchors = AnchorSet::new();
        anchors.push(Anchor::new(leader.label.clone(), d));
        for a in &blue.contacts {
            anchors.push(a.clone());
        }
        let label = geometry::position_in_subspace(&anchors, i, p.k, p.tol)?;
        let mut registry = leader.registry.clone();
        registry.push(Anchor::new(label.clone(), d));
        return Ok((
            Some(LeaderState {
                label: leader.label.clone(),
                registry,
            }),
            Some(LocRole::green(label)),
        ));
    }
    if blue.leader_distance.is_some() {
        return Ok((None, None));
    }
    let mut next = blue.clone();
    next.leader_distance = Some(d);
    Ok((None, Some(complete_if_ready(next, p)?)))
}

/// Blue meets a non-leader green with `label`.
fn blue_meets_green(
    blue: &BlueState,
    label: &Point,
    d: f64,
    p: LocParams,
) -> Result<Option<LocRole>, ProtocolFault> {
    if blue.contacts.contains_position(label, p.tol) {
        return Ok(None);
    }
    let mut next = blue.clone();
    next.contacts.push(Anchor::new(label.clone(), d));
    complete_if_ready(next, p).map(Some)
}

fn complete_if_ready(blue: BlueState, p: LocParams) -> Result<LocRole, ProtocolFault> {
    if blue.contact_count() < p.k + 1 {
        return Ok(LocRole::Blue(blue));
    }
    let mut anchors = blue.contacts.clone();
    if let Some(d) = blue.leader_distance {
        anchors.push(leader_anchor(p.k, d));
    }
    let label = geometry::multilaterate(&anchors, p.k, p.tol)?;
    Ok(LocRole::green(label))
}

fn pack(u: Option<LocRole>, v: Option<LocRole>) -> Update<LocRole> {
    match (u, v) {
        (None, None) => Update::Unchanged,
        (Some(u), None) => Update::Initiator(u),
        (None, Some(v)) => Update::Responder(v),
        (Some(u), Some(v)) => Update::Both(u, v),
    }
}

/// One symmetric interaction of the k-dimensional positioning protocol.
///
/// In order: leader approval of a blue whose contacts match the registry,
/// collection of a new distinct green contact, and multilateration once
/// `k + 1` contacts are known. Pairs of positioned agents never change.
pub fn transition_alg1(
    u: &LocRole,
    v: &LocRole,
    d_uv: f64,
    p: LocParams,
) -> Result<Update<LocRole>, ProtocolFault> {
    Ok(match (u, v) {
        (LocRole::Leader(l), LocRole::Blue(b)) => {
            let (l2, b2) = leader_meets_blue(l, b, d_uv, p)?;
            pack(l2.map(LocRole::Leader), b2)
        }
        (LocRole::Blue(b), LocRole::Leader(l)) => {
            let (l2, b2) = leader_meets_blue(l, b, d_uv, p)?;
            pack(b2, l2.map(LocRole::Leader))
        }
        (LocRole::Blue(b), LocRole::Green(g)) => pack(blue_meets_green(b, &g.label, d_uv, p)?, None),
        (LocRole::Green(g), LocRole::Blue(b)) => pack(None, blue_meets_green(b, &g.label, d_uv, p)?),
        _ => Update::Unchanged,
    })
}

/// True when the pair can change anything, i.e. the distance is worth asking.
fn alg1_active(u: &LocRole, v: &LocRole) -> bool {
    matches!(
        (u, v),
        (LocRole::Blue(_), LocRole::Leader(_) | LocRole::Green(_))
            | (LocRole::Leader(_) | LocRole::Green(_), LocRole::Blue(_))
    )
}

/// Algorithm 1 as a population protocol.
#[derive(Debug, Clone, Copy)]
pub struct LeaderLocalisation {
    pub params: LocParams,
}

impl LeaderLocalisation {
    pub fn new(k: usize, tol: f64) -> Self {
        LeaderLocalisation {
            params: LocParams { k, tol },
        }
    }
}

impl Protocol for LeaderLocalisation {
    type State = LocRole;

    fn query_model(&self) -> QueryModel {
        QueryModel::SymmetricDistance
    }

    fn interact(
        &self,
        initiator: &LocRole,
        responder: &LocRole,
        query: &Query<'_>,
    ) -> Result<Update<LocRole>, ProtocolFault> {
        if !alg1_active(initiator, responder) {
            return Ok(Update::Unchanged);
        }
        transition_alg1(initiator, responder, query.distance()?, self.params)
    }
}

/// Leader at the ground truth's designated index, everyone else blue.
pub fn initial_configuration(gt: &GroundTruth) -> Configuration<LocRole> {
    let leader = gt.leader().unwrap_or(0);
    (0..gt.n())
        .map(|i| {
            if i == leader {
                LocRole::leader(gt.k())
            } else {
                LocRole::blue()
            }
        })
        .collect()
}

/// Parallel time bound `n (ln n / n)^(1/(k+1))` with unit constant.
pub fn time_bound(n: usize, k: usize) -> f64 {
    let n = n as f64;
    n * (n.ln() / n).powf(1.0 / (k as f64 + 1.0))
}

/// Gauge-aware correctness oracle.
///
/// Every agent must be positioned and every leader sits at the origin. Label
/// geometry is checked against true distances: each agent against `k + 1`
/// reference agents (the leader and `k` others), which pins every label to
/// an isometric image of the true positions, plus a pseudo-random sample of
/// further pairs.
pub fn oracle_localized(config: &[LocRole], gt: &GroundTruth, tol: f64) -> bool {
    let n = config.len();
    if n != gt.n() || !config.iter().all(LocRole::is_positioned) {
        return false;
    }
    for role in config {
        if let LocRole::Leader(l) = role {
            if l.label.max_abs() > tol {
                return false;
            }
        }
    }
    let leader = config
        .iter()
        .position(|r| matches!(r, LocRole::Leader(_)))
        .or(gt.leader())
        .unwrap_or(0);
    let mut refs = vec![leader];
    refs.extend((0..n).filter(|&i| i != leader).take(gt.k()));

    let check = |i: usize, j: usize| -> bool {
        let (Some(a), Some(b)) = (config[i].label(), config[j].label()) else {
            return false;
        };
        geometry::consistent(a, b, gt.distance(i, j), tol)
    };
    for i in 0..n {
        for &r in &refs {
            if r != i && !check(i, r) {
                return false;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    for _ in 0..4 * n {
        let i = (rng.next_u64() % n as u64) as usize;
        let j = (rng.next_u64() % n as u64) as usize;
        if i != j && !check(i, j) {
            return false;
        }
    }
    true
}
