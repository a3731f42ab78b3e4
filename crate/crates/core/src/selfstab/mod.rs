//! Self-stabilising leader-based positioning.
//!
//! Agents cycle through three phases. A buffering line resets the whole
//! population in step; leaving it, agents run a coin-flip election; leaders
//! and followers then run the leader-based positioning protocol. Any
//! detected anomaly (inconsistent greens, an expired blue deadline, a
//! geometric fault) sends the agents involved back to the start of the line,
//! and the reset spreads from there.

pub mod buffer;
pub mod election;
mod recipes;

pub use buffer::{BufferState, Line};
pub use election::{
    toss, toss_count, transition_election, unique_leader_probability, Coin, ElectionProtocol, ElectionState,
    Progress,
};
pub use recipes::{init_adversarial, Recipe, UnknownRecipe};

use crate::engine::{GroundTruth, Protocol, ProtocolFault, Query, QueryModel, Update};
use crate::geometry;
use crate::leader_loc::{transition_alg1, LocParams, LocRole};

pub const DEFAULT_BUFFER_D: u32 = 3;
pub const DEFAULT_DEADLINE_C: f64 = 16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LocaliseState {
    pub role: LocRole,
    pub coin: Coin,
    /// Interactions taken part in while blue.
    pub deadline: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelfStabAgentState {
    Buffer(BufferState),
    Election(ElectionState),
    Localise(LocaliseState),
}

impl SelfStabAgentState {
    pub const RESET: SelfStabAgentState = SelfStabAgentState::Buffer(BufferState { index: 1 });

    pub fn coin(&self) -> Option<Coin> {
        match self {
            SelfStabAgentState::Buffer(_) => None,
            SelfStabAgentState::Election(e) => Some(e.coin),
            SelfStabAgentState::Localise(l) => Some(l.coin),
        }
    }

    pub fn role(&self) -> Option<&LocRole> {
        match self {
            SelfStabAgentState::Localise(l) => Some(&l.role),
            _ => None,
        }
    }

    fn is_blue(&self) -> bool {
        matches!(self.role(), Some(LocRole::Blue(_)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfStabParams {
    pub k: usize,
    pub tol: f64,
    pub tosses: u32,
    pub line: Line,
    pub deadline: u32,
}

impl SelfStabParams {
    pub fn new(n: usize, k: usize, buffer_d: u32, deadline_c: f64, tol: f64) -> Self {
        let tosses = toss_count(n);
        SelfStabParams {
            k,
            tol,
            tosses,
            line: Line::new(buffer_d, tosses),
            deadline: deadline_threshold(n, k, deadline_c),
        }
    }

    fn loc(&self) -> LocParams {
        LocParams { k: self.k, tol: self.tol }
    }
}

/// `n^(k/(k+1)) (ln n)^(1/(k+1))`, the positioning time scale.
pub fn localisation_scale(n: usize, k: usize) -> f64 {
    let n = n as f64;
    let e = 1.0 / (k as f64 + 1.0);
    n.powf(1.0 - e) * n.ln().powf(e)
}

/// Blue deadline in interactions: `ceil(c * n^(k/(k+1)) (ln n)^(1/(k+1)))`.
pub fn deadline_threshold(n: usize, k: usize, c: f64) -> u32 {
    (c * localisation_scale(n, k)).ceil() as u32
}

/// Convergence bound with unit constant: the positioning scale times `ln n`.
pub fn time_bound(n: usize, k: usize) -> f64 {
    localisation_scale(n, k) * (n as f64).ln()
}

fn start_role(e: &ElectionState, k: usize) -> Option<SelfStabAgentState> {
    let (role, deadline) = match e.progress {
        Progress::Counter(_) => return None,
        Progress::Leader => (LocRole::leader(k), None),
        Progress::Follower => (LocRole::blue(), Some(0)),
    };
    Some(SelfStabAgentState::Localise(LocaliseState {
        role,
        coin: e.coin,
        deadline,
    }))
}

/// Elected agents move on to positioning at once.
fn settle(s: SelfStabAgentState, k: usize) -> SelfStabAgentState {
    match &s {
        SelfStabAgentState::Election(e) => start_role(e, k).unwrap_or(s),
        _ => s,
    }
}

type Pair = (Option<SelfStabAgentState>, Option<SelfStabAgentState>);

const RESET_BOTH: fn() -> Pair = || (Some(SelfStabAgentState::RESET), Some(SelfStabAgentState::RESET));

fn line_step(u: &SelfStabAgentState, v: &SelfStabAgentState, p: &SelfStabParams) -> Option<Pair> {
    use SelfStabAgentState::{Buffer, Election};
    let depart = || Election(ElectionState::START);
    match (u, v) {
        (Buffer(a), Buffer(b)) => Some(match p.line.progress(*a, *b) {
            None => (Some(depart()), Some(depart())),
            Some(next) => (Some(Buffer(next)), Some(Buffer(next))),
        }),
        (Buffer(a), _) if p.line.is_red(*a) => Some(RESET_BOTH()),
        (_, Buffer(b)) if p.line.is_red(*b) => Some(RESET_BOTH()),
        (Buffer(_), _) => Some((Some(depart()), None)),
        (_, Buffer(_)) => Some((None, Some(depart()))),
        _ => None,
    }
}

fn localise_step(
    a: &LocaliseState,
    b: &LocaliseState,
    query: &Query<'_>,
    p: &SelfStabParams,
) -> Result<Pair, ProtocolFault> {
    if let (Some(x), Some(y)) = (a.role.label(), b.role.label()) {
        if geometry::consistent(x, y, query.distance()?, p.tol) {
            return Ok((None, None));
        }
        return Ok(RESET_BOTH());
    }
    let waiting = |r: &LocRole| matches!(r, LocRole::Blue(_));
    if waiting(&a.role) == waiting(&b.role) {
        return Ok((None, None));
    }
    let wrap = |s: &LocaliseState, role: LocRole| {
        let deadline = if matches!(role, LocRole::Blue(_)) { s.deadline } else { None };
        SelfStabAgentState::Localise(LocaliseState {
            role,
            coin: s.coin,
            deadline,
        })
    };
    Ok(match transition_alg1(&a.role, &b.role, query.distance()?, p.loc()) {
        Err(ProtocolFault::Query(e)) => return Err(e.into()),
        Err(_) => RESET_BOTH(),
        Ok(up) => match up {
            Update::Unchanged => (None, None),
            Update::Initiator(r) => (Some(wrap(a, r)), None),
            Update::Responder(r) => (None, Some(wrap(b, r))),
            Update::Both(r, s) => (Some(wrap(a, r)), Some(wrap(b, s))),
        },
    })
}

fn phase_step(
    u: &SelfStabAgentState,
    v: &SelfStabAgentState,
    query: &Query<'_>,
    p: &SelfStabParams,
) -> Result<Pair, ProtocolFault> {
    use SelfStabAgentState::{Election, Localise};
    if let Some(pair) = line_step(u, v, p) {
        return Ok(pair);
    }
    match (u, v) {
        (Election(a), Election(b)) if a.coin == Coin::N && b.coin == Coin::N => Ok((
            Some(Election(ElectionState { coin: Coin::H, ..*a })),
            Some(Election(ElectionState { coin: Coin::T, ..*b })),
        )),
        (Election(e), _) => {
            let responder_coin = v.coin().unwrap_or(Coin::N);
            Ok((
                toss(e.progress, responder_coin, p.tosses).map(|progress| Election(ElectionState { progress, ..*e })),
                None,
            ))
        }
        (Localise(a), Localise(b)) => localise_step(a, b, query, p),
        _ => Ok((None, None)),
    }
}

fn tick(before: &SelfStabAgentState, after: SelfStabAgentState, p: &SelfStabParams) -> SelfStabAgentState {
    if !before.is_blue() {
        return after;
    }
    match after {
        SelfStabAgentState::Localise(mut l) if matches!(l.role, LocRole::Blue(_)) => {
            let count = l.deadline.unwrap_or(0).saturating_add(1);
            if count >= p.deadline {
                return SelfStabAgentState::RESET;
            }
            l.deadline = Some(count);
            SelfStabAgentState::Localise(l)
        }
        other => other,
    }
}

/// One interaction of the self-stabilising protocol. Only the initiator
/// tosses; coin pairing gives heads to the initiator.
pub fn transition_selfstab(
    u: &SelfStabAgentState,
    v: &SelfStabAgentState,
    query: &Query<'_>,
    p: &SelfStabParams,
) -> Result<Update<SelfStabAgentState>, ProtocolFault> {
    let (u2, v2) = phase_step(u, v, query, p)?;
    let u2 = settle(tick(u, u2.unwrap_or_else(|| u.clone()), p), p.k);
    let v2 = settle(tick(v, v2.unwrap_or_else(|| v.clone()), p), p.k);
    Ok(match (u2 != *u, v2 != *v) {
        (false, false) => Update::Unchanged,
        (true, false) => Update::Initiator(u2),
        (false, true) => Update::Responder(v2),
        (true, true) => Update::Both(u2, v2),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SelfStabilising {
    pub params: SelfStabParams,
}

impl Protocol for SelfStabilising {
    type State = SelfStabAgentState;

    fn query_model(&self) -> QueryModel {
        QueryModel::SymmetricDistance
    }

    fn interact(
        &self,
        initiator: &SelfStabAgentState,
        responder: &SelfStabAgentState,
        query: &Query<'_>,
    ) -> Result<Update<SelfStabAgentState>, ProtocolFault> {
        transition_selfstab(initiator, responder, query, &self.params)
    }
}

/// Every agent positioned and labels an isometric image of the truth.
///
/// Labels are checked against the first `k + 1` agents, which must be
/// pairwise consistent themselves. For points in general position this pins
/// every label, so it stands in for the all-pairs check.
pub fn oracle_selfstab_converged(config: &[SelfStabAgentState], gt: &GroundTruth, tol: f64) -> bool {
    let n = config.len();
    if n != gt.n() {
        return false;
    }
    let mut labels = Vec::with_capacity(n);
    for s in config {
        match s.role().and_then(LocRole::label) {
            Some(x) => labels.push(x),
            None => return false,
        }
    }
    let refs = (gt.k() + 1).min(n);
    (0..n).all(|i| (0..refs).all(|r| r == i || geometry::consistent(labels[i], labels[r], gt.distance(i, r), tol)))
}

/// The exhaustive version of the convergence check, `O(n^2)`.
pub fn all_pairs_consistent(config: &[SelfStabAgentState], gt: &GroundTruth, tol: f64) -> bool {
    let labels: Option<Vec<_>> = config.iter().map(|s| s.role().and_then(LocRole::label)).collect();
    let Some(labels) = labels else {
        return false;
    };
    (0..labels.len())
        .all(|i| (i + 1..labels.len()).all(|j| geometry::consistent(labels[i], labels[j], gt.distance(i, j), tol)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Datum;
    use crate::geometry::{Point, DEFAULT_TOL};
    use SelfStabAgentState::{Buffer, Election, Localise};

    fn params() -> SelfStabParams {
        SelfStabParams::new(1024, 1, DEFAULT_BUFFER_D, DEFAULT_DEADLINE_C, DEFAULT_TOL)
    }

    fn step(u: &SelfStabAgentState, v: &SelfStabAgentState, d: f64) -> Update<SelfStabAgentState> {
        let datum = Datum::Distance(d);
        transition_selfstab(u, v, &Query::given(&datum), &params()).unwrap()
    }

    fn x(i: u32) -> SelfStabAgentState {
        Buffer(BufferState { index: i })
    }

    fn green(label: f64, coin: Coin) -> SelfStabAgentState {
        Localise(LocaliseState {
            role: LocRole::green(Point::from([label])),
            coin,
            deadline: None,
        })
    }

    fn blue(deadline: u32) -> SelfStabAgentState {
        Localise(LocaliseState {
            role: LocRole::blue(),
            coin: Coin::T,
            deadline: Some(deadline),
        })
    }

    #[test]
    fn params_for_1024() {
        let p = params();
        assert_eq!(p.tosses, 10);
        assert_eq!(p.line.len(), 60);
        assert_eq!(p.deadline, (16.0 * (1024.0f64 * 1024f64.ln()).sqrt()).ceil() as u32);
    }

    #[test]
    fn line_takes_minimum_plus_one() {
        assert_eq!(step(&x(4), &x(40), 0.0), Update::Both(x(5), x(5)));
    }

    #[test]
    fn red_resets_localise_agent() {
        assert_eq!(
            step(&x(7), &green(1.0, Coin::H), 1.0),
            Update::Both(SelfStabAgentState::RESET, SelfStabAgentState::RESET)
        );
    }

    #[test]
    fn white_departs_alone() {
        assert_eq!(
            step(&green(1.0, Coin::H), &x(45), 1.0),
            Update::Responder(Election(ElectionState::START))
        );
    }

    #[test]
    fn top_pair_departs() {
        let e = Election(ElectionState::START);
        assert_eq!(step(&x(60), &x(60), 0.0), Update::Both(e.clone(), e));
    }

    #[test]
    fn inconsistent_greens_reset() {
        assert_eq!(
            step(&green(0.0, Coin::H), &green(1.0, Coin::T), 2.0),
            Update::Both(SelfStabAgentState::RESET, SelfStabAgentState::RESET)
        );
        assert_eq!(step(&green(0.0, Coin::H), &green(1.0, Coin::T), 1.0), Update::Unchanged);
    }

    #[test]
    fn last_heads_starts_leader() {
        let u = Election(ElectionState {
            coin: Coin::T,
            progress: Progress::Counter(10),
        });
        let h = green(0.5, Coin::H);
        let Update::Initiator(Localise(l)) = step(&u, &h, 1.0) else {
            panic!()
        };
        assert_eq!(l.role, LocRole::leader(1));
        assert_eq!(l.coin, Coin::T);
    }

    #[test]
    fn tails_start_blue() {
        let u = Election(ElectionState {
            coin: Coin::H,
            progress: Progress::Counter(3),
        });
        let t = Election(ElectionState {
            coin: Coin::T,
            progress: Progress::Counter(1),
        });
        let started = Localise(LocaliseState {
            role: LocRole::blue(),
            coin: Coin::H,
            deadline: Some(0),
        });
        assert_eq!(step(&u, &t, 1.0), Update::Initiator(started));
    }

    #[test]
    fn neutral_coins_pair_only_in_election() {
        let e = Election(ElectionState::START);
        let Update::Both(a, b) = step(&e, &e, 1.0) else {
            panic!()
        };
        assert_eq!((a.coin(), b.coin()), (Some(Coin::H), Some(Coin::T)));
        assert_eq!(step(&e, &green(0.0, Coin::N), 1.0), Update::Unchanged);
        assert_eq!(step(&green(0.0, Coin::N), &green(1.0, Coin::N), 1.0), Update::Unchanged);
    }

    #[test]
    fn red_resets_election_agent() {
        assert_eq!(
            step(&x(2), &Election(ElectionState::START), 1.0),
            Update::Both(SelfStabAgentState::RESET, SelfStabAgentState::RESET)
        );
    }

    #[test]
    fn inconsistent_plane_greens_reset() {
        let p = SelfStabParams::new(1024, 2, DEFAULT_BUFFER_D, DEFAULT_DEADLINE_C, DEFAULT_TOL);
        let g = |x: f64, y: f64| {
            Localise(LocaliseState {
                role: LocRole::green(Point::from([x, y])),
                coin: Coin::H,
                deadline: None,
            })
        };
        let datum = Datum::Distance(6.0);
        assert_eq!(
            transition_selfstab(&g(0.0, 0.0), &g(3.0, 4.0), &Query::given(&datum), &p).unwrap(),
            Update::Both(SelfStabAgentState::RESET, SelfStabAgentState::RESET)
        );
    }

    #[test]
    fn blue_deadline_counts_and_expires() {
        let other = blue(0);
        assert_eq!(step(&blue(3), &other, 1.0), Update::Both(blue(4), blue(1)));
        let last = params().deadline - 1;
        assert_eq!(
            step(&blue(last), &green(0.0, Coin::H), 1.0),
            Update::Initiator(SelfStabAgentState::RESET)
        );
    }

    #[test]
    fn blue_turning_green_drops_deadline() {
        let leader = Localise(LocaliseState {
            role: LocRole::leader(1),
            coin: Coin::H,
            deadline: None,
        });
        let Update::Both(_, Localise(g)) = step(&leader, &blue(5), 2.5) else {
            panic!()
        };
        assert_eq!(g.role, LocRole::green(Point::from([2.5])));
        assert_eq!(g.deadline, None);
    }
}
