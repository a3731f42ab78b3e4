//! Adversarial starting configurations.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::{BufferState, Coin, ElectionState, LocaliseState, Progress, SelfStabAgentState, SelfStabParams};
use crate::engine::{Configuration, GroundTruth};
use crate::geometry::{Anchor, Point};
use crate::leader_loc::{BlueState, LeaderState, LocRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Recipe {
    /// Every agent in a uniformly random phase with random fields.
    Random,
    /// All green with mutually inconsistent labels.
    InconsistentGreens,
    /// Two leaders, everyone else a fresh blue.
    TwoLeaders,
    /// All on the line at random indices.
    MidBuffer,
    /// All on the red half of the line.
    AllBufferRed,
    /// One leader and blues whose deadlines are about to expire.
    ExpiredDeadlines,
    /// Labels equal to the true positions: already converged.
    ConsistentGreens,
}

impl Recipe {
    pub const ALL: [Recipe; 7] = [
        Recipe::Random,
        Recipe::InconsistentGreens,
        Recipe::TwoLeaders,
        Recipe::MidBuffer,
        Recipe::AllBufferRed,
        Recipe::ExpiredDeadlines,
        Recipe::ConsistentGreens,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::Random => "random",
            Recipe::InconsistentGreens => "inconsistent-greens",
            Recipe::TwoLeaders => "two-leaders",
            Recipe::MidBuffer => "mid-buffer",
            Recipe::AllBufferRed => "all-buffer-red",
            Recipe::ExpiredDeadlines => "expired-deadlines",
            Recipe::ConsistentGreens => "consistent-greens",
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown recipe `{0}`")]
pub struct UnknownRecipe(pub String);

impl FromStr for Recipe {
    type Err = UnknownRecipe;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| UnknownRecipe(s.to_owned()))
    }
}

fn any_coin<R: Rng + ?Sized>(rng: &mut R) -> Coin {
    [Coin::N, Coin::H, Coin::T][rng.gen_range(0..3)]
}

fn set_coin<R: Rng + ?Sized>(rng: &mut R) -> Coin {
    if rng.gen() {
        Coin::H
    } else {
        Coin::T
    }
}

fn random_point<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Point {
    Point::new((0..k).map(|_| rng.gen_range(-1.0..2.0)))
}

fn localise(role: LocRole, coin: Coin, deadline: Option<u32>) -> SelfStabAgentState {
    SelfStabAgentState::Localise(LocaliseState { role, coin, deadline })
}

fn random_role<R: Rng + ?Sized>(rng: &mut R, k: usize) -> (LocRole, bool) {
    match rng.gen_range(0..3) {
        0 => {
            let mut leader = LeaderState {
                label: Point::origin(k),
                registry: Default::default(),
            };
            for _ in 0..rng.gen_range(0..=k) {
                leader.registry.push(Anchor::new(random_point(rng, k), rng.gen_range(0.0..2.0)));
            }
            (LocRole::Leader(leader), false)
        }
        1 => {
            let mut blue = BlueState::default();
            for _ in 0..rng.gen_range(0..=k) {
                blue.contacts.push(Anchor::new(random_point(rng, k), rng.gen_range(0.0..2.0)));
            }
            if blue.contacts.len() < k && rng.gen() {
                blue.leader_distance = Some(rng.gen_range(0.0..2.0));
            }
            (LocRole::Blue(blue), true)
        }
        _ => (LocRole::green(random_point(rng, k)), false),
    }
}

fn random_agent<R: Rng + ?Sized>(rng: &mut R, p: &SelfStabParams) -> SelfStabAgentState {
    match rng.gen_range(0..3) {
        0 => SelfStabAgentState::Buffer(BufferState {
            index: rng.gen_range(1..=p.line.len()),
        }),
        1 => {
            let progress = match rng.gen_range(0..p.tosses + 2) {
                0 => Progress::Leader,
                1 => Progress::Follower,
                i => Progress::Counter(i - 1),
            };
            SelfStabAgentState::Election(ElectionState {
                coin: any_coin(rng),
                progress,
            })
        }
        _ => {
            let (role, blue) = random_role(rng, p.k);
            let deadline = blue.then(|| rng.gen_range(0..p.deadline));
            localise(role, any_coin(rng), deadline)
        }
    }
}

/// Builds the starting configuration for `recipe`. Index 0 plays the leader
/// where the recipe has one.
pub fn init_adversarial<R: Rng + ?Sized>(
    recipe: Recipe,
    gt: &GroundTruth,
    p: &SelfStabParams,
    rng: &mut R,
) -> Configuration<SelfStabAgentState> {
    let n = gt.n();
    let k = gt.k();
    let fresh_blue = |deadline| localise(LocRole::blue(), Coin::T, Some(deadline));
    match recipe {
        Recipe::Random => (0..n).map(|_| random_agent(rng, p)).collect(),
        Recipe::InconsistentGreens => (0..n)
            .map(|_| localise(LocRole::green(random_point(rng, k)), set_coin(rng), None))
            .collect(),
        Recipe::TwoLeaders => (0..n)
            .map(|i| {
                if i < 2 {
                    localise(LocRole::leader(k), Coin::H, None)
                } else {
                    fresh_blue(0)
                }
            })
            .collect(),
        Recipe::MidBuffer => (0..n)
            .map(|_| {
                SelfStabAgentState::Buffer(BufferState {
                    index: rng.gen_range(1..=p.line.len()),
                })
            })
            .collect(),
        Recipe::AllBufferRed => (0..n)
            .map(|_| {
                SelfStabAgentState::Buffer(BufferState {
                    index: rng.gen_range(1..=p.line.red_len),
                })
            })
            .collect(),
        Recipe::ExpiredDeadlines => (0..n)
            .map(|i| {
                if i == 0 {
                    localise(LocRole::leader(k), Coin::H, None)
                } else {
                    fresh_blue(p.deadline.saturating_sub(1))
                }
            })
            .collect(),
        Recipe::ConsistentGreens => (0..n)
            .map(|i| localise(LocRole::green(gt.point(i)), set_coin(rng), None))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn names_round_trip() {
        for r in Recipe::ALL {
            assert_eq!(r.name().parse::<Recipe>().unwrap(), r);
        }
        assert!("nope".parse::<Recipe>().is_err());
    }

    #[test]
    fn random_states_are_well_formed() {
        let pts: Vec<Point> = (0..64).map(|i| Point::from([i as f64 / 64.0, (i * i % 61) as f64])).collect();
        let gt = GroundTruth::new(2, &pts, Some(0)).unwrap();
        let p = SelfStabParams::new(64, 2, 3, 16.0, 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let config = init_adversarial(Recipe::Random, &gt, &p, &mut rng);
        for s in config.iter() {
            match s {
                SelfStabAgentState::Buffer(b) => assert!((1..=p.line.len()).contains(&b.index)),
                SelfStabAgentState::Election(e) => {
                    if let Progress::Counter(i) = e.progress {
                        assert!((1..=p.tosses).contains(&i));
                    }
                }
                SelfStabAgentState::Localise(l) => {
                    assert_eq!(l.deadline.is_some(), matches!(l.role, LocRole::Blue(_)));
                    if let LocRole::Blue(b) = &l.role {
                        assert!(b.contact_count() <= 2);
                    }
                }
            }
        }
    }
}
