mod common;

use common::uniform_truth;
use spploc::engine::{
    run_trial, run_trial_observed, verify_silence, Configuration, GroundTruth, Interaction, StopRule, TrialOutcome,
    UniformScheduler,
};
use spploc::geometry::DEFAULT_TOL;
use spploc::leader_loc::LocRole;
use spploc::rng::{trial_rng, StreamPurpose};
use spploc::selfstab::{
    all_pairs_consistent, init_adversarial, oracle_selfstab_converged, time_bound, BufferState, Coin,
    ElectionProtocol, ElectionState, LocaliseState, Recipe, SelfStabAgentState, SelfStabParams, SelfStabilising,
    DEFAULT_BUFFER_D, DEFAULT_DEADLINE_C,
};

fn params(n: usize, k: usize) -> SelfStabParams {
    SelfStabParams::new(n, k, DEFAULT_BUFFER_D, DEFAULT_DEADLINE_C, DEFAULT_TOL)
}

/// Runs to convergence and counts agents sent back to the start of the line.
fn run(gt: &GroundTruth, init: Configuration<SelfStabAgentState>, seed: u64) -> (TrialOutcome<SelfStabAgentState>, u64) {
    let n = gt.n();
    let protocol = SelfStabilising { params: params(n, gt.k()) };
    let stop = StopRule::new(|c: &[_]| oracle_selfstab_converged(c, gt, DEFAULT_TOL), 64.0 * time_bound(n, gt.k()), n);
    let mut resets = 0;
    let mut count = |ev: &Interaction<'_, SelfStabAgentState>| {
        let (a, b) = ev.update.resolve(&ev.config[ev.initiator], &ev.config[ev.responder]);
        for (old, new) in [(&ev.config[ev.initiator], a), (&ev.config[ev.responder], b)] {
            if new == SelfStabAgentState::RESET && *old != SelfStabAgentState::RESET {
                resets += 1;
            }
        }
    };
    let mut sched = UniformScheduler::new(trial_rng(seed, n, 0, StreamPurpose::Schedule));
    let out = run_trial_observed(&protocol, gt, init, &mut sched, &stop, &mut count).unwrap();
    (out, resets)
}

#[test]
fn clean_election_pairs_heads_with_tails() {
    let n = 1024;
    let gt = uniform_truth(n, 1, 0);
    let protocol = ElectionProtocol::for_population(n);
    let init = Configuration::new(vec![ElectionState::START; n]);
    let mut imbalance = Vec::new();
    let (mut heads, mut tails) = (0i64, 0i64);
    let mut watch = |ev: &Interaction<'_, ElectionState>| {
        let (a, b) = ev.update.resolve(&ev.config[ev.initiator], &ev.config[ev.responder]);
        for (old, new) in [(&ev.config[ev.initiator], a), (&ev.config[ev.responder], b)] {
            heads += i64::from(new.coin == Coin::H) - i64::from(old.coin == Coin::H);
            tails += i64::from(new.coin == Coin::T) - i64::from(old.coin == Coin::T);
        }
        if heads != tails {
            imbalance.push(ev.t);
        }
    };
    let stop = StopRule::new(|c: &[ElectionState]| c.iter().all(|s| s.is_done() && s.coin != Coin::N), 200.0 * (n as f64).ln(), n);
    let mut sched = UniformScheduler::new(trial_rng(1, n, 0, StreamPurpose::Schedule));
    let out = run_trial_observed(&protocol, &gt, init, &mut sched, &stop, &mut watch).unwrap();
    assert!(imbalance.is_empty());
    assert!(out.result.converged);
    let h = out.config.iter().filter(|s| s.coin == Coin::H).count();
    let t = out.config.iter().filter(|s| s.coin == Coin::T).count();
    assert_eq!(h, t);
    assert_eq!(h + t, n);
}

#[test]
fn honest_deadlines_never_fire() {
    let mut runs = 0;
    for k in 1..=2 {
        for (n, trials) in [(1 << 10, 12u64), (1 << 12, 6), (1 << 14, 2)] {
            let gt = uniform_truth(n, k, 11);
            for trial in 0..trials {
                let init: Configuration<SelfStabAgentState> = (0..n)
                    .map(|i| {
                        let (role, coin, deadline) = if i == 0 {
                            (LocRole::leader(k), Coin::H, None)
                        } else {
                            (LocRole::blue(), Coin::T, Some(0))
                        };
                        SelfStabAgentState::Localise(LocaliseState { role, coin, deadline })
                    })
                    .collect();
                let (out, resets) = run(&gt, init, trial);
                assert!(out.result.converged, "n={n} k={k} trial={trial}");
                assert_eq!(resets, 0, "n={n} k={k} trial={trial}");
                runs += 1;
            }
        }
    }
    assert_eq!(runs, 40);
}

#[test]
fn every_recipe_recovers() {
    let n = 128;
    for k in 1..=2 {
        for recipe in Recipe::ALL {
            for seed in 0..4 {
                let gt = uniform_truth(n, k, seed);
                let mut rng = trial_rng(seed, n, 0, StreamPurpose::InitialConfig);
                let init = init_adversarial(recipe, &gt, &params(n, k), &mut rng);
                let (out, _) = run(&gt, init, seed);
                assert!(out.result.converged, "{recipe} k={k} seed={seed}");
                assert!(all_pairs_consistent(out.config.states(), &gt, 1e-6));
                let leaders = out.config.iter().filter(|s| matches!(s.role(), Some(LocRole::Leader(_)))).count();
                assert!(leaders <= 1, "{recipe} k={k} seed={seed}: {leaders} leaders");
                assert!(verify_silence(&SelfStabilising { params: params(n, k) }, &out.config, &gt));
            }
        }
    }
}

#[test]
fn consistent_labels_are_left_alone() {
    let n = 200;
    let gt = uniform_truth(n, 2, 3);
    let init = init_adversarial(Recipe::ConsistentGreens, &gt, &params(n, 2), &mut trial_rng(0, n, 0, StreamPurpose::InitialConfig));
    let before = init.states().to_vec();
    let protocol = SelfStabilising { params: params(n, 2) };
    let never = StopRule::new(|_: &[SelfStabAgentState]| false, 50.0, n);
    let mut sched = UniformScheduler::new(trial_rng(0, n, 0, StreamPurpose::Schedule));
    let out = run_trial(&protocol, &gt, init, &mut sched, &never).unwrap();
    assert_eq!(out.result.last_change_interaction, 0);
    assert_eq!(out.config.states(), before.as_slice());
}

#[test]
fn oracle_examples() {
    let n = 60;
    let gt = uniform_truth(n, 2, 9);
    let init = init_adversarial(Recipe::ConsistentGreens, &gt, &params(n, 2), &mut trial_rng(0, n, 0, StreamPurpose::InitialConfig));
    let good = init.into_states();
    assert!(oracle_selfstab_converged(&good, &gt, 1e-6));
    assert!(all_pairs_consistent(&good, &gt, 1e-6));

    let mut corrupted = good.clone();
    if let SelfStabAgentState::Localise(LocaliseState { role: LocRole::Green(g), .. }) = &mut corrupted[30] {
        g.label[0] += 0.01;
    } else {
        panic!("expected a green agent");
    }
    assert!(!oracle_selfstab_converged(&corrupted, &gt, 1e-6));
    assert!(!all_pairs_consistent(&corrupted, &gt, 1e-6));

    let mut buffered = good;
    buffered[12] = SelfStabAgentState::Buffer(BufferState { index: 4 });
    assert!(!oracle_selfstab_converged(&buffered, &gt, 1e-6));
    assert!(!all_pairs_consistent(&buffered, &gt, 1e-6));
}
