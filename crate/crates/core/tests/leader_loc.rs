mod common;

use std::collections::HashMap;

use common::uniform_truth;
use proptest::prelude::*;
use spploc::engine::{run_trial, run_trial_observed, verify_silence, GroundTruth, Interaction, StopRule, UniformScheduler};
use spploc::geometry::{consistent, Point, DEFAULT_TOL};
use spploc::harness::ORACLE_TOL;
use spploc::leader_loc::{initial_configuration, oracle_localized, time_bound, ImprovedLine, LeaderLocalisation, LocRole};
use spploc::rng::{trial_rng, StreamPurpose};

fn all_positioned(c: &[LocRole]) -> bool {
    c.iter().all(LocRole::is_positioned)
}

fn localise(gt: &GroundTruth, seed: u64) -> Vec<LocRole> {
    let n = gt.n();
    let stop = StopRule::new(all_positioned, 64.0 * time_bound(n, gt.k()), n);
    let mut sched = UniformScheduler::new(trial_rng(seed, n, 0, StreamPurpose::Schedule));
    let out = run_trial(&LeaderLocalisation::new(gt.k(), DEFAULT_TOL), gt, initial_configuration(gt), &mut sched, &stop)
        .unwrap();
    assert!(out.result.converged);
    out.config.into_states()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trace_invariants(seed in any::<u64>(), n in 10usize..90, k in 1usize..=3) {
        let gt = uniform_truth(n, k, seed);
        let mut labels: HashMap<usize, Point> = HashMap::new();
        labels.insert(0, Point::origin(k));
        let mut problems: Vec<String> = Vec::new();
        let mut watch = |ev: &Interaction<'_, LocRole>| {
            let (a, b) = ev.update.resolve(&ev.config[ev.initiator], &ev.config[ev.responder]);
            for (i, after) in [(ev.initiator, &a), (ev.responder, &b)] {
                match after {
                    LocRole::Leader(l) if l.registry.len() > k => problems.push(format!("registry {}", l.registry.len())),
                    LocRole::Blue(s) if s.contact_count() > k + 1 => problems.push(format!("contacts {}", s.contact_count())),
                    _ => {}
                }
                let Some(x) = after.label() else {
                    if labels.contains_key(&i) {
                        problems.push(format!("agent {i} lost its label"));
                    }
                    continue;
                };
                match labels.get(&i) {
                    Some(old) if old != x => problems.push(format!("agent {i} relabelled")),
                    Some(_) => {}
                    None => {
                        for (&j, y) in &labels {
                            if !consistent(x, y, gt.distance(i, j), 1e-6) {
                                problems.push(format!("agents {i} and {j} inconsistent"));
                            }
                        }
                        labels.insert(i, x.clone());
                    }
                }
            }
        };
        let stop = StopRule::new(all_positioned, 64.0 * time_bound(n, k), n);
        let mut sched = UniformScheduler::new(trial_rng(seed, n, 0, StreamPurpose::Schedule));
        let protocol = LeaderLocalisation::new(k, DEFAULT_TOL);
        let out = run_trial_observed(&protocol, &gt, initial_configuration(&gt), &mut sched, &stop, &mut watch).unwrap();
        prop_assert!(problems.is_empty(), "{:?}", &problems[..problems.len().min(5)]);
        prop_assert!(out.result.converged);
        prop_assert_eq!(labels.len(), n);
        prop_assert!(oracle_localized(out.config.states(), &gt, ORACLE_TOL));
        prop_assert!(verify_silence(&protocol, &out.config, &gt));
    }
}

#[test]
fn oracle_examples() {
    for k in 1..=3 {
        let gt = uniform_truth(150, k, 40 + k as u64);
        let config = localise(&gt, 1);
        assert!(oracle_localized(&config, &gt, ORACLE_TOL));

        let mut bumped = config.clone();
        if let LocRole::Green(g) = &mut bumped[7] {
            g.label[0] += 1e3 * ORACLE_TOL * 4.0;
        }
        assert!(!oracle_localized(&bumped, &gt, ORACLE_TOL), "k = {k}");

        let mut unpositioned = config.clone();
        unpositioned[9] = LocRole::blue();
        assert!(!oracle_localized(&unpositioned, &gt, ORACLE_TOL));

        let mut shifted = config.clone();
        if let LocRole::Leader(l) = &mut shifted[0] {
            l.label[0] = 0.5;
        }
        assert!(!oracle_localized(&shifted, &gt, ORACLE_TOL));
    }
}

#[test]
fn mirrored_labels_pass() {
    let gt = uniform_truth(80, 2, 8);
    let config: Vec<LocRole> = localise(&gt, 2)
        .into_iter()
        .map(|r| match r {
            LocRole::Green(mut g) => {
                g.label[1] = -g.label[1];
                LocRole::Green(g)
            }
            other => other,
        })
        .collect();
    assert!(oracle_localized(&config, &gt, ORACLE_TOL));
}

#[test]
fn improved_line_localises() {
    for seed in 0..10 {
        let n = 300;
        let gt = uniform_truth(n, 1, 70 + seed);
        let stop = StopRule::new(all_positioned, 64.0 * time_bound(n, 1), n);
        let mut sched = UniformScheduler::new(trial_rng(seed, n, 0, StreamPurpose::Schedule));
        let protocol = ImprovedLine { tol: DEFAULT_TOL };
        let out = run_trial(&protocol, &gt, initial_configuration(&gt), &mut sched, &stop).unwrap();
        assert!(out.result.converged);
        assert!(oracle_localized(out.config.states(), &gt, ORACLE_TOL));
        assert!(verify_silence(&protocol, &out.config, &gt));
    }
}
