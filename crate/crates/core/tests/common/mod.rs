#![allow(dead_code)]

use spploc::engine::GroundTruth;
use spploc::harness::generate_uniform;
use spploc::rng::{trial_rng, StreamPurpose};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper tail of Pearson's statistic against equal expected counts.
pub fn chi_square_p(observed: &[u64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let expected = total as f64 / observed.len() as f64;
    let stat: f64 = observed
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    dist.sf(stat)
}

pub fn uniform_truth(n: usize, k: usize, seed: u64) -> GroundTruth {
    let mut rng = trial_rng(seed, n, 0, StreamPurpose::Positions);
    generate_uniform(n, k, &mut rng, false).unwrap()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

pub mod vector_audit {
    use spploc::engine::{run_trial_observed, verify_silence, GroundTruth, Interaction, StopRule, UniformScheduler};
    use spploc::rng::TrialRng;
    use spploc::vector_loc::{compute_offsets, oracle_vector_converged, VectorLabel, VectorPositioning};

    const EXACT: f64 = 1e-12;

    #[derive(Debug, Default)]
    pub struct Epoch {
        pub interactions: u64,
        pub raises: u64,
        pub converged: bool,
        pub silent: bool,
        pub offsets_preserved: bool,
        pub violations: Vec<String>,
    }

    /// Runs vector positioning to convergence while checking, on every
    /// interaction, that labels only rise, that no offset passes the
    /// maximum, and that agents attaining the maximum pass it on. The maximum
    /// itself is recomputed every `audit_every` interactions.
    pub fn run_epoch(
        gt: &GroundTruth,
        labels: Vec<VectorLabel>,
        rng: TrialRng,
        max_parallel_time: f64,
        audit_every: u64,
        check_silence: bool,
    ) -> Epoch {
        let k = gt.k();
        let m = compute_offsets(&labels, gt);
        let attains = |x: &VectorLabel, i: usize, j: usize| (x[j] - gt.position(i)[j] - m[j]).abs() <= EXACT;
        let mut epoch = Epoch::default();
        let mut watch = |ev: &Interaction<'_, VectorLabel>| {
            let (i, r) = (ev.initiator, ev.responder);
            let before = &ev.config[i];
            let (after, _) = ev.update.resolve(before, &ev.config[r]);
            if after != *before {
                epoch.raises += 1;
            }
            for j in 0..k {
                if after[j] < before[j] {
                    epoch.violations.push(format!("t={} agent {i} coordinate {j} decreased", ev.t));
                }
                if after[j] - gt.position(i)[j] > m[j] + EXACT {
                    epoch.violations.push(format!("t={} agent {i} offset {j} above the maximum", ev.t));
                }
                if attains(&ev.config[r], r, j) && !attains(&after, i, j) {
                    epoch.violations.push(format!("t={} agent {i} did not take up offset {j}", ev.t));
                }
            }
            if ev.t.is_multiple_of(audit_every) {
                let now = compute_offsets(ev.config, gt);
                if (0..k).any(|j| (now[j] - m[j]).abs() > EXACT) {
                    epoch.violations.push(format!("t={} maximum drifted", ev.t));
                }
            }
        };
        let n = gt.n();
        let stop = StopRule::new(|c: &[VectorLabel]| oracle_vector_converged(c, gt, EXACT), max_parallel_time, n);
        let mut sched = UniformScheduler::new(rng);
        let out = run_trial_observed(
            &VectorPositioning,
            gt,
            labels.into_iter().collect(),
            &mut sched,
            &stop,
            &mut watch,
        )
        .expect("vector positioning never faults");
        let end = compute_offsets(out.config.states(), gt);
        epoch.interactions = out.result.interactions;
        epoch.converged = out.result.converged;
        epoch.offsets_preserved = (0..k).all(|j| (end[j] - m[j]).abs() <= EXACT);
        epoch.silent = check_silence && out.result.converged && verify_silence(&VectorPositioning, &out.config, gt);
        epoch
    }
}
