use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig, PositionSource, ProtocolKind, LABEL_RANGE};
use super::positions::{generate_uniform, PositionError, PositionFile, GENERAL_POSITION_LIMIT};
use crate::engine::{
    run_trial, run_trial_observed, verify_silence, Configuration, GroundTruth, Interaction, Protocol, StopRule,
    TrialError, TrialOutcome, TrialResult, UniformScheduler, Update,
};
use crate::epidemics::{self, epidemic_complete, KContactEpidemic};
use crate::leader_loc::{self, oracle_localized, ImprovedLine, LeaderLocalisation, LocRole};
use crate::rng::{trial_rng, StreamPurpose, TrialRng};
use crate::selfstab::{self, init_adversarial, oracle_selfstab_converged, SelfStabAgentState, SelfStabParams, SelfStabilising};
use crate::vector_loc::{self, compute_offsets, initial_labels, oracle_vector_converged, VectorPositioning};

/// Tolerance at which localisation results are audited after a run.
pub const ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Positions(#[from] PositionError),
}

/// One row of output per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub protocol: ProtocolKind,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub trial: usize,
    pub interactions: u64,
    pub parallel_time: f64,
    pub converged: bool,
    pub silence_verified: bool,
    pub extras: BTreeMap<String, String>,
}

impl ResultRow {
    fn new(cfg: &ExperimentConfig, n: usize, trial: usize) -> Self {
        ResultRow {
            protocol: cfg.protocol,
            n,
            k: cfg.reported_k(),
            seed: cfg.base_seed,
            trial,
            interactions: 0,
            parallel_time: 0.0,
            converged: false,
            silence_verified: false,
            extras: BTreeMap::new(),
        }
    }

    /// Whether the trial stopped on an error rather than on its stop rule.
    pub fn aborted(&self) -> bool {
        self.extras.contains_key("abort")
    }

    fn abort(&mut self, reason: impl std::fmt::Display) {
        let text = reason.to_string().replace([';', '='], " ");
        self.extras.insert("abort".into(), text);
    }

    fn extra(&mut self, key: &str, value: impl std::fmt::Display) {
        self.extras.insert(key.into(), value.to_string());
    }
}

/// The protocol's theoretical time bound (unit constant) at size `n`.
pub fn time_bound(cfg: &ExperimentConfig, n: usize) -> f64 {
    match cfg.protocol {
        ProtocolKind::KContact => epidemics::time_bound(n, cfg.k_contact),
        ProtocolKind::LeaderLoc => leader_loc::time_bound(n, cfg.k),
        ProtocolKind::Improved1d => leader_loc::improved_time_bound(n),
        ProtocolKind::SelfStab => selfstab::time_bound(n, cfg.k),
        ProtocolKind::Vector => vector_loc::time_bound(n),
    }
}

/// Runs every `(n, trial)` of the grid. Trials run in parallel; rows come
/// back in `(n, trial)` order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    cfg.validate()?;
    let file = match &cfg.positions {
        PositionSource::Uniform => None,
        PositionSource::File(path) => {
            let f = PositionFile::read(path, cfg.k)?;
            let largest = cfg.n_grid.iter().copied().max().unwrap_or(0);
            f.ground_truth(largest, cfg.protocol.is_localisation())?;
            Some(f)
        }
    };
    let jobs: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(n, trial)| run_one(cfg, file.as_ref(), n, trial))
        .collect())
}

/// Ground truth for one trial: the file prefix, or fresh uniform points.
pub fn trial_ground_truth(
    cfg: &ExperimentConfig,
    file: Option<&PositionFile>,
    n: usize,
    trial: usize,
) -> Result<GroundTruth, PositionError> {
    match file {
        Some(f) => f.ground_truth(n, false),
        None => {
            let mut rng = trial_rng(cfg.base_seed, n, trial as u64, StreamPurpose::Positions);
            let check = cfg.protocol.is_localisation() && binomial_small(n, cfg.k + 1);
            generate_uniform(n, cfg.k, &mut rng, check)
        }
    }
}

fn binomial_small(n: usize, r: usize) -> bool {
    let mut c: u64 = 1;
    for i in 0..r as u64 {
        c = c.saturating_mul(n as u64 - i) / (i + 1);
        if c > GENERAL_POSITION_LIMIT {
            return false;
        }
    }
    true
}

pub fn run_one(cfg: &ExperimentConfig, file: Option<&PositionFile>, n: usize, trial: usize) -> ResultRow {
    let mut row = ResultRow::new(cfg, n, trial);
    let gt = match trial_ground_truth(cfg, file, n, trial) {
        Ok(gt) => gt,
        Err(e) => {
            row.abort(e);
            return row;
        }
    };
    let bound = time_bound(cfg, n);
    row.extra("bound", bound);
    let runner = Runner {
        cfg,
        gt: &gt,
        trial,
        max_time: cfg.budget_multiplier * bound,
    };
    let outcome = match cfg.protocol {
        ProtocolKind::KContact => runner.kcontact(&mut row),
        ProtocolKind::LeaderLoc => runner.leaderloc(&LeaderLocalisation::new(cfg.k, cfg.tol), &mut row),
        ProtocolKind::Improved1d => runner.leaderloc(&ImprovedLine { tol: cfg.tol }, &mut row),
        ProtocolKind::SelfStab => runner.selfstab(&mut row),
        ProtocolKind::Vector => runner.vector(&mut row),
    };
    match outcome {
        Ok(result) => {
            row.interactions = result.interactions;
            row.parallel_time = result.parallel_time;
            row.converged = result.converged;
            row.silence_verified = result.silence_verified;
            row.extras.extend(result.extras);
        }
        Err(e) => row.abort(e),
    }
    row
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    gt: &'a GroundTruth,
    trial: usize,
    max_time: f64,
}

impl Runner<'_> {
    fn rng(&self, purpose: StreamPurpose) -> TrialRng {
        trial_rng(self.cfg.base_seed, self.gt.n(), self.trial as u64, purpose)
    }

    fn scheduler(&self) -> UniformScheduler<TrialRng> {
        UniformScheduler::new(self.rng(StreamPurpose::Schedule))
    }

    fn finish<P: Protocol>(&self, protocol: &P, outcome: &mut TrialOutcome<P::State>) {
        let r = &mut outcome.result;
        if r.converged && self.gt.n() <= self.cfg.silence_max_n {
            r.silence_verified = verify_silence(protocol, &outcome.config, self.gt);
        }
    }

    fn kcontact(&self, row: &mut ResultRow) -> Result<TrialResult, TrialError> {
        let k = self.cfg.k_contact;
        let protocol = KContactEpidemic::new(k);
        let init = epidemics::initial_configuration(self.gt.n(), k, &mut self.rng(StreamPurpose::InitialConfig));
        let stop = StopRule::new(epidemic_complete, self.max_time, self.gt.n());
        let mut outcome = run_trial(&protocol, self.gt, init, &mut self.scheduler(), &stop)?;
        self.finish(&protocol, &mut outcome);
        row.extra("greens", k.min(self.gt.n()));
        Ok(outcome.result)
    }

    fn leaderloc<P: Protocol<State = LocRole>>(&self, protocol: &P, row: &mut ResultRow) -> Result<TrialResult, TrialError> {
        let init = leader_loc::initial_configuration(self.gt);
        let all_positioned = |c: &[LocRole]| c.iter().all(LocRole::is_positioned);
        let stop = StopRule::new(all_positioned, self.max_time, self.gt.n());
        let mut outcome = run_trial(protocol, self.gt, init, &mut self.scheduler(), &stop)?;
        self.finish(protocol, &mut outcome);
        if outcome.result.converged {
            let ok = oracle_localized(outcome.config.states(), self.gt, ORACLE_TOL);
            row.extra("oracle", if ok { "pass" } else { "fail" });
        }
        Ok(outcome.result)
    }

    fn vector(&self, row: &mut ResultRow) -> Result<TrialResult, TrialError> {
        let recipe = self.cfg.label_recipe().expect("validated");
        let init = initial_labels(self.gt, recipe, LABEL_RANGE, &mut self.rng(StreamPurpose::InitialConfig));
        let m = compute_offsets(init.states(), self.gt);
        let tol = self.cfg.tol;
        let gt = self.gt;
        let stop = StopRule::new(move |c: &[_]| oracle_vector_converged(c, gt, tol), self.max_time, gt.n());
        let mut outcome = run_trial(&VectorPositioning, gt, init, &mut self.scheduler(), &stop)?;
        self.finish(&VectorPositioning, &mut outcome);
        let m_end = compute_offsets(outcome.config.states(), gt);
        let text = |p: &crate::geometry::Point| p.coords().iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        row.extra("offsets", text(&m));
        row.extra("offsets_preserved", m == m_end);
        Ok(outcome.result)
    }

    fn selfstab(&self, row: &mut ResultRow) -> Result<TrialResult, TrialError> {
        let cfg = self.cfg;
        let n = self.gt.n();
        let recipe = cfg.selfstab_recipe().expect("validated");
        let params = SelfStabParams::new(n, cfg.k, cfg.buffer_d, cfg.deadline_c, cfg.tol);
        let protocol = SelfStabilising { params };
        let init: Configuration<SelfStabAgentState> =
            init_adversarial(recipe, self.gt, &params, &mut self.rng(StreamPurpose::InitialConfig));
        let gt = self.gt;
        let tol = cfg.tol;
        let stop = StopRule::new(move |c: &[_]| oracle_selfstab_converged(c, gt, tol), self.max_time, n);
        let mut resets = 0u64;
        let mut count_resets = |ev: &Interaction<'_, SelfStabAgentState>| {
            let fresh = |old: &SelfStabAgentState, new: &SelfStabAgentState| {
                *new == SelfStabAgentState::RESET && *old != SelfStabAgentState::RESET
            };
            let (u, v) = (&ev.config[ev.initiator], &ev.config[ev.responder]);
            resets += match ev.update {
                Update::Unchanged => 0,
                Update::Initiator(a) => u64::from(fresh(u, a)),
                Update::Responder(b) => u64::from(fresh(v, b)),
                Update::Both(a, b) => u64::from(fresh(u, a)) + u64::from(fresh(v, b)),
            };
        };
        let mut outcome =
            run_trial_observed(&protocol, gt, init, &mut self.scheduler(), &stop, &mut count_resets)?;
        self.finish(&protocol, &mut outcome);
        let leaders = outcome
            .config
            .iter()
            .filter(|s| matches!(s.role(), Some(LocRole::Leader(_))))
            .count();
        row.extra("recipe", recipe);
        row.extra("resets", resets);
        row.extra("leaders", leaders);
        Ok(outcome.result)
    }
}
