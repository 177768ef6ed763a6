use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potentials::{fmt17, snapshot, PotentialSnapshot};
use crate::protocol::{derive_key, trial_seed, is_approx_nash, is_nash, LoadState, Protocol};

/// When a trial stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub enum StopCondition {
    /// First round with `Ψ₀ <= 4·ψ_c`.
    PsiThreshold,
    /// First round that is an `eps`-approximate equilibrium.
    ApproxNash(f64),
    /// First round without a non-Nash edge.
    ExactNash,
    /// After exactly this many rounds.
    FixedRounds(u64),
}

/// How a trial's initial state is produced.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub enum InitSpec {
    AllOnOne { tasks: u64, node: usize },
    /// Each unit task on a uniformly random node; reseeded per trial.
    RandomPlacement { tasks: u64, seed: u64 },
    /// Weights uniform in `(0, 1]`; all on `node` if given, else random
    /// nodes. Reseeded per trial.
    WeightedRandom { tasks: usize, seed: u64, node: Option<usize> },
    Explicit(LoadState),
}

impl InitSpec {
    pub fn materialize(&self, n: usize, trial: u64) -> LoadState {
        match self {
            InitSpec::AllOnOne { tasks, node } => LoadState::all_on_one(n, *tasks, *node),
            InitSpec::RandomPlacement { tasks, seed } => {
                LoadState::random_placement(n, *tasks, derive_key(&[*seed, trial]))
            }
            InitSpec::WeightedRandom { tasks, seed, node } => {
                LoadState::weighted_random(n, *tasks, derive_key(&[*seed, trial]), *node)
            }
            InitSpec::Explicit(state) => state.clone(),
        }
    }
}

/// Everything that stays fixed across the trials of one experiment.
#[derive(Debug, Clone, Copy)]
pub struct TrialSetup<'a> {
    pub protocol: Protocol<'a>,
    pub stop: StopCondition,
    pub round_cap: u64,
    /// `4·ψ_c`.
    pub psi_threshold: f64,
    /// The ε tracked for approximate-equilibrium hitting times.
    pub approx_eps: Option<f64>,
    pub record_trace: bool,
}

/// One row of a per-trial trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub round: u64,
    pub psi0: f64,
    pub psi1: f64,
    pub l_delta: f64,
    pub max_load: f64,
    pub min_load: f64,
    /// Tasks moved in the round that produced this state.
    pub moves: u64,
}

impl TraceRow {
    pub const HEADER: &'static str = "round,psi0,psi1,l_delta,max_load,min_load,moves";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.round,
            fmt17(self.psi0),
            fmt17(self.psi1),
            fmt17(self.l_delta),
            fmt17(self.max_load),
            fmt17(self.min_load),
            self.moves
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial_id: u64,
    /// Identifies the trial's random streams; derived from the master seed.
    pub seed: u64,
    pub rounds_to_psi_threshold: Option<u64>,
    pub rounds_to_approx_ne: Option<u64>,
    pub rounds_to_exact_ne: Option<u64>,
    /// Whether the first state below the `Ψ₀` threshold was an approximate
    /// equilibrium for the tracked ε.
    pub approx_at_psi_threshold: Option<bool>,
    pub rounds_run: u64,
    pub final_snapshot: PotentialSnapshot,
    #[serde(skip)]
    pub final_state: LoadState,
    #[serde(skip)]
    pub psi_threshold_state: Option<LoadState>,
    pub truncated: bool,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl TrialResult {
    pub fn hitting_time(&self, stop: StopCondition) -> Option<u64> {
        match stop {
            StopCondition::PsiThreshold => self.rounds_to_psi_threshold,
            StopCondition::ApproxNash(_) => self.rounds_to_approx_ne,
            StopCondition::ExactNash => self.rounds_to_exact_ne,
            StopCondition::FixedRounds(r) => (!self.truncated).then_some(r),
        }
    }
}

/// Runs the protocol from `init` until the stop condition holds or
/// `round_cap` rounds have been executed. Hitting times of every tracked
/// condition are recorded along the way.
pub fn run_trial(setup: &TrialSetup<'_>, init: LoadState, trial_id: u64) -> Result<TrialResult> {
    let protocol = &setup.protocol;
    let (g, sp) = (protocol.graph, protocol.speeds);
    init.validate(sp)?;
    if setup.round_cap == 0 {
        return Err(Error::Config("round cap must be at least 1".into()));
    }
    let approx_eps = match setup.stop {
        StopCondition::ApproxNash(eps) => Some(eps),
        _ => setup.approx_eps,
    };
    if let Some(eps) = approx_eps {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Config(format!("approximation eps must be in (0, 1), got {eps}")));
        }
    }

    let mut state = init;
    let mut round = 0u64;
    let mut moves = 0u64;
    let mut psi_hit = None;
    let mut approx_hit = None;
    let mut exact_hit = None;
    let mut approx_at_psi = None;
    let mut psi_state = None;
    let mut trace = Vec::new();

    let truncated = loop {
        let snap = snapshot(sp, &state, round);
        if setup.record_trace {
            let loads = state.loads(sp);
            trace.push(TraceRow {
                round,
                psi0: snap.psi0,
                psi1: snap.psi1,
                l_delta: snap.l_delta,
                max_load: loads.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                min_load: loads.iter().copied().fold(f64::INFINITY, f64::min),
                moves,
            });
        }
        if psi_hit.is_none() && snap.psi0 <= setup.psi_threshold {
            psi_hit = Some(round);
            approx_at_psi = approx_eps.map(|eps| is_approx_nash(g, sp, &state, eps));
            psi_state = Some(state.clone());
        }
        if approx_hit.is_none() {
            if let Some(eps) = approx_eps {
                if is_approx_nash(g, sp, &state, eps) {
                    approx_hit = Some(round);
                }
            }
        }
        let nash = exact_hit.is_some() || is_nash(g, sp, &state);
        if nash && exact_hit.is_none() {
            exact_hit = Some(round);
        }

        let done = match setup.stop {
            StopCondition::PsiThreshold => psi_hit.is_some(),
            StopCondition::ApproxNash(_) => approx_hit.is_some(),
            StopCondition::ExactNash => exact_hit.is_some(),
            StopCondition::FixedRounds(r) => round >= r,
        };
        if done {
            break false;
        }
        // Nothing moves from an equilibrium, so no later round can differ.
        if nash {
            break true;
        }
        if round >= setup.round_cap {
            break true;
        }
        let out = protocol.step_round(&state, trial_id, round)?;
        moves = out.tasks_moved();
        state = out.state;
        round += 1;
    };

    Ok(TrialResult {
        trial_id,
        seed: trial_seed(protocol.params.rng_seed, trial_id),
        rounds_to_psi_threshold: psi_hit,
        rounds_to_approx_ne: approx_hit,
        rounds_to_exact_ne: exact_hit,
        approx_at_psi_threshold: approx_at_psi,
        rounds_run: round,
        final_snapshot: snapshot(sp, &state, round),
        final_state: state,
        psi_threshold_state: psi_state,
        truncated,
        trace,
    })
}

/// Order statistics of the hitting times of the trials that reached a
/// condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingStats {
    pub reached: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl HittingStats {
    pub fn from_times(times: &[u64]) -> Option<HittingStats> {
        if times.is_empty() {
            return None;
        }
        let mut sorted: Vec<f64> = times.iter().map(|&t| t as f64).collect();
        sorted.sort_by(f64::total_cmp);
        Some(HittingStats {
            reached: sorted.len(),
            min: sorted[0],
            q1: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q3: quantile(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        })
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSummary {
    pub trials: usize,
    pub stop: StopCondition,
    /// Statistics of the requested stop condition's hitting time.
    pub stop_stats: Option<HittingStats>,
    pub psi_threshold: Option<HittingStats>,
    pub approx_ne: Option<HittingStats>,
    pub exact_ne: Option<HittingStats>,
    pub fraction_truncated: f64,
    pub results: Vec<TrialResult>,
}

impl ConvergenceSummary {
    fn from_results(stop: StopCondition, results: Vec<TrialResult>) -> ConvergenceSummary {
        let collect = |f: &dyn Fn(&TrialResult) -> Option<u64>| {
            HittingStats::from_times(&results.iter().filter_map(f).collect::<Vec<_>>())
        };
        ConvergenceSummary {
            trials: results.len(),
            stop,
            stop_stats: collect(&|r| r.hitting_time(stop)),
            psi_threshold: collect(&|r| r.rounds_to_psi_threshold),
            approx_ne: collect(&|r| r.rounds_to_approx_ne),
            exact_ne: collect(&|r| r.rounds_to_exact_ne),
            fraction_truncated: results.iter().filter(|r| r.truncated).count() as f64
                / results.len().max(1) as f64,
            results,
        }
    }

    /// Fraction of trials whose stop condition held within `rounds` rounds.
    pub fn fraction_within(&self, rounds: u64) -> f64 {
        let hits = self
            .results
            .iter()
            .filter(|r| r.hitting_time(self.stop).is_some_and(|t| t <= rounds))
            .count();
        hits as f64 / self.trials.max(1) as f64
    }
}

/// Runs `trials` independent trials in parallel. Trial `t` uses stream key
/// `(seed, t, round, node)`, so results do not depend on scheduling.
pub fn measure_convergence(setup: &TrialSetup<'_>, init: &InitSpec, trials: usize) -> Result<ConvergenceSummary> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let n = setup.protocol.graph.node_count();
    let results = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(setup, init.materialize(n, t), t))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceSummary::from_results(setup.stop, results))
}
