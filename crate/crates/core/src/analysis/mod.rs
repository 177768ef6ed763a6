//! Convergence experiments, scaling runs and the lemma verification suite.

mod corpus;
mod lemmas;
mod trial;

pub use corpus::{near_balanced, Corpus, CorpusInstance, SpeedPattern, CORPUS_FAMILIES, CORPUS_SPEEDS};
pub use lemmas::{verify_lemma_suite, CorpusCase, LemmaInstance, LemmaReport, LemmaSummary, Relation, LEMMA_TOL};
pub use trial::{
    measure_convergence, quantile, run_trial, ConvergenceSummary, HittingStats, InitSpec, StopCondition,
    TraceRow, TrialResult, TrialSetup,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Family, Graph};
use crate::potentials::{critical_value, gamma, CriticalConstant};
use crate::protocol::{ProtocolParams, Variant, Protocol};
use crate::spectral::{spectral_summary, SpeedProfile, EIGEN_TOL};

/// Rounds after which `Ψ₀ <= 4·ψ_c` holds with probability at least 3/4:
/// `2γ·ln(m/n)`.
pub fn psi_threshold_time(gamma: f64, total_weight: f64, n: usize) -> f64 {
    2.0 * gamma * (total_weight / n as f64).ln()
}

/// Round budget for reaching an exact equilibrium:
/// `607·n·(Δ²/λ₂)·s_max⁴/ε²`.
pub fn exact_nash_cap(g: &Graph, sp: &SpeedProfile, lambda2: f64) -> f64 {
    let delta = g.max_degree() as f64;
    let eps = sp.granularity_f64();
    607.0 * g.node_count() as f64 * delta * delta / lambda2 * sp.max().powi(4) / (eps * eps)
}

/// Tasks needed for the first threshold state to be a `2/(1+δ)`-approximate
/// equilibrium: `⌈8·δ·s_max·S·n²⌉`.
pub fn approx_nash_task_count(sp: &SpeedProfile, delta: f64) -> u64 {
    let n = sp.len() as f64;
    (8.0 * delta * sp.max() * sp.total() * n * n).ceil() as u64
}

/// One point of a scaling experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub family: Family,
    pub n: usize,
    pub tasks: u64,
    pub lambda2: f64,
    pub gamma: f64,
    pub psi_c: f64,
    pub median_rounds: Option<f64>,
    pub fraction_truncated: f64,
}

/// Settings shared by every point of a scaling experiment.
#[derive(Debug, Clone, Copy)]
pub struct ScalingSpec {
    /// Number of unit tasks as a function of `n`.
    pub tasks: fn(usize) -> u64,
    /// Speeds as a function of `n`.
    pub speeds: fn(usize) -> Result<SpeedProfile>,
    pub stop: StopCondition,
    pub trials: usize,
    pub round_cap: u64,
    pub seed: u64,
    pub constant: CriticalConstant,
}

/// Runs all-on-one-node experiments on `family` at each size and reports the
/// median hitting time of `spec.stop`.
pub fn scaling_experiment(family: &str, sizes: &[usize], spec: &ScalingSpec) -> Result<Vec<ScalingRow>> {
    let mut rows = Vec::new();
    for &size in sizes {
        let family = Family::with_size(family, size)?;
        let g = Graph::build(family)?;
        let n = g.node_count();
        let sp = (spec.speeds)(n)?;
        if sp.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: sp.len(),
            });
        }
        let lambda2 = spectral_summary(&g, &sp, EIGEN_TOL)?.lambda2;
        let psi_c = critical_value(&g, &sp, lambda2, spec.constant);
        let tasks = (spec.tasks)(n);
        let params = match spec.stop {
            StopCondition::ExactNash => ProtocolParams::for_exact_nash(&sp, spec.seed),
            _ => ProtocolParams::standard(&sp, Variant::Algorithm1, spec.seed),
        };
        let setup = TrialSetup {
            protocol: Protocol::new(&g, &sp, params)?,
            stop: spec.stop,
            round_cap: spec.round_cap,
            psi_threshold: 4.0 * psi_c,
            approx_eps: None,
            record_trace: false,
        };
        let summary = measure_convergence(&setup, &InitSpec::AllOnOne { tasks, node: 0 }, spec.trials)?;
        rows.push(ScalingRow {
            family,
            n,
            tasks,
            lambda2,
            gamma: gamma(&g, &sp, lambda2),
            psi_c,
            median_rounds: summary.stop_stats.map(|s| s.median),
            fraction_truncated: summary.fraction_truncated,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
