//! One synchronous round of the selfish migration protocols and the
//! equilibrium predicates.
//!
//! Every task picks a neighbour `j` of its node `i` uniformly at random. If
//! the load gap `ℓ_i - ℓ_j` strictly exceeds `1/s_j`, it moves with
//! probability
//!
//! ```text
//! p_ij = deg(i)/d_ij · (ℓ_i - ℓ_j) / (α · (1/s_i + 1/s_j) · W_i)
//! ```
//!
//! so the expected weight crossing the edge is
//! `f_ij = (ℓ_i - ℓ_j) / (α · d_ij · (1/s_i + 1/s_j))`. All decisions in a
//! round are taken against the state at the start of the round.

mod rng;
mod state;

pub use rng::{derive_key, mix64, trial_seed, KeyedRng};
pub use state::{LoadState, Mode};
pub(crate) use state::widen;

use num_rational::Ratio;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::SpeedProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Unit tasks.
    Algorithm1,
    /// Weighted tasks.
    Algorithm2,
}

/// How the weighted protocol turns a load gap into a migration probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WeightedRule {
    /// Same expression as the unit-task protocol; the expected migrated
    /// weight equals `f_ij`.
    #[default]
    FlowMatched,
    /// `deg(i)/d_ij · (W_i - W_j) / (2α·W_i)`. Only differs from
    /// `FlowMatched` when speeds are not uniform.
    WeightDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub alpha: f64,
    pub rng_seed: u64,
    pub variant: Variant,
    pub weighted_rule: WeightedRule,
}

impl ProtocolParams {
    /// `α = 4·s_max`.
    pub fn standard(sp: &SpeedProfile, variant: Variant, rng_seed: u64) -> ProtocolParams {
        ProtocolParams {
            alpha: 4.0 * sp.max(),
            rng_seed,
            variant,
            weighted_rule: WeightedRule::default(),
        }
    }

    /// `α = 4·s_max/ε`, needed for convergence to an exact equilibrium when
    /// speeds have granularity `ε`.
    pub fn for_exact_nash(sp: &SpeedProfile, rng_seed: u64) -> ProtocolParams {
        ProtocolParams {
            alpha: 4.0 * sp.max() / sp.granularity_f64(),
            ..ProtocolParams::standard(sp, Variant::Algorithm1, rng_seed)
        }
    }

    pub fn with_alpha(self, alpha: f64) -> ProtocolParams {
        ProtocolParams { alpha, ..self }
    }

    pub fn with_seed(self, rng_seed: u64) -> ProtocolParams {
        ProtocolParams { rng_seed, ..self }
    }

    /// Rejects `α < 4·s_max`, where migration probabilities may exceed one.
    pub fn check_alpha(&self, sp: &SpeedProfile) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.alpha < 4.0 * sp.max() {
            return Err(Error::Config(format!(
                "alpha = {} is below 4·s_max = {}",
                self.alpha,
                4.0 * sp.max()
            )));
        }
        Ok(())
    }
}

/// Tasks moved over one directed edge in a round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Migration {
    pub from: usize,
    pub to: usize,
    pub tasks: u64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub state: LoadState,
    pub moves: Vec<Migration>,
}

impl RoundOutcome {
    pub fn tasks_moved(&self) -> u64 {
        self.moves.iter().map(|m| m.tasks).sum()
    }
}

/// `ℓ_i - ℓ_j > 1/s_j`. Exact in uniform mode; a plain strict float
/// comparison for weighted tasks, so ties never trigger a move.
pub fn exceeds_threshold(sp: &SpeedProfile, state: &LoadState, i: usize, j: usize) -> bool {
    match state {
        LoadState::Uniform { counts } => {
            // w_i/s_i - w_j/s_j > 1/s_j with s = a/b, multiplied through by a_i·a_j.
            let (ai, bi) = rational_parts(sp, i);
            let (aj, bj) = rational_parts(sp, j);
            let wi = i128::from(counts[i]);
            let wj = i128::from(counts[j]);
            wi * bi * aj - wj * bj * ai > bj * ai
        }
        LoadState::Weighted { .. } => {
            let li = state.node_weight(i) / sp.get(i);
            let lj = state.node_weight(j) / sp.get(j);
            li - lj > 1.0 / sp.get(j)
        }
    }
}

fn rational_parts(sp: &SpeedProfile, i: usize) -> (i128, i128) {
    let s = sp.rational(i);
    (i128::from(*s.numer()), i128::from(*s.denom()))
}

/// Directed edges `(i, j)` with `ℓ_i - ℓ_j > 1/s_j`.
pub fn non_nash_edges(g: &Graph, sp: &SpeedProfile, state: &LoadState) -> Vec<(usize, usize)> {
    g.directed_edges()
        .filter(|&(i, j)| exceeds_threshold(sp, state, i, j))
        .collect()
}

/// No edge has `ℓ_i - ℓ_j > 1/s_j`. For weighted tasks this is the threshold
/// state the weighted protocol converges to, not a per-task equilibrium.
pub fn is_nash(g: &Graph, sp: &SpeedProfile, state: &LoadState) -> bool {
    g.directed_edges()
        .all(|(i, j)| !exceeds_threshold(sp, state, i, j))
}

/// `(1 - eps)·ℓ_i - ℓ_j <= 1/s_j` on every directed edge.
pub fn is_approx_nash(g: &Graph, sp: &SpeedProfile, state: &LoadState, eps: f64) -> bool {
    let loads = state.loads(sp);
    g.directed_edges()
        .all(|(i, j)| (1.0 - eps) * loads[i] - loads[j] <= 1.0 / sp.get(j))
}

/// `ℓ_i - ℓ_j >= 1/s_j + ε/(s_i·s_j)` evaluated exactly in uniform mode.
/// Every non-Nash edge satisfies it when the speeds have granularity `ε`.
pub fn granularity_gap_holds(sp: &SpeedProfile, state: &LoadState, i: usize, j: usize) -> Option<bool> {
    let counts = state.counts()?;
    let si = widen(sp.rational(i));
    let sj = widen(sp.rational(j));
    let eps = widen(sp.granularity());
    // Multiply through by s_i·s_j.
    let lhs = Ratio::from_integer(i128::from(counts[i])) * sj - Ratio::from_integer(i128::from(counts[j])) * si;
    Some(lhs >= si + eps)
}

/// Moves single tasks across non-Nash edges until none remain. Deterministic;
/// terminates because every move lowers `Σ w_i(w_i+1)/(2 s_i)`.
pub fn settle_to_nash(g: &Graph, sp: &SpeedProfile, state: &LoadState) -> Result<LoadState> {
    let LoadState::Uniform { counts } = state else {
        return Err(Error::InvalidState("settling needs unit tasks".into()));
    };
    let mut current = LoadState::Uniform {
        counts: counts.clone(),
    };
    while let Some(&(i, j)) = non_nash_edges(g, sp, &current).first() {
        if let LoadState::Uniform { counts } = &mut current {
            counts[i] -= 1;
            counts[j] += 1;
        }
    }
    Ok(current)
}

/// The protocol bound to a network, speeds and parameters.
#[derive(Debug, Clone, Copy)]
pub struct Protocol<'a> {
    pub graph: &'a Graph,
    pub speeds: &'a SpeedProfile,
    pub params: ProtocolParams,
}

impl<'a> Protocol<'a> {
    pub fn new(graph: &'a Graph, speeds: &'a SpeedProfile, params: ProtocolParams) -> Result<Protocol<'a>> {
        if graph.node_count() != speeds.len() {
            return Err(Error::DimensionMismatch {
                expected: graph.node_count(),
                actual: speeds.len(),
            });
        }
        if !(params.alpha.is_finite() && params.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {}", params.alpha)));
        }
        Ok(Protocol {
            graph,
            speeds,
            params,
        })
    }

    fn check_state(&self, state: &LoadState) -> Result<()> {
        if state.node_count() != self.graph.node_count() {
            return Err(Error::DimensionMismatch {
                expected: self.graph.node_count(),
                actual: state.node_count(),
            });
        }
        if self.params.variant == Variant::Algorithm1 && state.mode() == Mode::Weighted {
            return Err(Error::InvalidState(
                "the unit-task protocol cannot run on weighted tasks".into(),
            ));
        }
        Ok(())
    }

    /// Probability that a task on `i` which picked neighbour `j` migrates.
    pub fn migration_probability(&self, state: &LoadState, i: usize, j: usize) -> Result<f64> {
        let g = self.graph;
        let d_ij = g.pair_degree(i, j)? as f64;
        if !exceeds_threshold(self.speeds, state, i, j) {
            return Ok(0.0);
        }
        let w_i = state.node_weight(i);
        if w_i <= 0.0 {
            return Err(Error::Internal(format!(
                "edge ({i}, {j}) exceeds the threshold although node {i} is empty"
            )));
        }
        let (s_i, s_j) = (self.speeds.get(i), self.speeds.get(j));
        let alpha = self.params.alpha;
        let degree_ratio = g.degree(i) as f64 / d_ij;
        let raw = match (self.params.variant, self.params.weighted_rule) {
            (Variant::Algorithm2, WeightedRule::WeightDifference) => {
                degree_ratio * (w_i - state.node_weight(j)) / (2.0 * alpha * w_i)
            }
            _ => {
                let gap = w_i / s_i - state.node_weight(j) / s_j;
                degree_ratio * gap / (alpha * (1.0 / s_i + 1.0 / s_j) * w_i)
            }
        };
        if raw > 1.0 && alpha >= 4.0 * self.speeds.max() {
            return Err(Error::Internal(format!(
                "migration probability {raw} on ({i}, {j}) exceeds 1 with alpha = {alpha}"
            )));
        }
        Ok(raw.clamp(0.0, 1.0))
    }

    /// Expected weight crossing `(i, j)`: `(ℓ_i - ℓ_j)/(α·d_ij·(1/s_i + 1/s_j))`
    /// on non-Nash edges, zero otherwise.
    pub fn expected_flow(&self, state: &LoadState, i: usize, j: usize) -> Result<f64> {
        let d_ij = self.graph.pair_degree(i, j)? as f64;
        if !exceeds_threshold(self.speeds, state, i, j) {
            return Ok(0.0);
        }
        let (s_i, s_j) = (self.speeds.get(i), self.speeds.get(j));
        let gap = state.node_weight(i) / s_i - state.node_weight(j) / s_j;
        Ok(gap / (self.params.alpha * d_ij * (1.0 / s_i + 1.0 / s_j)))
    }

    /// For each node, `(j, q_ij)` where `q_ij = p_ij / deg(i)` is the chance
    /// a single task moves to `j`. Only neighbours with `q_ij > 0` appear.
    pub fn move_probabilities(&self, state: &LoadState) -> Result<Vec<Vec<(usize, f64)>>> {
        let g = self.graph;
        (0..g.node_count())
            .map(|i| {
                let deg = g.degree(i) as f64;
                let mut out = Vec::new();
                for &j in g.neighbors(i) {
                    let p = self.migration_probability(state, i, j)?;
                    if p > 0.0 {
                        out.push((j, p / deg));
                    }
                }
                Ok(out)
            })
            .collect()
    }

    /// Executes one synchronous round. The random stream of node `i` is keyed
    /// by `(seed, trial, round, i)`.
    pub fn step_round(&self, state: &LoadState, trial: u64, round: u64) -> Result<RoundOutcome> {
        self.check_state(state)?;
        let q = self.move_probabilities(state)?;
        let seed = self.params.rng_seed;
        match state {
            LoadState::Uniform { counts } => {
                let mut next = counts.clone();
                let mut moves = Vec::new();
                for (i, targets) in q.iter().enumerate() {
                    if targets.is_empty() || counts[i] == 0 {
                        continue;
                    }
                    let mut rng = KeyedRng::new(seed, trial, round, i as u64);
                    // Multinomial over (stay, move to each target) by
                    // successive conditional binomials.
                    let mut remaining = counts[i];
                    let mut mass = 1.0;
                    for &(j, q_ij) in targets {
                        if remaining == 0 {
                            break;
                        }
                        let cond = (q_ij / mass).clamp(0.0, 1.0);
                        let moved = Binomial::new(remaining, cond)
                            .map_err(|e| Error::Internal(format!("binomial({remaining}, {cond}): {e}")))?
                            .sample(&mut rng);
                        mass -= q_ij;
                        remaining -= moved;
                        if moved > 0 {
                            next[i] -= moved;
                            next[j] += moved;
                            moves.push(Migration {
                                from: i,
                                to: j,
                                tasks: moved,
                                weight: moved as f64,
                            });
                        }
                    }
                }
                Ok(RoundOutcome {
                    state: LoadState::Uniform { counts: next },
                    moves,
                })
            }
            LoadState::Weighted { tasks } => {
                let g = self.graph;
                let mut stay: Vec<Vec<f64>> = Vec::with_capacity(tasks.len());
                let mut arrivals: Vec<Vec<f64>> = vec![Vec::new(); tasks.len()];
                let mut moves = Vec::new();
                for (i, list) in tasks.iter().enumerate() {
                    if q[i].is_empty() {
                        stay.push(list.clone());
                        continue;
                    }
                    let neighbors = g.neighbors(i);
                    let deg = neighbors.len() as f64;
                    let mut rng = KeyedRng::new(seed, trial, round, i as u64);
                    let mut kept = Vec::with_capacity(list.len());
                    let mut per_target: Vec<(u64, f64)> = vec![(0, 0.0); q[i].len()];
                    for &w in list {
                        let j = neighbors[rng.random_range(0..neighbors.len())];
                        let slot = q[i].iter().position(|&(t, _)| t == j);
                        let moved = match slot {
                            Some(k) => rng.random::<f64>() < q[i][k].1 * deg,
                            None => false,
                        };
                        if moved {
                            let k = slot.expect("moved implies a target");
                            arrivals[j].push(w);
                            per_target[k].0 += 1;
                            per_target[k].1 += w;
                        } else {
                            kept.push(w);
                        }
                    }
                    stay.push(kept);
                    for (k, &(count, weight)) in per_target.iter().enumerate() {
                        if count > 0 {
                            moves.push(Migration {
                                from: i,
                                to: q[i][k].0,
                                tasks: count,
                                weight,
                            });
                        }
                    }
                }
                for (list, incoming) in stay.iter_mut().zip(arrivals) {
                    list.extend(incoming);
                }
                Ok(RoundOutcome {
                    state: LoadState::Weighted { tasks: stay },
                    moves,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests;
