use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::{derive_key, KeyedRng};
use crate::error::{Error, Result};
use crate::spectral::SpeedProfile;

/// Assignment of tasks to nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LoadState {
    /// Unit-weight, indistinguishable tasks: a count per node.
    Uniform { counts: Vec<u64> },
    /// Weighted tasks: the multiset of task weights in `(0, 1]` on each node.
    Weighted { tasks: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Uniform,
    Weighted,
}

impl LoadState {
    pub fn from_counts(counts: Vec<u64>) -> LoadState {
        LoadState::Uniform { counts }
    }

    pub fn from_tasks(tasks: Vec<Vec<f64>>) -> Result<LoadState> {
        for (node, list) in tasks.iter().enumerate() {
            if let Some(w) = list.iter().find(|w| !(**w > 0.0 && **w <= 1.0)) {
                return Err(Error::InvalidState(format!(
                    "task weight {w} on node {node} is outside (0, 1]"
                )));
            }
        }
        Ok(LoadState::Weighted { tasks })
    }

    /// `m` unit tasks, all on `node`.
    pub fn all_on_one(n: usize, m: u64, node: usize) -> LoadState {
        let mut counts = vec![0; n];
        counts[node] = m;
        LoadState::Uniform { counts }
    }

    /// `m` unit tasks, each placed on a uniformly random node.
    pub fn random_placement(n: usize, m: u64, seed: u64) -> LoadState {
        let mut rng = KeyedRng::from_key(derive_key(&[seed, 0x706c_6163_6500]));
        let mut counts = vec![0; n];
        for _ in 0..m {
            counts[rng.random_range(0..n)] += 1;
        }
        LoadState::Uniform { counts }
    }

    /// `count` tasks with weights uniform in `(0, 1]`. With `node` set, all
    /// tasks start there; otherwise each goes to a uniformly random node.
    pub fn weighted_random(n: usize, count: usize, seed: u64, node: Option<usize>) -> LoadState {
        let mut rng = KeyedRng::from_key(derive_key(&[seed, 0x7765_6967_6874]));
        let mut tasks = vec![Vec::new(); n];
        for _ in 0..count {
            let weight = 1.0 - rng.random::<f64>();
            let at = node.unwrap_or_else(|| rng.random_range(0..n));
            tasks[at].push(weight);
        }
        LoadState::Weighted { tasks }
    }

    pub fn mode(&self) -> Mode {
        match self {
            LoadState::Uniform { .. } => Mode::Uniform,
            LoadState::Weighted { .. } => Mode::Weighted,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            LoadState::Uniform { counts } => counts.len(),
            LoadState::Weighted { tasks } => tasks.len(),
        }
    }

    pub fn counts(&self) -> Option<&[u64]> {
        match self {
            LoadState::Uniform { counts } => Some(counts),
            LoadState::Weighted { .. } => None,
        }
    }

    pub fn task_count(&self, node: usize) -> usize {
        match self {
            LoadState::Uniform { counts } => counts[node] as usize,
            LoadState::Weighted { tasks } => tasks[node].len(),
        }
    }

    /// `W_i`.
    pub fn node_weight(&self, node: usize) -> f64 {
        match self {
            LoadState::Uniform { counts } => counts[node] as f64,
            LoadState::Weighted { tasks } => tasks[node].iter().sum(),
        }
    }

    pub fn node_weights(&self) -> Vec<f64> {
        (0..self.node_count()).map(|i| self.node_weight(i)).collect()
    }

    /// `Σ_{ℓ ∈ x(i)} w_ℓ²`; equals the task count in uniform mode.
    pub fn squared_weight(&self, node: usize) -> f64 {
        match self {
            LoadState::Uniform { counts } => counts[node] as f64,
            LoadState::Weighted { tasks } => tasks[node].iter().map(|w| w * w).sum(),
        }
    }

    /// Total weight `W` (`m` in uniform mode).
    pub fn total_weight(&self) -> f64 {
        match self {
            LoadState::Uniform { counts } => counts.iter().sum::<u64>() as f64,
            LoadState::Weighted { tasks } => tasks.iter().flatten().sum(),
        }
    }

    /// Loads `ℓ_i = W_i / s_i`.
    pub fn loads(&self, sp: &SpeedProfile) -> Vec<f64> {
        (0..self.node_count())
            .map(|i| self.node_weight(i) / sp.get(i))
            .collect()
    }

    /// Deviations `e_i = W_i - (W/S)·s_i`. Uniform mode evaluates them exactly
    /// before rounding.
    pub fn deviations(&self, sp: &SpeedProfile) -> Vec<f64> {
        match self {
            LoadState::Uniform { .. } => self
                .exact_deviations(sp)
                .expect("uniform mode")
                .into_iter()
                .map(ratio_to_f64)
                .collect(),
            LoadState::Weighted { .. } => {
                let avg = self.total_weight() / sp.total();
                (0..self.node_count())
                    .map(|i| self.node_weight(i) - avg * sp.get(i))
                    .collect()
            }
        }
    }

    /// Exact deviations in uniform mode.
    pub fn exact_deviations(&self, sp: &SpeedProfile) -> Option<Vec<Ratio<i128>>> {
        let counts = self.counts()?;
        let m = i128::from(counts.iter().sum::<u64>());
        let total = widen(sp.total_rational());
        Some(
            counts
                .iter()
                .enumerate()
                .map(|(i, &w)| Ratio::from_integer(i128::from(w)) - total.recip() * m * widen(sp.rational(i)))
                .collect(),
        )
    }

    pub fn validate(&self, sp: &SpeedProfile) -> Result<()> {
        if self.node_count() != sp.len() {
            return Err(Error::DimensionMismatch {
                expected: sp.len(),
                actual: self.node_count(),
            });
        }
        if let LoadState::Weighted { tasks } = self {
            LoadState::from_tasks(tasks.clone())?;
        }
        Ok(())
    }
}

pub(crate) fn widen(r: num_rational::Rational64) -> Ratio<i128> {
    Ratio::new(i128::from(*r.numer()), i128::from(*r.denom()))
}

pub(crate) fn ratio_to_f64(r: Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
