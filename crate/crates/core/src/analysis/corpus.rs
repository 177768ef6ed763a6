use serde::Serialize;

use crate::error::Result;
use crate::graph::{Family, Graph};
use crate::protocol::{settle_to_nash, LoadState};
use crate::spectral::SpeedProfile;

/// Speed pattern repeated along the node indices and truncated to `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpeedPattern {
    Ones,
    Alternating(i64),
}

impl SpeedPattern {
    pub fn profile(self, n: usize) -> Result<SpeedProfile> {
        let speeds: Vec<i64> = match self {
            SpeedPattern::Ones => vec![1; n],
            SpeedPattern::Alternating(k) => (0..n).map(|i| if i % 2 == 0 { 1 } else { k }).collect(),
        };
        SpeedProfile::from_integers(&speeds)
    }
}

/// One network/speed combination and the states checked on it.
#[derive(Debug, Clone)]
pub struct CorpusInstance {
    pub family: Family,
    pub graph: Graph,
    pub pattern: SpeedPattern,
    pub speeds: SpeedProfile,
    pub states: Vec<(String, LoadState)>,
}

/// A set of instances to run the lemma suite on.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub instances: Vec<CorpusInstance>,
}

pub const CORPUS_FAMILIES: [Family; 6] = [
    Family::Complete { n: 2 },
    Family::Complete { n: 4 },
    Family::Cycle { n: 4 },
    Family::Cycle { n: 6 },
    Family::Path { n: 5 },
    Family::Hypercube { dim: 3 },
];

pub const CORPUS_SPEEDS: [SpeedPattern; 3] = [
    SpeedPattern::Ones,
    SpeedPattern::Alternating(2),
    SpeedPattern::Alternating(3),
];

/// Tasks per node in the generated uniform states.
const TASKS_PER_NODE: u64 = 6;
const RANDOM_SEEDS: [u64; 3] = [11, 23, 37];
const WEIGHTED_SEEDS: [u64; 2] = [5, 8];

impl Corpus {
    /// Every corpus network with all-on-one, seeded random and near-balanced
    /// unit-task states plus two weighted states.
    pub fn standard() -> Result<Corpus> {
        Corpus::build(|g, sp| {
            let n = g.node_count();
            let m = TASKS_PER_NODE * n as u64;
            let mut states = vec![("all-on-one".to_string(), LoadState::all_on_one(n, m, 0))];
            for seed in RANDOM_SEEDS {
                states.push((format!("random-{seed}"), LoadState::random_placement(n, m, seed)));
            }
            states.push(("near-balanced".to_string(), near_balanced(sp, m)));
            for seed in WEIGHTED_SEEDS {
                let count = 5 * n;
                states.push((
                    format!("weighted-{seed}"),
                    LoadState::weighted_random(n, count, seed, (seed % 2 == 0).then_some(0)),
                ));
            }
            Ok(states)
        })
    }

    /// The unit-task states of [`Corpus::standard`] moved to a nearby Nash
    /// equilibrium.
    pub fn nash_only() -> Result<Corpus> {
        let mut corpus = Corpus::standard()?;
        for inst in &mut corpus.instances {
            let mut settled = Vec::new();
            for (label, state) in &inst.states {
                if state.counts().is_some() {
                    settled.push((format!("{label}-settled"), settle_to_nash(&inst.graph, &inst.speeds, state)?));
                }
            }
            inst.states = settled;
        }
        Ok(corpus)
    }

    fn build(mut states: impl FnMut(&Graph, &SpeedProfile) -> Result<Vec<(String, LoadState)>>) -> Result<Corpus> {
        let mut instances = Vec::new();
        for family in CORPUS_FAMILIES {
            let graph = Graph::build(family)?;
            for pattern in CORPUS_SPEEDS {
                let speeds = pattern.profile(graph.node_count())?;
                let states = states(&graph, &speeds)?;
                instances.push(CorpusInstance {
                    family,
                    graph: graph.clone(),
                    pattern,
                    speeds,
                    states,
                });
            }
        }
        Ok(Corpus { instances })
    }

    pub fn state_count(&self) -> usize {
        self.instances.iter().map(|i| i.states.len()).sum()
    }
}

/// Proportional shares `⌊m·s_i/S⌋`, remainder to the lowest indices, then one
/// task shifted from the last node to the first.
pub fn near_balanced(sp: &SpeedProfile, m: u64) -> LoadState {
    let n = sp.len();
    let total = sp.total();
    let mut counts: Vec<u64> = (0..n)
        .map(|i| (m as f64 * sp.get(i) / total).floor() as u64)
        .collect();
    let rest = m - counts.iter().sum::<u64>();
    for c in counts.iter_mut().take(rest as usize) {
        *c += 1;
    }
    if counts[n - 1] > 0 {
        counts[n - 1] -= 1;
        counts[0] += 1;
    }
    LoadState::from_counts(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::is_nash;

    #[test]
    fn standard_corpus_shape() {
        let c = Corpus::standard().unwrap();
        assert_eq!(c.instances.len(), 18);
        assert_eq!(c.state_count(), 18 * 7);
        for inst in &c.instances {
            for (_, s) in &inst.states {
                s.validate(&inst.speeds).unwrap();
            }
        }
    }

    #[test]
    fn alternating_speeds_truncate() {
        let sp = SpeedPattern::Alternating(3).profile(5).unwrap();
        assert_eq!(sp.as_slice(), &[1.0, 3.0, 1.0, 3.0, 1.0]);
    }

    #[test]
    fn near_balanced_keeps_mass() {
        let sp = SpeedProfile::from_integers(&[1, 2, 1, 2]).unwrap();
        let s = near_balanced(&sp, 25);
        assert_eq!(s.total_weight(), 25.0);
    }

    #[test]
    fn nash_corpus_is_nash() {
        let c = Corpus::nash_only().unwrap();
        for inst in &c.instances {
            for (_, s) in &inst.states {
                assert!(is_nash(&inst.graph, &inst.speeds, s));
            }
        }
    }
}
