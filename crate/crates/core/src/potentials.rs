//! Potential functions of a load state and closed-form oracles for their
//! expected one-round change.
//!
//! Tasks decide independently, so the net weight change at node `k` is a sum
//! of independent contributions: arrivals from each neighbour `i` (weight `w`
//! with probability `q_ik`) and departures of its own tasks (probability
//! `Q_k = Σ_j q_kj`). Every potential here is a sum of per-node terms that
//! are quadratic in `W_k`, so its expectation only needs the per-node mean
//! `μ_k` and variance `σ_k²` of that change.

use serde::Serialize;

use crate::error::Result;
use crate::graph::Graph;
use crate::protocol::{LoadState, Protocol};
use crate::spectral::SpeedProfile;

/// Potentials of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialSnapshot {
    pub round: u64,
    /// `Σ W_i² / s_i`.
    pub phi0: f64,
    /// `Σ W_i (W_i + 1) / s_i`.
    pub phi1: f64,
    /// `Φ₀ - W²/S = Σ e_i² / s_i`.
    pub psi0: f64,
    /// Shifted `Φ₁`, non-negative.
    pub psi1: f64,
    /// `max_i |e_i / s_i|`.
    pub l_delta: f64,
}

impl PotentialSnapshot {
    pub fn csv_header() -> &'static str {
        "round,phi0,phi1,psi0,psi1,l_delta,moves"
    }

    pub fn csv_row(&self, moves: u64) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.round,
            fmt17(self.phi0),
            fmt17(self.phi1),
            fmt17(self.psi0),
            fmt17(self.psi1),
            fmt17(self.l_delta),
            moves
        )
    }
}

/// Formats with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Evaluates every potential of `state`.
pub fn snapshot(sp: &SpeedProfile, state: &LoadState, round: u64) -> PotentialSnapshot {
    let n = state.node_count() as f64;
    let s_total = sp.total();
    let e = state.deviations(sp);
    let mut phi0 = 0.0;
    let mut phi1 = 0.0;
    let mut psi0 = 0.0;
    let mut shifted = 0.0;
    let mut l_delta: f64 = 0.0;
    for (i, &e_i) in e.iter().enumerate() {
        let s = sp.get(i);
        let w = state.node_weight(i);
        phi0 += w * w / s;
        phi1 += w * (w + 1.0) / s;
        psi0 += e_i * e_i / s;
        shifted += (e_i + 0.5) * (e_i + 0.5) / s;
        l_delta = l_delta.max((e_i / s).abs());
    }
    // Σ (e_i + 1/2)² / s_i - n / (4 s̄_a), which avoids cancelling large terms.
    let psi1 = shifted - n * n / (4.0 * s_total);
    PotentialSnapshot {
        round,
        phi0,
        phi1,
        psi0,
        psi1,
        l_delta,
    }
}

/// `Ψ₁` straight from its definition:
/// `Φ₁ - W²/S - W·n/S - n²/(4S) + ¼ Σ 1/s_i`.
pub fn psi1_by_definition(sp: &SpeedProfile, state: &LoadState) -> f64 {
    let n = state.node_count() as f64;
    let w = state.total_weight();
    let s = sp.total();
    let phi1: f64 = (0..state.node_count())
        .map(|i| {
            let wi = state.node_weight(i);
            wi * (wi + 1.0) / sp.get(i)
        })
        .sum();
    let inv: f64 = sp.as_slice().iter().map(|x| 1.0 / x).sum();
    phi1 - w * w / s - w * n / s - n * n / (4.0 * s) + inv / 4.0
}

/// `Ψ₀ + Σ e_i/s_i + (n/4)(1/s̄_h - 1/s̄_a)`.
pub fn psi1_from_psi0(sp: &SpeedProfile, state: &LoadState) -> f64 {
    let n = state.node_count() as f64;
    let e = state.deviations(sp);
    let psi0: f64 = e.iter().zip(sp.as_slice()).map(|(e, s)| e * e / s).sum();
    let linear: f64 = e.iter().zip(sp.as_slice()).map(|(e, s)| e / s).sum();
    psi0 + linear + n / 4.0 * (1.0 / sp.harmonic_mean() - 1.0 / sp.arithmetic_mean())
}

/// `Λ^r_ij = (2α - 2)·d_ij·(1/s_i + 1/s_j)·f_ij + r/s_i - r/s_j`.
pub fn lambda_term(protocol: &Protocol<'_>, state: &LoadState, i: usize, j: usize, r: u8) -> Result<f64> {
    let sp = protocol.speeds;
    let d_ij = protocol.graph.pair_degree(i, j)? as f64;
    let f = protocol.expected_flow(state, i, j)?;
    let (s_i, s_j) = (sp.get(i), sp.get(j));
    let r = f64::from(r);
    Ok((2.0 * protocol.params.alpha - 2.0) * d_ij * (1.0 / s_i + 1.0 / s_j) * f + r / s_i - r / s_j)
}

/// Mean and variance of the net weight change at every node over one round.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMoments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

pub fn node_moments(protocol: &Protocol<'_>, state: &LoadState) -> Result<NodeMoments> {
    let n = protocol.graph.node_count();
    let q = protocol.move_probabilities(state)?;
    let mut mean = vec![0.0; n];
    let mut variance = vec![0.0; n];
    for (i, targets) in q.iter().enumerate() {
        let weight = state.node_weight(i);
        let squared = state.squared_weight(i);
        let leave: f64 = targets.iter().map(|&(_, q)| q).sum();
        mean[i] -= weight * leave;
        variance[i] += squared * leave * (1.0 - leave);
        for &(j, q_ij) in targets {
            mean[j] += weight * q_ij;
            variance[j] += squared * q_ij * (1.0 - q_ij);
        }
    }
    Ok(NodeMoments { mean, variance })
}

/// `Ψ₀(x) - E[Ψ₀(X')]` in closed form.
pub fn exact_expected_psi0_drop(protocol: &Protocol<'_>, state: &LoadState) -> Result<f64> {
    let sp = protocol.speeds;
    let moments = node_moments(protocol, state)?;
    let e = state.deviations(sp);
    Ok((0..e.len())
        .map(|k| {
            let mu = moments.mean[k];
            // e² - ((e + μ)² + σ²), expanded to keep precision when μ, σ² ≪ e.
            -(2.0 * e[k] * mu + mu * mu + moments.variance[k]) / sp.get(k)
        })
        .sum())
}

/// `Ψ₁(x) - E[Ψ₁(X')]`, which equals the expected drop of `Φ₁`.
pub fn exact_expected_psi1_drop(protocol: &Protocol<'_>, state: &LoadState) -> Result<f64> {
    let sp = protocol.speeds;
    let moments = node_moments(protocol, state)?;
    let linear: f64 = moments
        .mean
        .iter()
        .zip(sp.as_slice())
        .map(|(mu, s)| mu / s)
        .sum();
    Ok(exact_expected_psi0_drop(protocol, state)? - linear)
}

/// `Σ_i Var[W_i'] / s_i` together with its upper bound `Σ_ij f_ij (1/s_i + 1/s_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceCheck {
    pub exact: f64,
    pub bound: f64,
}

pub fn exact_variance_sum(protocol: &Protocol<'_>, state: &LoadState) -> Result<VarianceCheck> {
    let sp = protocol.speeds;
    let moments = node_moments(protocol, state)?;
    let exact = moments
        .variance
        .iter()
        .zip(sp.as_slice())
        .map(|(v, s)| v / s)
        .sum();
    let mut bound = 0.0;
    for (i, j) in protocol.graph.directed_edges() {
        let f = protocol.expected_flow(state, i, j)?;
        if f > 0.0 {
            bound += f * (1.0 / sp.get(i) + 1.0 / sp.get(j));
        }
    }
    Ok(VarianceCheck { exact, bound })
}

/// Which constant the critical value uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
pub enum CriticalConstant {
    /// `8·n·Δ·s_max/λ₂`.
    #[default]
    Eight,
    /// `16·n·Δ·s_max/λ₂`.
    Sixteen,
}

impl CriticalConstant {
    pub fn value(self) -> f64 {
        match self {
            CriticalConstant::Eight => 8.0,
            CriticalConstant::Sixteen => 16.0,
        }
    }
}

/// Critical value `ψ_c = c·n·Δ·s_max/λ₂`.
pub fn critical_value(g: &Graph, sp: &SpeedProfile, lambda2: f64, constant: CriticalConstant) -> f64 {
    constant.value() * g.node_count() as f64 * g.max_degree() as f64 * sp.max() / lambda2
}

/// `γ = 32·Δ·s_max²/λ₂`.
pub fn gamma(g: &Graph, sp: &SpeedProfile, lambda2: f64) -> f64 {
    32.0 * g.max_degree() as f64 * sp.max() * sp.max() / lambda2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Family;
    use crate::protocol::{ProtocolParams, Variant};

    fn k2_protocol<'a>(g: &'a Graph, sp: &'a SpeedProfile) -> Protocol<'a> {
        Protocol::new(g, sp, ProtocolParams::standard(sp, Variant::Algorithm1, 0)).unwrap()
    }

    #[test]
    fn snapshot_examples() {
        let sp = SpeedProfile::uniform(2);
        let s = snapshot(&sp, &LoadState::from_counts(vec![4, 0]), 0);
        assert_eq!(s.psi0, 8.0);
        assert_eq!(s.l_delta, 2.0);
        assert_eq!(s.phi0, 16.0);

        let balanced = snapshot(&SpeedProfile::from_integers(&[1, 2, 3]).unwrap(), &LoadState::from_counts(vec![2, 4, 6]), 0);
        assert_eq!(balanced.psi0, 0.0);
        assert_eq!(balanced.l_delta, 0.0);

        let s = snapshot(&sp, &LoadState::from_counts(vec![2, 2]), 0);
        assert_eq!(s.phi1, 12.0);
        assert_eq!(s.psi1, 0.0);
        assert_eq!(psi1_by_definition(&sp, &LoadState::from_counts(vec![2, 2])), 0.0);
    }

    #[test]
    fn lambda_term_examples() {
        let g = Graph::build(Family::Complete { n: 2 }).unwrap();
        let sp = SpeedProfile::uniform(2);
        let p = k2_protocol(&g, &sp);
        let state = LoadState::from_counts(vec![2, 0]);
        assert_eq!(lambda_term(&p, &state, 0, 1, 0).unwrap(), 3.0);
        assert_eq!(lambda_term(&p, &state, 0, 1, 1).unwrap(), 3.0);
        let nash = LoadState::from_counts(vec![1, 1]);
        assert_eq!(lambda_term(&p, &nash, 0, 1, 0).unwrap(), 0.0);
    }

    #[test]
    fn k2_golden_drops() {
        let g = Graph::build(Family::Complete { n: 2 }).unwrap();
        let sp = SpeedProfile::uniform(2);
        let p = k2_protocol(&g, &sp);
        let state = LoadState::from_counts(vec![2, 0]);
        let m = node_moments(&p, &state).unwrap();
        assert_eq!(m.mean, vec![-0.25, 0.25]);
        assert_eq!(m.variance, vec![7.0 / 32.0, 7.0 / 32.0]);
        assert!((exact_expected_psi0_drop(&p, &state).unwrap() - 7.0 / 16.0).abs() < 1e-15);
        assert!((exact_expected_psi1_drop(&p, &state).unwrap() - 7.0 / 16.0).abs() < 1e-15);
        let v = exact_variance_sum(&p, &state).unwrap();
        assert!((v.exact - 7.0 / 16.0).abs() < 1e-15);
        assert!((v.bound - 0.5).abs() < 1e-15);
        let rhs = 1.0 / (8.0 * g.max_degree() as f64 * sp.max().powi(3));
        assert!(exact_expected_psi1_drop(&p, &state).unwrap() >= rhs);
    }

    #[test]
    fn nash_state_has_no_drop() {
        let g = Graph::build(Family::Cycle { n: 4 }).unwrap();
        let sp = SpeedProfile::uniform(4);
        let p = k2_protocol(&g, &sp);
        let state = LoadState::from_counts(vec![3, 3, 2, 3]);
        assert_eq!(exact_expected_psi0_drop(&p, &state).unwrap(), 0.0);
        assert_eq!(exact_expected_psi1_drop(&p, &state).unwrap(), 0.0);
        let v = exact_variance_sum(&p, &state).unwrap();
        assert_eq!((v.exact, v.bound), (0.0, 0.0));
    }

    #[test]
    fn critical_value_examples() {
        let k4 = Graph::build(Family::Complete { n: 4 }).unwrap();
        assert_eq!(critical_value(&k4, &SpeedProfile::uniform(4), 4.0, CriticalConstant::Eight), 24.0);
        let k2 = Graph::build(Family::Complete { n: 2 }).unwrap();
        assert_eq!(critical_value(&k2, &SpeedProfile::uniform(2), 2.0, CriticalConstant::Eight), 8.0);
        let doubled = SpeedProfile::from_integers(&[1, 2]).unwrap();
        assert_eq!(critical_value(&k2, &doubled, 2.0, CriticalConstant::Eight), 16.0);
        assert_eq!(critical_value(&k2, &doubled, 2.0, CriticalConstant::Sixteen), 32.0);
        assert_eq!(gamma(&k4, &SpeedProfile::uniform(4), 4.0), 24.0);
    }

    #[test]
    fn csv_row_layout() {
        let s = snapshot(&SpeedProfile::uniform(2), &LoadState::from_counts(vec![4, 0]), 3);
        let row = s.csv_row(2);
        assert!(row.starts_with("3,"));
        assert!(row.ends_with(",2"));
        assert_eq!(row.split(',').count(), PotentialSnapshot::csv_header().split(',').count());
    }
}
