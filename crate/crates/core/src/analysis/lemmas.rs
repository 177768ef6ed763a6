use num_rational::Ratio;
use serde::Serialize;

use super::corpus::{Corpus, CorpusInstance};
use crate::error::Result;
use crate::potentials::{
    exact_expected_psi0_drop, exact_expected_psi1_drop, exact_variance_sum, lambda_term, psi1_by_definition,
    psi1_from_psi0, snapshot,
};
use crate::protocol::{
    exceeds_threshold, granularity_gap_holds, is_nash, widen, LoadState, Protocol, ProtocolParams, Variant,
};
use crate::spectral::{spectral_summary, EIGEN_TOL};

/// Relative tolerance of every inequality in the suite.
pub const LEMMA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    AtMost,
    Equal,
}

/// One evaluated instance of an inequality on one corpus state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaInstance {
    pub lemma: &'static str,
    pub case: usize,
    pub detail: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    /// `rhs - lhs`, or `-|lhs - rhs|` for equalities.
    pub margin: f64,
    pub holds: bool,
}

/// The state an instance was evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusCase {
    pub case: usize,
    pub graph: String,
    pub speeds: String,
    pub label: String,
    pub state: LoadState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSummary {
    pub lemma: &'static str,
    pub checked: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub alpha_override: Option<f64>,
    pub instances: Vec<LemmaInstance>,
    pub cases: Vec<CorpusCase>,
}

impl LemmaReport {
    pub fn all_hold(&self) -> bool {
        self.instances.iter().all(|i| i.holds)
    }

    pub fn violations(&self) -> impl Iterator<Item = &LemmaInstance> {
        self.instances.iter().filter(|i| !i.holds)
    }

    /// Cases with at least one violated instance.
    pub fn counterexamples(&self) -> Vec<&CorpusCase> {
        let mut ids: Vec<usize> = self.violations().map(|v| v.case).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter().map(|id| &self.cases[id]).collect()
    }

    /// Per-lemma counts, in order of first appearance.
    pub fn summary(&self) -> Vec<LemmaSummary> {
        let mut out: Vec<LemmaSummary> = Vec::new();
        for inst in &self.instances {
            let pos = match out.iter().position(|s| s.lemma == inst.lemma) {
                Some(p) => p,
                None => {
                    out.push(LemmaSummary {
                        lemma: inst.lemma,
                        checked: 0,
                        violations: 0,
                        worst_margin: f64::INFINITY,
                    });
                    out.len() - 1
                }
            };
            let s = &mut out[pos];
            s.checked += 1;
            s.violations += usize::from(!inst.holds);
            s.worst_margin = s.worst_margin.min(inst.margin);
        }
        out
    }
}

struct Collector {
    instances: Vec<LemmaInstance>,
}

impl Collector {
    #[allow(clippy::too_many_arguments)]
    fn check(&mut self, lemma: &'static str, case: usize, detail: String, lhs: f64, rhs: f64, relation: Relation, scale: f64) {
        let slack = LEMMA_TOL * scale.max(lhs.abs()).max(rhs.abs()).max(1.0);
        let (margin, holds) = match relation {
            Relation::AtMost => (rhs - lhs, lhs <= rhs + slack),
            Relation::Equal => (-(lhs - rhs).abs(), (lhs - rhs).abs() <= slack),
        };
        self.instances.push(LemmaInstance {
            lemma,
            case,
            detail,
            lhs,
            rhs,
            relation,
            margin,
            holds: holds && lhs.is_finite() && rhs.is_finite(),
        });
    }

    fn exact(&mut self, lemma: &'static str, case: usize, detail: String, lhs: f64, rhs: f64, holds: bool) {
        self.instances.push(LemmaInstance {
            lemma,
            case,
            detail,
            lhs,
            rhs,
            relation: Relation::AtMost,
            margin: rhs - lhs,
            holds,
        });
    }
}

/// Evaluates every potential, protocol and spectral inequality on every
/// corpus state. `alpha_override` replaces the default `α = 4·s_max`; it
/// must not be smaller than `4·s_max` on any instance.
pub fn verify_lemma_suite(corpus: &Corpus, alpha_override: Option<f64>) -> Result<LemmaReport> {
    if let Some(alpha) = alpha_override {
        for inst in &corpus.instances {
            ProtocolParams::standard(&inst.speeds, Variant::Algorithm2, 0)
                .with_alpha(alpha)
                .check_alpha(&inst.speeds)?;
        }
    }
    let mut out = Collector { instances: Vec::new() };
    let mut cases = Vec::new();
    for inst in &corpus.instances {
        check_spectral(&mut out, inst, cases.len())?;
        for (label, state) in &inst.states {
            let case = cases.len();
            cases.push(CorpusCase {
                case,
                graph: inst.family.to_string(),
                speeds: inst.speeds.to_list(),
                label: label.clone(),
                state: state.clone(),
            });
            check_state(&mut out, inst, state, case, alpha_override)?;
        }
    }
    Ok(LemmaReport {
        alpha_override,
        instances: out.instances,
        cases,
    })
}

fn check_spectral(out: &mut Collector, inst: &CorpusInstance, case: usize) -> Result<()> {
    let summary = spectral_summary(&inst.graph, &inst.speeds, EIGEN_TOL)?;
    for row in summary.bound_report {
        let detail = format!("{} speeds {}: {}", inst.family, inst.speeds.to_list(), row.name);
        out.exact("spectral_bound", case, detail, row.lhs, row.rhs, row.holds);
    }
    Ok(())
}

fn check_state(
    out: &mut Collector,
    inst: &CorpusInstance,
    state: &LoadState,
    case: usize,
    alpha_override: Option<f64>,
) -> Result<()> {
    let (g, sp) = (&inst.graph, &inst.speeds);
    let n = g.node_count() as f64;
    let delta = g.max_degree() as f64;
    let s_max = sp.max();
    let uniform = state.counts().is_some();
    let mut params = ProtocolParams::standard(sp, Variant::Algorithm2, 0);
    if let Some(alpha) = alpha_override {
        params = params.with_alpha(alpha);
    }
    let protocol = Protocol::new(g, sp, params)?;
    let alpha = protocol.params.alpha;
    let snap = snapshot(sp, state, 0);
    let none = String::new;

    // Potential identities.
    let definition = psi1_by_definition(sp, state);
    let scale = snap.phi1.abs();
    out.check("psi1_shifted_form", case, none(), snap.psi1, definition, Relation::Equal, scale);
    out.check("psi1_nonnegative", case, none(), 0.0, snap.psi1, Relation::AtMost, scale);
    out.check("psi1_deviation_form", case, none(), psi1_from_psi0(sp, state), definition, Relation::Equal, scale);
    let next = protocol.step_round(state, case as u64, 0)?.state;
    let after = snapshot(sp, &next, 1);
    out.check(
        "psi1_phi1_increment",
        case,
        none(),
        snap.psi1 - after.psi1,
        snap.phi1 - after.phi1,
        Relation::Equal,
        scale.max(after.phi1.abs()),
    );
    check_l_delta(out, inst, state, case, &snap);

    // Protocol sanity.
    for (i, targets) in protocol.move_probabilities(state)?.iter().enumerate() {
        let total: f64 = targets.iter().map(|&(_, q)| q).sum();
        out.check("move_probability_total", case, format!("node {i}"), total, 1.0, Relation::AtMost, 1.0);
    }

    let variance = exact_variance_sum(&protocol, state)?;
    out.check("variance_bound", case, none(), variance.exact, variance.bound, Relation::AtMost, variance.bound);

    if !uniform {
        return Ok(());
    }

    for (i, j) in g.directed_edges() {
        if exceeds_threshold(sp, state, i, j) {
            let holds = granularity_gap_holds(sp, state, i, j) == Some(true);
            let loads = state.loads(sp);
            let lhs = 1.0 / sp.get(j) + sp.granularity_f64() / (sp.get(i) * sp.get(j));
            out.exact("granularity_gap", case, format!("edge {i}->{j}"), lhs, loads[i] - loads[j], holds);
        }
    }

    let loads = state.loads(sp);
    let drop0 = exact_expected_psi0_drop(&protocol, state)?;
    let drop1 = exact_expected_psi1_drop(&protocol, state)?;
    let drop_scale = snap.phi1.abs();

    let mut quadratic = -n / alpha;
    for &(i, j) in g.edges() {
        let d = g.pair_degree(i, j)? as f64;
        let gap = loads[i] - loads[j];
        let inv = 1.0 / sp.get(i) + 1.0 / sp.get(j);
        quadratic += (1.0 - 2.0 / alpha) * gap * gap / (alpha * d * inv);
    }
    out.check("psi0_drop_quadratic", case, none(), quadratic, drop0, Relation::AtMost, drop_scale);

    // Stated for α = 4·s_max only.
    let lambda2 = spectral_summary(g, sp, EIGEN_TOL)?.lambda2;
    let standard = Protocol::new(g, sp, ProtocolParams::standard(sp, Variant::Algorithm2, 0))?;
    let spectral = lambda2 / (16.0 * delta * s_max * s_max) * snap.psi0 - n / (4.0 * s_max);
    let drop = exact_expected_psi0_drop(&standard, state)?;
    out.check("psi0_drop_spectral", case, none(), spectral, drop, Relation::AtMost, drop_scale);

    for (r, drop) in [(0u8, drop0), (1u8, drop1)] {
        let mut rhs = 0.0;
        for (i, j) in g.directed_edges() {
            if exceeds_threshold(sp, state, i, j) {
                let f = protocol.expected_flow(state, i, j)?;
                rhs += f * (lambda_term(&protocol, state, i, j, r)? - 1.0 / sp.get(i) - 1.0 / sp.get(j));
            }
        }
        let name = if r == 0 { "phi0_drop_flow" } else { "phi1_drop_flow" };
        out.check(name, case, none(), rhs, drop, Relation::AtMost, drop_scale);
    }

    if !is_nash(g, sp, state) {
        let exact = Protocol::new(g, sp, ProtocolParams::for_exact_nash(sp, 0))?;
        let eps = sp.granularity_f64();
        let bound = eps * eps / (8.0 * delta * s_max.powi(3));
        let drop = exact_expected_psi1_drop(&exact, state)?;
        out.check("psi1_drop_granular", case, none(), bound, drop, Relation::AtMost, drop_scale);
        out.check(
            "supermartingale",
            case,
            none(),
            snap.psi1 - drop + bound,
            snap.psi1,
            Relation::AtMost,
            drop_scale,
        );
    }
    Ok(())
}

/// `L_Δ² ≤ Ψ₀ ≤ S·L_Δ²`, in exact arithmetic for unit tasks.
fn check_l_delta(out: &mut Collector, inst: &CorpusInstance, state: &LoadState, case: usize, snap: &crate::potentials::PotentialSnapshot) {
    let sp = &inst.speeds;
    let l2 = snap.l_delta * snap.l_delta;
    let total = sp.total();
    match state.exact_deviations(sp) {
        Some(e) => {
            let zero = Ratio::from_integer(0i128);
            let mut psi0 = zero;
            let mut l_max = zero;
            for (i, e_i) in e.iter().enumerate() {
                let s = widen(sp.rational(i));
                psi0 += e_i * e_i / s;
                let l = e_i / s;
                let l = l * l;
                if l > l_max {
                    l_max = l;
                }
            }
            let s_total = widen(sp.total_rational());
            out.exact("l_delta_sandwich_lower", case, "exact".into(), l2, snap.psi0, l_max <= psi0);
            out.exact("l_delta_sandwich_upper", case, "exact".into(), snap.psi0, total * l2, psi0 <= s_total * l_max);
        }
        None => {
            out.check("l_delta_sandwich_lower", case, String::new(), l2, snap.psi0, Relation::AtMost, snap.psi0);
            out.check(
                "l_delta_sandwich_upper",
                case,
                String::new(),
                snap.psi0,
                total * l2,
                Relation::AtMost,
                total * l2,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn standard_corpus_passes() {
        let corpus = Corpus::standard().unwrap();
        let report = verify_lemma_suite(&corpus, None).unwrap();
        for v in report.violations() {
            eprintln!("{v:?}");
        }
        assert!(report.all_hold());
        let names: Vec<_> = report.summary().iter().map(|s| s.lemma).collect();
        for expected in [
            "psi0_drop_quadratic",
            "psi0_drop_spectral",
            "psi1_drop_granular",
            "variance_bound",
            "l_delta_sandwich_upper",
            "granularity_gap",
            "phi1_drop_flow",
        ] {
            assert!(names.contains(&expected), "{expected} missing");
        }
    }

    #[test]
    fn nash_corpus_passes_without_granular_rows() {
        let report = verify_lemma_suite(&Corpus::nash_only().unwrap(), None).unwrap();
        assert!(report.all_hold());
        assert!(report.instances.iter().all(|i| i.lemma != "psi1_drop_granular"));
        assert!(report.instances.iter().all(|i| i.lemma != "granularity_gap"));
    }

    #[test]
    fn small_alpha_is_a_config_error() {
        let err = verify_lemma_suite(&Corpus::standard().unwrap(), Some(1.0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn larger_alpha_still_passes() {
        let report = verify_lemma_suite(&Corpus::standard().unwrap(), Some(20.0)).unwrap();
        for v in report.violations() {
            eprintln!("{v:?}");
        }
        assert!(report.all_hold());
    }

    #[test]
    fn counterexamples_point_at_cases() {
        let mut report = verify_lemma_suite(&Corpus::standard().unwrap(), None).unwrap();
        report.instances[0].holds = false;
        let bad = report.counterexamples();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].case, report.instances[0].case);
    }
}
