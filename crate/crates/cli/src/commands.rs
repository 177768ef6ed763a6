use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use slb_core::analysis::{
    measure_convergence, psi_threshold_time, scaling_experiment, verify_lemma_suite, Corpus, HittingStats,
    InitSpec, LemmaSummary, ScalingRow, ScalingSpec, StopCondition, TraceRow, TrialResult, TrialSetup,
};
use slb_core::potentials::{critical_value, fmt17, gamma};
use slb_core::protocol::{LoadState, Mode};
use slb_core::spectral::{spectral_summary, EIGEN_TOL};
use slb_core::{CriticalConstant, Family, Graph, Protocol, ProtocolParams, SpectralSummary, SpeedProfile, Variant};

use crate::config::{ExperimentConfig, GraphSpec, Placement, SpeedSpec, StopKind, TaskSpec};
use crate::error::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

/// Builds the network; relative edge-list paths resolve against `base`.
pub fn load_graph(spec: &GraphSpec, base: &Path) -> Result<Graph, CliError> {
    match spec {
        GraphSpec::Family { name, n } => Ok(Graph::build(Family::with_size(name, *n)?)?),
        GraphSpec::EdgeList(path) => {
            let path = if path.is_relative() { base.join(path) } else { path.clone() };
            Ok(read(&path)?.parse::<Graph>()?)
        }
    }
}

pub fn load_speeds(spec: &SpeedSpec, n: usize) -> Result<SpeedProfile, CliError> {
    let sp = match spec {
        SpeedSpec::Uniform => SpeedProfile::uniform(n),
        SpeedSpec::Explicit(list) => SpeedProfile::parse_list(list)?,
        SpeedSpec::RandomIntegers { max, seed } => SpeedProfile::random_integers(n, *max, *seed)?,
    };
    if sp.len() != n {
        return Err(CliError::Config(format!(
            "speeds: {} values given for a graph with {n} nodes",
            sp.len()
        )));
    }
    Ok(sp)
}

fn init_spec(spec: &TaskSpec, n: usize) -> Result<InitSpec, CliError> {
    let init = match spec {
        TaskSpec::UniformCount { count, placement } => match *placement {
            Placement::AllOnOne { node } => InitSpec::AllOnOne { tasks: *count, node },
            Placement::Random { seed } => InitSpec::RandomPlacement { tasks: *count, seed },
        },
        TaskSpec::WeightedRandom { count, seed, node } => InitSpec::WeightedRandom {
            tasks: *count,
            seed: *seed,
            node: *node,
        },
        TaskSpec::Explicit(counts) => {
            if counts.len() != n {
                return Err(CliError::Config(format!(
                    "tasks.values: {} counts given for a graph with {n} nodes",
                    counts.len()
                )));
            }
            InitSpec::Explicit(LoadState::from_counts(counts.clone()))
        }
    };
    let node = match &init {
        InitSpec::AllOnOne { node, .. } => Some(*node),
        InitSpec::WeightedRandom { node, .. } => *node,
        _ => None,
    };
    if node.is_some_and(|v| v >= n) {
        return Err(CliError::Config(format!("tasks.node: node {} does not exist", node.unwrap_or(0))));
    }
    Ok(init)
}

#[derive(Debug, Clone, Serialize)]
struct HittingReport {
    stop: Option<HittingStats>,
    psi_threshold: Option<HittingStats>,
    approx_ne: Option<HittingStats>,
    exact_ne: Option<HittingStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    graph: String,
    nodes: usize,
    edges: usize,
    max_degree: usize,
    diameter: usize,
    speeds: String,
    granularity: String,
    total_weight: f64,
    variant: Variant,
    alpha: f64,
    spectral: SpectralSummary,
    psi_c: f64,
    psi_threshold: f64,
    gamma: f64,
    threshold_time_bound: f64,
    stop: StopCondition,
    trials: usize,
    round_cap: u64,
    master_seed: u64,
    hitting: HittingReport,
    fraction_truncated: f64,
    results: Vec<TrialResult>,
}

/// What a `run` produced.
#[derive(Debug)]
pub struct RunOutput {
    pub summary: RunSummary,
    /// One line per trial, then one summary line.
    pub records: Vec<String>,
    pub directory: PathBuf,
}

impl RunSummary {
    pub fn fraction_truncated(&self) -> f64 {
        self.fraction_truncated
    }

    pub fn results(&self) -> &[TrialResult] {
        &self.results
    }
}

fn opt(v: Option<u64>) -> String {
    v.map_or_else(|| "-".to_string(), |t| t.to_string())
}

/// Runs the experiment in the config file and writes `summary.json` and,
/// when enabled, one `trace_<trial>.csv` per trial into the output directory.
pub fn cmd_run(config_path: &Path, output_override: Option<&Path>) -> Result<RunOutput, CliError> {
    let config: ExperimentConfig = read(config_path)?.parse()?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let directory = output_override.map_or_else(|| config.output.directory.clone(), Path::to_path_buf);
    run_config(&config, base, &directory)
}

pub fn run_config(config: &ExperimentConfig, base: &Path, directory: &Path) -> Result<RunOutput, CliError> {
    let g = load_graph(&config.graph, base)?;
    let n = g.node_count();
    let sp = load_speeds(&config.speeds, n)?;
    let init = init_spec(&config.tasks, n)?;
    let first = init.materialize(n, 0);
    first.validate(&sp)?;
    let weighted = first.mode() == Mode::Weighted;
    let proto = &config.protocol;
    if weighted && proto.variant == Variant::Algorithm1 {
        return Err(CliError::Config(
            "protocol.variant: algorithm1 needs unit tasks; use algorithm2 for weighted tasks".into(),
        ));
    }

    let seed = config.run.master_seed;
    let mut params = if config.run.stop == StopKind::ExactNe && !weighted {
        ProtocolParams::for_exact_nash(&sp, seed)
    } else {
        ProtocolParams::standard(&sp, proto.variant, seed)
    };
    params.variant = proto.variant;
    params.weighted_rule = proto.rule;
    if let Some(alpha) = proto.alpha {
        params = params.with_alpha(alpha);
    }
    params.check_alpha(&sp)?;

    let spectral = spectral_summary(&g, &sp, EIGEN_TOL)?;
    let psi_c = critical_value(&g, &sp, spectral.lambda2, proto.psi_constant);
    let gamma = gamma(&g, &sp, spectral.lambda2);
    let stop = match config.run.stop {
        StopKind::PsiThreshold => StopCondition::PsiThreshold,
        StopKind::ApproxNe => StopCondition::ApproxNash(proto.eps_approx.expect("checked when parsing")),
        StopKind::ExactNe => StopCondition::ExactNash,
        StopKind::FixedRounds(r) => StopCondition::FixedRounds(r),
    };
    let setup = TrialSetup {
        protocol: Protocol::new(&g, &sp, params)?,
        stop,
        round_cap: config.run.round_cap,
        psi_threshold: 4.0 * psi_c,
        approx_eps: proto.eps_approx,
        record_trace: config.output.traces,
    };
    let outcome = measure_convergence(&setup, &init, config.run.trials)?;

    fs::create_dir_all(directory)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", directory.display())))?;
    if config.output.traces {
        outcome.results.par_iter().try_for_each(|r| {
            let mut csv = String::with_capacity(64 * (r.trace.len() + 1));
            csv.push_str(TraceRow::HEADER);
            csv.push('\n');
            for row in &r.trace {
                csv.push_str(&row.to_csv());
                csv.push('\n');
            }
            write(&directory.join(format!("trace_{}.csv", r.trial_id)), &csv)
        })?;
    }

    let mut records: Vec<String> = outcome
        .results
        .iter()
        .map(|r| {
            format!(
                "trial={} seed={} rounds_run={} psi_threshold={} approx_ne={} exact_ne={} truncated={} psi0={}",
                r.trial_id,
                r.seed,
                r.rounds_run,
                opt(r.rounds_to_psi_threshold),
                opt(r.rounds_to_approx_ne),
                opt(r.rounds_to_exact_ne),
                r.truncated,
                fmt17(r.final_snapshot.psi0)
            )
        })
        .collect();
    let median = outcome.stop_stats.map_or_else(|| "-".to_string(), |s| fmt17(s.median));
    records.push(format!(
        "summary trials={} median_rounds={} fraction_truncated={} lambda2={} psi_c={} gamma={}",
        outcome.trials,
        median,
        fmt17(outcome.fraction_truncated),
        fmt17(spectral.lambda2),
        fmt17(psi_c),
        fmt17(gamma)
    ));

    let total_weight = first.total_weight();
    let summary = RunSummary {
        graph: g_name(&config.graph),
        nodes: n,
        edges: g.edge_count(),
        max_degree: g.max_degree(),
        diameter: g.diameter(),
        speeds: sp.to_list(),
        granularity: sp.granularity().to_string(),
        total_weight,
        variant: params.variant,
        alpha: params.alpha,
        psi_c,
        psi_threshold: 4.0 * psi_c,
        gamma,
        threshold_time_bound: psi_threshold_time(gamma, total_weight, n),
        spectral,
        stop,
        trials: outcome.trials,
        round_cap: config.run.round_cap,
        master_seed: seed,
        hitting: HittingReport {
            stop: outcome.stop_stats,
            psi_threshold: outcome.psi_threshold,
            approx_ne: outcome.approx_ne,
            exact_ne: outcome.exact_ne,
        },
        fraction_truncated: outcome.fraction_truncated,
        results: outcome.results,
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write(&directory.join("summary.json"), &json)?;
    Ok(RunOutput {
        summary,
        records,
        directory: directory.to_path_buf(),
    })
}

fn g_name(spec: &GraphSpec) -> String {
    match spec {
        GraphSpec::Family { name, n } => Family::with_size(name, *n).map_or_else(|_| name.clone(), |f| f.to_string()),
        GraphSpec::EdgeList(path) => path.display().to_string(),
    }
}

/// Spectral report of one network; `Ok((text, all_hold))`.
pub fn cmd_spectra(
    graph: &GraphSpec,
    speeds: &SpeedSpec,
    constant: CriticalConstant,
) -> Result<(String, bool), CliError> {
    let g = load_graph(graph, Path::new("."))?;
    let sp = load_speeds(speeds, g.node_count())?;
    let s = spectral_summary(&g, &sp, EIGEN_TOL)?;
    let mut out = String::new();
    let line = |out: &mut String, key: &str, v: f64| writeln!(out, "{key:<8} {}", fmt17(v)).expect("string write");
    writeln!(out, "graph    {} (n={}, edges={}, max_degree={}, diameter={})", g_name(graph), g.node_count(), g.edge_count(), g.max_degree(), g.diameter()).expect("string write");
    writeln!(out, "speeds   {}", sp.to_list()).expect("string write");
    line(&mut out, "lambda2", s.lambda2);
    line(&mut out, "mu2", s.mu2);
    line(&mut out, "psi_c", critical_value(&g, &sp, s.lambda2, constant));
    line(&mut out, "gamma", gamma(&g, &sp, s.lambda2));
    for b in &s.bound_report {
        writeln!(
            out,
            "bound    {:<26} {} <= {} {}",
            b.name,
            fmt17(b.lhs),
            fmt17(b.rhs),
            if b.holds { "pass" } else { "FAIL" }
        )
        .expect("string write");
    }
    Ok((out, s.all_hold()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusChoice {
    Default,
    NashOnly,
}

/// Outcome of `verify`.
#[derive(Debug)]
pub struct VerifyOutput {
    pub lines: Vec<String>,
    pub summary: Vec<LemmaSummary>,
    pub all_hold: bool,
    pub report: PathBuf,
    pub counterexamples: Option<PathBuf>,
}

/// Runs the lemma suite, writes every evaluated instance to `report` and any
/// failing states to `<report>.counterexamples.json`.
pub fn cmd_verify(corpus: CorpusChoice, alpha: Option<f64>, report: &Path) -> Result<VerifyOutput, CliError> {
    let corpus = match corpus {
        CorpusChoice::Default => Corpus::standard()?,
        CorpusChoice::NashOnly => Corpus::nash_only()?,
    };
    let result = verify_lemma_suite(&corpus, alpha)?;
    if let Some(dir) = report.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
    }
    let mut json = serde_json::to_string_pretty(&result)?;
    json.push('\n');
    write(report, &json)?;
    let bad = result.counterexamples();
    let counterexamples = if bad.is_empty() {
        None
    } else {
        let path = PathBuf::from(format!("{}.counterexamples.json", report.display()));
        let mut json = serde_json::to_string_pretty(&bad)?;
        json.push('\n');
        write(&path, &json)?;
        Some(path)
    };
    let summary = result.summary();
    let lines = summary
        .iter()
        .map(|s| {
            format!(
                "{:<26} checked={:<5} violations={:<3} worst_margin={} {}",
                s.lemma,
                s.checked,
                s.violations,
                fmt17(s.worst_margin),
                if s.violations == 0 { "pass" } else { "FAIL" }
            )
        })
        .collect();
    Ok(VerifyOutput {
        lines,
        summary,
        all_hold: result.all_hold(),
        report: report.to_path_buf(),
        counterexamples,
    })
}

/// Median rounds to `Ψ₀ <= 4·ψ_c` from `m = n³` tasks on one node, per size.
pub fn cmd_scaling(family: &str, sizes: &[usize], trials: usize, seed: u64, round_cap: u64) -> Result<Vec<ScalingRow>, CliError> {
    let spec = ScalingSpec {
        tasks: |n| (n as u64).pow(3),
        speeds: |n| Ok(SpeedProfile::uniform(n)),
        stop: StopCondition::PsiThreshold,
        trials,
        round_cap,
        seed,
        constant: CriticalConstant::Eight,
    };
    Ok(scaling_experiment(family, sizes, &spec)?)
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("family,n,m,lambda2,gamma,psi_c,median_rounds,fraction_truncated\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.family,
            r.n,
            r.tasks,
            fmt17(r.lambda2),
            fmt17(r.gamma),
            fmt17(r.psi_c),
            r.median_rounds.map_or_else(String::new, fmt17),
            fmt17(r.fraction_truncated)
        )
        .expect("string write");
    }
    out
}
