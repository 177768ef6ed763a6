//! Flat `section.key = value` experiment configuration.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use slb_core::protocol::WeightedRule;
use slb_core::{CriticalConstant, Variant};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Family { name: String, n: usize },
    EdgeList(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpeedSpec {
    Uniform,
    /// Whitespace separated `p/q`, integer or decimal speeds.
    Explicit(String),
    RandomIntegers { max: i64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    AllOnOne { node: usize },
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskSpec {
    UniformCount { count: u64, placement: Placement },
    WeightedRandom { count: usize, seed: u64, node: Option<usize> },
    Explicit(Vec<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSpec {
    pub variant: Variant,
    pub alpha: Option<f64>,
    pub rule: WeightedRule,
    pub eps_approx: Option<f64>,
    pub psi_constant: CriticalConstant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopKind {
    PsiThreshold,
    ApproxNe,
    ExactNe,
    FixedRounds(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub trials: usize,
    pub round_cap: u64,
    pub stop: StopKind,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub traces: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub speeds: SpeedSpec,
    pub tasks: TaskSpec,
    pub protocol: ProtocolSpec,
    pub run: RunSpec,
    pub output: OutputSpec,
}

const KEYS: &[&str] = &[
    "graph.family",
    "graph.n",
    "graph.edges",
    "speeds.mode",
    "speeds.values",
    "speeds.max",
    "speeds.seed",
    "tasks.mode",
    "tasks.count",
    "tasks.placement",
    "tasks.node",
    "tasks.seed",
    "tasks.values",
    "protocol.variant",
    "protocol.alpha",
    "protocol.rule",
    "protocol.eps_approx",
    "protocol.psi_constant",
    "run.trials",
    "run.round_cap",
    "run.stop",
    "run.rounds",
    "run.master_seed",
    "output.directory",
    "output.traces",
];

struct Entries {
    pairs: Vec<(String, String, usize)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Entries, CliError> {
        let mut pairs: Vec<(String, String, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let line_no = idx + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {line_no}: expected 'key = value'")))?;
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("line {line_no}: unknown key '{key}'")));
            }
            if pairs.iter().any(|(k, _, _)| *k == key) {
                return Err(CliError::Config(format!("line {line_no}: duplicate key '{key}'")));
            }
            pairs.push((key, value.trim().to_string(), line_no));
        }
        Ok(Entries { pairs })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _, _)| k == key).map(|(_, v, _)| v.as_str())
    }

    fn required(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key)
            .ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::Config(format!("{key}: cannot parse '{v}'")))
            })
            .transpose()
    }

    fn need<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.required(key)?;
        Ok(self.get(key)?.expect("present"))
    }

    /// Rejects keys that are set but meaningless for the chosen modes.
    fn reject_unused(&self, used: &[&str]) -> Result<(), CliError> {
        match self.pairs.iter().find(|(k, _, _)| !used.contains(&k.as_str())) {
            Some((k, _, line)) => Err(CliError::Config(format!("line {line}: key '{k}' does not apply here"))),
            None => Ok(()),
        }
    }
}

fn bad(key: &str, value: &str, allowed: &str) -> CliError {
    CliError::Config(format!("{key}: '{value}' is not one of {allowed}"))
}

impl FromStr for ExperimentConfig {
    type Err = CliError;

    fn from_str(text: &str) -> Result<ExperimentConfig, CliError> {
        let e = Entries::parse(text)?;
        let mut used = vec!["graph.family"];

        let family = e.required("graph.family")?;
        let graph = if family == "edge-list" {
            used.push("graph.edges");
            GraphSpec::EdgeList(PathBuf::from(e.required("graph.edges")?))
        } else {
            used.push("graph.n");
            GraphSpec::Family {
                name: family.to_string(),
                n: e.need("graph.n")?,
            }
        };

        used.push("speeds.mode");
        let speeds = match e.raw("speeds.mode").unwrap_or("uniform") {
            "uniform" => SpeedSpec::Uniform,
            "explicit" => {
                used.push("speeds.values");
                let list = e.required("speeds.values")?;
                slb_core::SpeedProfile::parse_list(list).map_err(|err| CliError::Config(format!("speeds.values: {err}")))?;
                SpeedSpec::Explicit(list.split_whitespace().collect::<Vec<_>>().join(" "))
            }
            "random-integers" => {
                used.extend(["speeds.max", "speeds.seed"]);
                SpeedSpec::RandomIntegers {
                    max: e.need("speeds.max")?,
                    seed: e.need("speeds.seed")?,
                }
            }
            other => return Err(bad("speeds.mode", other, "uniform, explicit, random-integers")),
        };

        used.push("tasks.mode");
        let tasks = match e.required("tasks.mode")? {
            "uniform-count" => {
                used.extend(["tasks.count", "tasks.placement"]);
                let placement = match e.raw("tasks.placement").unwrap_or("all-on-one") {
                    "all-on-one" => {
                        used.push("tasks.node");
                        Placement::AllOnOne {
                            node: e.get("tasks.node")?.unwrap_or(0),
                        }
                    }
                    "random" => {
                        used.push("tasks.seed");
                        Placement::Random {
                            seed: e.need("tasks.seed")?,
                        }
                    }
                    other => return Err(bad("tasks.placement", other, "all-on-one, random")),
                };
                TaskSpec::UniformCount {
                    count: e.need("tasks.count")?,
                    placement,
                }
            }
            "weighted-random" => {
                used.extend(["tasks.count", "tasks.seed", "tasks.node"]);
                TaskSpec::WeightedRandom {
                    count: e.need("tasks.count")?,
                    seed: e.need("tasks.seed")?,
                    node: e.get("tasks.node")?,
                }
            }
            "explicit" => {
                used.push("tasks.values");
                let values = e.required("tasks.values")?;
                let counts = values
                    .split_whitespace()
                    .map(|v| {
                        v.parse::<u64>()
                            .map_err(|_| CliError::Config(format!("tasks.values: '{v}' is not a task count")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                TaskSpec::Explicit(counts)
            }
            other => return Err(bad("tasks.mode", other, "uniform-count, weighted-random, explicit")),
        };

        used.extend([
            "protocol.variant",
            "protocol.alpha",
            "protocol.rule",
            "protocol.eps_approx",
            "protocol.psi_constant",
        ]);
        let variant = match e.raw("protocol.variant").unwrap_or("algorithm1") {
            "algorithm1" => Variant::Algorithm1,
            "algorithm2" => Variant::Algorithm2,
            other => return Err(bad("protocol.variant", other, "algorithm1, algorithm2")),
        };
        let rule = match e.raw("protocol.rule").unwrap_or("flow-matched") {
            "flow-matched" => WeightedRule::FlowMatched,
            "weight-difference" => WeightedRule::WeightDifference,
            other => return Err(bad("protocol.rule", other, "flow-matched, weight-difference")),
        };
        let psi_constant = match e.raw("protocol.psi_constant").unwrap_or("8") {
            "8" => CriticalConstant::Eight,
            "16" => CriticalConstant::Sixteen,
            other => return Err(bad("protocol.psi_constant", other, "8, 16")),
        };
        let alpha: Option<f64> = e.get("protocol.alpha")?;
        if alpha.is_some_and(|a| !(a.is_finite() && a > 0.0)) {
            return Err(CliError::Config("protocol.alpha: must be a positive number".into()));
        }
        let eps_approx: Option<f64> = e.get("protocol.eps_approx")?;
        if eps_approx.is_some_and(|x| !(x > 0.0 && x < 1.0)) {
            return Err(CliError::Config("protocol.eps_approx: must lie in (0, 1)".into()));
        }

        used.extend(["run.trials", "run.round_cap", "run.stop", "run.master_seed"]);
        let stop = match e.required("run.stop")? {
            "psi-threshold" => StopKind::PsiThreshold,
            "approx-ne" => {
                if eps_approx.is_none() {
                    return Err(CliError::Config("run.stop = approx-ne needs protocol.eps_approx".into()));
                }
                StopKind::ApproxNe
            }
            "exact-ne" => StopKind::ExactNe,
            "fixed-rounds" => {
                used.push("run.rounds");
                StopKind::FixedRounds(e.need("run.rounds")?)
            }
            other => return Err(bad("run.stop", other, "psi-threshold, approx-ne, exact-ne, fixed-rounds")),
        };
        let run = RunSpec {
            trials: e.get("run.trials")?.unwrap_or(1),
            round_cap: e.get("run.round_cap")?.unwrap_or(1_000_000),
            stop,
            master_seed: e.get("run.master_seed")?.unwrap_or(0),
        };
        if run.trials == 0 {
            return Err(CliError::Config("run.trials: must be at least 1".into()));
        }
        if run.round_cap == 0 {
            return Err(CliError::Config("run.round_cap: must be at least 1".into()));
        }

        used.extend(["output.directory", "output.traces"]);
        let traces = match e.raw("output.traces").unwrap_or("true") {
            "true" => true,
            "false" => false,
            other => return Err(bad("output.traces", other, "true, false")),
        };
        let output = OutputSpec {
            directory: PathBuf::from(e.raw("output.directory").unwrap_or("out")),
            traces,
        };

        e.reject_unused(&used)?;
        Ok(ExperimentConfig {
            graph,
            speeds,
            tasks,
            protocol: ProtocolSpec {
                variant,
                alpha,
                rule,
                eps_approx,
                psi_constant,
            },
            run,
            output,
        })
    }
}

impl fmt::Display for ExperimentConfig {
    /// Canonical form; parsing it yields an identical config.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        match &self.graph {
            GraphSpec::Family { name, n } => {
                writeln!(s, "graph.family = {name}")?;
                writeln!(s, "graph.n = {n}")?;
            }
            GraphSpec::EdgeList(path) => {
                writeln!(s, "graph.family = edge-list")?;
                writeln!(s, "graph.edges = {}", path.display())?;
            }
        }
        match &self.speeds {
            SpeedSpec::Uniform => writeln!(s, "speeds.mode = uniform")?,
            SpeedSpec::Explicit(list) => {
                writeln!(s, "speeds.mode = explicit")?;
                writeln!(s, "speeds.values = {list}")?;
            }
            SpeedSpec::RandomIntegers { max, seed } => {
                writeln!(s, "speeds.mode = random-integers")?;
                writeln!(s, "speeds.max = {max}")?;
                writeln!(s, "speeds.seed = {seed}")?;
            }
        }
        match &self.tasks {
            TaskSpec::UniformCount { count, placement } => {
                writeln!(s, "tasks.mode = uniform-count")?;
                writeln!(s, "tasks.count = {count}")?;
                match placement {
                    Placement::AllOnOne { node } => {
                        writeln!(s, "tasks.placement = all-on-one")?;
                        writeln!(s, "tasks.node = {node}")?;
                    }
                    Placement::Random { seed } => {
                        writeln!(s, "tasks.placement = random")?;
                        writeln!(s, "tasks.seed = {seed}")?;
                    }
                }
            }
            TaskSpec::WeightedRandom { count, seed, node } => {
                writeln!(s, "tasks.mode = weighted-random")?;
                writeln!(s, "tasks.count = {count}")?;
                writeln!(s, "tasks.seed = {seed}")?;
                if let Some(node) = node {
                    writeln!(s, "tasks.node = {node}")?;
                }
            }
            TaskSpec::Explicit(counts) => {
                writeln!(s, "tasks.mode = explicit")?;
                let list: Vec<String> = counts.iter().map(u64::to_string).collect();
                writeln!(s, "tasks.values = {}", list.join(" "))?;
            }
        }
        let p = &self.protocol;
        let variant = match p.variant {
            Variant::Algorithm1 => "algorithm1",
            Variant::Algorithm2 => "algorithm2",
        };
        writeln!(s, "protocol.variant = {variant}")?;
        if let Some(alpha) = p.alpha {
            writeln!(s, "protocol.alpha = {alpha}")?;
        }
        let rule = match p.rule {
            WeightedRule::FlowMatched => "flow-matched",
            WeightedRule::WeightDifference => "weight-difference",
        };
        writeln!(s, "protocol.rule = {rule}")?;
        if let Some(eps) = p.eps_approx {
            writeln!(s, "protocol.eps_approx = {eps}")?;
        }
        writeln!(s, "protocol.psi_constant = {}", p.psi_constant.value())?;
        let r = &self.run;
        writeln!(s, "run.trials = {}", r.trials)?;
        writeln!(s, "run.round_cap = {}", r.round_cap)?;
        match r.stop {
            StopKind::PsiThreshold => writeln!(s, "run.stop = psi-threshold")?,
            StopKind::ApproxNe => writeln!(s, "run.stop = approx-ne")?,
            StopKind::ExactNe => writeln!(s, "run.stop = exact-ne")?,
            StopKind::FixedRounds(rounds) => {
                writeln!(s, "run.stop = fixed-rounds")?;
                writeln!(s, "run.rounds = {rounds}")?;
            }
        }
        writeln!(s, "run.master_seed = {}", r.master_seed)?;
        writeln!(s, "output.directory = {}", self.output.directory.display())?;
        writeln!(s, "output.traces = {}", self.output.traces)?;
        f.write_str(&s)
    }
}
