use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use slb_cli::commands::scaling_csv;
use slb_cli::config::{GraphSpec, SpeedSpec};
use slb_cli::{cmd_run, cmd_scaling, cmd_spectra, cmd_verify, CliError, CorpusChoice};
use slb_core::CriticalConstant;

#[derive(Parser)]
#[command(name = "slb", version, about = "Selfish load balancing simulator and verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Overrides `output.directory`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print λ₂, μ₂, ψ_c, γ and every spectral bound.
    Spectra {
        #[command(flatten)]
        graph: GraphArgs,
        /// Speeds as a list such as "1 3/2 2"; uniform if omitted.
        #[arg(long)]
        speeds: Option<String>,
        #[arg(long, value_enum, default_value_t = Constant::Eight)]
        psi_constant: Constant,
    },
    /// Check every potential and spectral inequality on a state corpus.
    Verify {
        #[arg(long, value_enum, default_value_t = CorpusArg::Default)]
        corpus: CorpusArg,
        /// Replaces α = 4·s_max.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "lemma_report.json")]
        report: PathBuf,
    },
    /// Median rounds to the Ψ₀ threshold for m = n³ tasks at several sizes.
    Scaling {
        #[arg(long)]
        family: String,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000_000)]
        round_cap: u64,
    },
}

#[derive(clap::Args)]
#[group(required = true, multiple = true)]
struct GraphArgs {
    /// complete, cycle, path, torus2d, grid2d or hypercube.
    #[arg(long, requires = "n", conflicts_with = "edges")]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Edge-list file: node count on the first line, then "u v" per edge.
    #[arg(long)]
    edges: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Constant {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusArg {
    Default,
    NashOnly,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, output } => {
            let out = cmd_run(&config, output.as_deref())?;
            for line in &out.records {
                println!("{line}");
            }
            println!("wrote {}", out.directory.join("summary.json").display());
            Ok(())
        }
        Command::Spectra {
            graph,
            speeds,
            psi_constant,
        } => {
            let graph = match (graph.family, graph.n, graph.edges) {
                (_, _, Some(path)) => GraphSpec::EdgeList(path),
                (Some(name), Some(n), None) => GraphSpec::Family { name, n },
                _ => return Err(CliError::Config("give --family with --n, or --edges".into())),
            };
            let speeds = speeds.map_or(SpeedSpec::Uniform, SpeedSpec::Explicit);
            let constant = match psi_constant {
                Constant::Eight => CriticalConstant::Eight,
                Constant::Sixteen => CriticalConstant::Sixteen,
            };
            let (text, ok) = cmd_spectra(&graph, &speeds, constant)?;
            print!("{text}");
            if ok {
                Ok(())
            } else {
                Err(CliError::Verification("a spectral bound does not hold".into()))
            }
        }
        Command::Verify { corpus, alpha, report } => {
            let corpus = match corpus {
                CorpusArg::Default => CorpusChoice::Default,
                CorpusArg::NashOnly => CorpusChoice::NashOnly,
            };
            let out = cmd_verify(corpus, alpha, &report)?;
            for line in &out.lines {
                println!("{line}");
            }
            println!("report: {}", out.report.display());
            match out.counterexamples {
                None => Ok(()),
                Some(path) => Err(CliError::Verification(format!(
                    "counterexamples written to {}",
                    path.display()
                ))),
            }
        }
        Command::Scaling {
            family,
            sizes,
            trials,
            seed,
            round_cap,
        } => {
            let rows = cmd_scaling(&family, &sizes, trials, seed, round_cap)?;
            print!("{}", scaling_csv(&rows));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("slb: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
