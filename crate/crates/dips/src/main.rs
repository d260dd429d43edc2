use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dips::config::{parse_config, ResolvedConfig};
use dips::experiments::default_etas;
use dips::graph_io::read_graphs;
use dips::manifest::{Experiment, RunManifest};
use dips::records::{read_records, Format};
use dips::run::{replay_manifest, run_experiment, RunError};
use dips::selftest::{run_selftest, SELFTEST_GRAPHS};
use dips::verify::{verify_records, PolicyReplay};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

/// Discrete-event simulator for proof-of-work with optimization side problems.
#[derive(Parser)]
#[command(name = "dips", version)]
struct Cli {
    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Record format: csv or jsonl.
    #[arg(long, global = true, default_value = "csv")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML configuration file.
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// One run: records, graphs and manifest.
    Simulate(ConfigArg),
    /// Cumulative classical and solution blocks under v2 with problem replacement.
    Fig2(ConfigArg),
    /// Difficulty trajectories under v1 and v2.
    Fig3(ConfigArg),
    /// Solution-block fraction against eta for v1 and v2.
    EtaSweep {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated eta values (default: 10 log-spaced from 1 to 0.001).
        #[arg(long, value_delimiter = ',')]
        etas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 10)]
        instances: usize,
    },
    /// Attacker statistics per hoard target.
    Bubka {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 5])]
        hoard_targets: Vec<u32>,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
    },
    /// Replay a record file through chain validation.
    VerifyChain {
        records: PathBuf,
        graph_file: PathBuf,
        /// Also replay difficulties under this config's policy.
        #[arg(long, conflicts_with = "manifest")]
        config: Option<PathBuf>,
        /// Also replay difficulties under a manifest's config.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Enumerator against brute force on small random graphs.
    Selftest {
        #[arg(long, default_value_t = SELFTEST_GRAPHS)]
        graphs: usize,
    },
    /// Re-run the experiment recorded in a manifest into --out-dir.
    Replay {
        manifest: PathBuf,
        /// Exit 3 unless every output matches the original byte for byte.
        #[arg(long)]
        check: bool,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ResolvedConfig, RunError> {
    let config = parse_config(path)?;
    Ok(match seed {
        Some(s) => config.with_seed(s)?,
        None => config,
    })
}

fn run_error(e: RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_config_error() { EXIT_CONFIG } else { EXIT_FAILURE })
}

fn experiment(cli: &Cli, path: &Path, experiment: Experiment) -> ExitCode {
    let result = load(path, cli.seed).and_then(|c| run_experiment(&c, &experiment, cli.format, &cli.out_dir));
    match result {
        Ok(m) => {
            println!(
                "{}: wrote {} files to {}",
                m.experiment.name(),
                m.outputs.len() + 1,
                cli.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => run_error(e),
    }
}

fn verify_chain(records: &Path, graph_file: &Path, config: Option<&Path>, manifest: Option<&Path>) -> ExitCode {
    let replay_config = match (config, manifest) {
        (Some(path), _) => match parse_config(path) {
            Ok(c) => Some(c),
            Err(e) => return run_error(e.into()),
        },
        (None, Some(path)) => match RunManifest::read(path)
            .map_err(RunError::from)
            .and_then(|m| Ok(dips::config::parse_config_str(&m.config)?))
        {
            Ok(c) => Some(c),
            Err(e) => return run_error(e),
        },
        (None, None) => None,
    };
    let replay = replay_config.map(|c| PolicyReplay {
        policy: c.sim.policy,
        initial_d_b: c.sim.initial_d_b,
        initial_d_r: c.sim.initial_d_r,
    });
    let format = Format::from_path(records).unwrap_or(Format::Csv);
    let records = match read_records(records, format) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let graphs = match read_graphs(graph_file) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    match verify_records(&records, &graphs, replay.as_ref()) {
        Ok(report) => {
            println!(
                "ok: {} blocks, {} solution blocks, {} problem epochs{}",
                report.blocks,
                report.solution_blocks,
                report.epochs,
                if report.policy_replayed {
                    ", difficulties replayed"
                } else {
                    ""
                }
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("invalid chain: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn selftest(graphs: usize, seed: u64) -> ExitCode {
    let report = match run_selftest(graphs, seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    for case in report.failures() {
        eprintln!(
            "mismatch: n={} p={} seed={} brute force {} enumerated {}",
            case.n, case.edge_prob, case.seed, case.brute_force, case.enumerated
        );
    }
    let failed = report.failures().count();
    println!(
        "selftest: {}/{} graphs agree ({:.2?})",
        report.cases.len() - failed,
        report.cases.len(),
        report.elapsed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VALIDATION)
    }
}

fn replay(path: &Path, out_dir: &Path, check: bool) -> ExitCode {
    let original = match RunManifest::read(path) {
        Ok(m) => m,
        Err(e) => return run_error(e.into()),
    };
    let rerun = match replay_manifest(&original, out_dir) {
        Ok(m) => m,
        Err(e) => return run_error(e),
    };
    println!("replayed {} into {}", rerun.experiment.name(), out_dir.display());
    if !check {
        return ExitCode::SUCCESS;
    }
    let source = if path.is_dir() {
        path
    } else {
        path.parent().unwrap_or(Path::new("."))
    };
    let mut mismatches = 0;
    for name in &original.outputs {
        let same = match (std::fs::read(source.join(name)), std::fs::read(out_dir.join(name))) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        };
        if !same {
            eprintln!("differs: {name}");
            mismatches += 1;
        }
    }
    if mismatches == 0 && original.outputs == rerun.outputs {
        println!("all {} outputs identical", original.outputs.len());
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VALIDATION)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(c) => experiment(&cli, &c.config, Experiment::Simulate),
        Command::Fig2(c) => experiment(&cli, &c.config, Experiment::Fig2),
        Command::Fig3(c) => experiment(&cli, &c.config, Experiment::Fig3),
        Command::EtaSweep {
            config,
            etas,
            instances,
        } => experiment(
            &cli,
            &config.config,
            Experiment::EtaSweep {
                etas: etas.clone().unwrap_or_else(default_etas),
                instances: *instances,
            },
        ),
        Command::Bubka {
            config,
            hoard_targets,
            seeds,
        } => experiment(
            &cli,
            &config.config,
            Experiment::Bubka {
                hoard_targets: hoard_targets.clone(),
                seeds: *seeds,
            },
        ),
        Command::VerifyChain {
            records,
            graph_file,
            config,
            manifest,
        } => verify_chain(records, graph_file, config.as_deref(), manifest.as_deref()),
        Command::Selftest { graphs } => selftest(*graphs, cli.seed.unwrap_or(0)),
        Command::Replay { manifest, check } => replay(manifest, &cli.out_dir, *check),
    }
}
