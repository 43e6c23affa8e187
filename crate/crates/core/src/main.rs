use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netbandit::config::{parse_config, preset, ConfigError, PRESETS};
use netbandit::harness::{run_many, sweep, AggregateResult, CellResult, ExperimentConfig};
use netbandit::instances::{adjacency_files, load_adjacency, summary_stats, Summary};
use netbandit::output::emit_csv;

const EXIT_VALIDATION: u8 = 1;
const EXIT_CELL_FAILURE: u8 = 2;

/// Simulate adaptive targeting policies under sparse network interference.
#[derive(Parser)]
#[command(name = "netbandit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the cells of an experiment file or preset one after another.
    Run(RunArgs),
    /// Run the cells of an experiment file or preset concurrently.
    Sweep(RunArgs),
    /// Summarize a directory of adjacency matrices.
    Stats {
        /// Directory holding one adjacency file per network.
        dir: PathBuf,
    },
    /// List the built-in presets.
    Presets {
        /// Print the TOML of one preset instead.
        #[arg(long, value_name = "NAME")]
        show: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file or preset name.
    config: String,
    /// Override the replicate count of every cell.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the base seed of every cell.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the horizon of every cell.
    #[arg(long = "horizon", value_name = "T")]
    horizon: Option<usize>,
    /// Write CSV files into this directory instead of their configured paths.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Override the CSV stride of every cell.
    #[arg(long)]
    stride: Option<usize>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
}

fn validation_failure(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_VALIDATION)
}

fn apply_overrides(args: &RunArgs, configs: &mut [ExperimentConfig]) -> Result<(), String> {
    for (flag, value) in [("--runs", args.runs), ("--horizon", args.horizon), ("--stride", args.stride)] {
        if value == Some(0) {
            return Err(format!("{flag} must be at least 1"));
        }
    }
    for c in configs.iter_mut() {
        if let Some(n) = args.runs {
            c.n_runs = n;
        }
        if let Some(s) = args.seed {
            c.base_seed = s;
        }
        if let Some(t) = args.horizon {
            c.horizon = t;
        }
        if let Some(s) = args.stride {
            c.stride = s;
        }
        if let Some(dir) = &args.out_dir {
            let name = c
                .output
                .as_deref()
                .and_then(Path::file_name)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(format!("{}.csv", c.id)));
            c.output = Some(dir.join(name));
        }
    }
    Ok(())
}

fn execute(args: RunArgs, concurrent: bool) -> ExitCode {
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return validation_failure(e);
        }
    }
    let mut configs = match parse_config(&args.config) {
        Ok(c) => c,
        Err(e @ ConfigError::Io { .. }) if preset(&args.config).is_none() && !Path::new(&args.config).exists() => {
            return validation_failure(format!("{e} (not a file or a preset: {})", PRESETS.join(", ")))
        }
        Err(e) => return validation_failure(e),
    };
    if let Err(e) = apply_overrides(&args, &mut configs) {
        return validation_failure(e);
    }

    let cells: Vec<CellResult> = if concurrent {
        sweep(&configs)
    } else {
        configs
            .iter()
            .map(|c| {
                eprintln!("running {} / {}", c.id, c.policy.name());
                CellResult {
                    id: c.id.clone(),
                    policy: c.policy.name().to_string(),
                    result: run_many(c),
                }
            })
            .collect()
    };

    let mut files: BTreeMap<PathBuf, (usize, Vec<AggregateResult>)> = BTreeMap::new();
    let mut failed = false;
    for (cfg, cell) in configs.iter().zip(cells) {
        let path = cfg.output.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.id)));
        let entry = files.entry(path).or_insert((cfg.stride, Vec::new()));
        match cell.result {
            Ok(r) => {
                eprintln!(
                    "{} / {}: final mean regret {:.3} (per individual {:.5})",
                    cell.id,
                    cell.policy,
                    r.final_mean(),
                    r.final_per_individual()
                );
                entry.1.push(r);
            }
            Err(e) => {
                failed = true;
                eprintln!("{} / {} failed: {e}", cell.id, cell.policy);
            }
        }
    }
    for (path, (stride, results)) in &files {
        if let Err(e) = emit_csv(results, path, *stride) {
            eprintln!("error: {e}");
            failed = true;
        } else {
            eprintln!("wrote {}", path.display());
        }
    }
    if failed {
        ExitCode::from(EXIT_CELL_FAILURE)
    } else {
        ExitCode::SUCCESS
    }
}

fn stats(dir: &Path) -> ExitCode {
    let files = match adjacency_files(dir) {
        Ok(f) if !f.is_empty() => f,
        Ok(_) => return validation_failure(format!("{} contains no adjacency files", dir.display())),
        Err(e) => return validation_failure(e),
    };
    let mut ds = Vec::with_capacity(files.len());
    let mut sparsity = Vec::with_capacity(files.len());
    for f in &files {
        match load_adjacency(f) {
            Ok(adj) => {
                let s = summary_stats(&adj);
                ds.push(s.d as f64);
                sparsity.push(s.fractional_sparsity);
            }
            Err(e) => return validation_failure(e),
        }
    }
    println!("networks: {}", files.len());
    println!("{:<12}{:>12}{:>12}{:>12}{:>12}{:>12}", "", "mean", "median", "std", "min", "max");
    for (label, values) in [("individuals", &ds), ("sparsity", &sparsity)] {
        if let Some(s) = Summary::of(values) {
            println!(
                "{:<12}{:>12.4}{:>12.4}{:>12.4}{:>12.4}{:>12.4}",
                label, s.mean, s.median, s.std, s.min, s.max
            );
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => execute(args, false),
        Command::Sweep(args) => execute(args, true),
        Command::Stats { dir } => stats(&dir),
        Command::Presets { show: None } => {
            for name in PRESETS {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Presets { show: Some(name) } => match preset(&name) {
            Some(text) => {
                print!("{}", text.trim_start());
                ExitCode::SUCCESS
            }
            None => validation_failure(format!("unknown preset `{name}`; known: {}", PRESETS.join(", "))),
        },
    }
}
