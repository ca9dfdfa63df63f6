//! Command-line entry point.
//!
//! Every subcommand resolves one [`RunConfig`] the same way: start from the
//! defaults, overlay `--config <file>` if given, apply `--set key=value`
//! overrides in order, and finally `--seed`. Exit codes: 0 on success, 2
//! when the configuration (file, override, or flag combination) is rejected,
//! 1 on runtime failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use permrl::curriculum::{CurriculumError, RunConfig};
use permrl::harness::{
    cmd_compare, cmd_cost_report, cmd_diagnose_groups, cmd_eval_nn, cmd_gen_perms, cmd_make_data,
    cmd_train, cmd_valsize_sweep, error_heatmap, hamming_csv, hamming_rows, load_task_episodes,
    load_task_metrics, overhead_ratio, quartile_csv, quartile_rows, sweep_csv,
    validation_sweep_batches, DEFAULT_KS,
};
use permrl::permset::PermutationSet;
use permrl::toydata::TaskKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Spatial,
    Temporal,
}

impl From<TaskArg> for TaskKind {
    fn from(value: TaskArg) -> Self {
        match value {
            TaskArg::Spatial => TaskKind::Spatial,
            TaskArg::Temporal => TaskKind::Temporal,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "permrl",
    about = "Self-supervised ordering tasks with a learned permutation curriculum",
    version
)]
struct Cli {
    /// JSON config file; unset fields take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed override (applied after --config and --set).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory or file, depending on the subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Config field override, e.g. --set episodes=10 --set mode=random.
    /// Values parse as JSON when possible and as strings otherwise.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a maximally-diverse permutation pool.
    GenPerms {
        /// Elements each permutation reorders.
        #[arg(long)]
        n: usize,
        /// Pool size.
        #[arg(long)]
        size: usize,
    },
    /// Generate one task's dataset.
    MakeData {
        #[arg(long, value_enum, default_value_t = TaskArg::Spatial)]
        task: TaskArg,
    },
    /// Run training and write all artifacts to --out.
    Train,
    /// Nearest-neighbor retrieval accuracy of a checkpoint's features.
    EvalNn {
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value_t = TaskArg::Spatial)]
        task: TaskArg,
        /// Comma-separated top-k values.
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
    },
    /// Policy vs uniform vs inverse selection from a shared warmup.
    Compare {
        /// Comma-separated master seeds (at least two).
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        /// Warmup episodes before the modes fork.
        #[arg(long, default_value_t = 12)]
        warmup_episodes: usize,
    },
    /// Quartile and Hamming-distance selection reports from a run.
    SelectionReport {
        /// Run directory holding episodes.jsonl and the permutation pools.
        #[arg(long, value_name = "DIR")]
        run: PathBuf,
    },
    /// Per-permutation error trajectories from a run, as CSV.
    ErrorHeatmap {
        #[arg(long, value_name = "DIR")]
        run: PathBuf,
        #[arg(long, value_enum, default_value_t = TaskArg::Spatial)]
        task: TaskArg,
    },
    /// Validation-compute overhead of a run, or the closed form alone.
    CostReport {
        /// Run directory; omit to evaluate the closed form from the flags.
        #[arg(long, value_name = "DIR")]
        run: Option<PathBuf>,
        /// Closed form: validation set size.
        #[arg(long, default_value_t = 100)]
        val_size: usize,
        /// Closed form: permutation pool size.
        #[arg(long, default_value_t = 1000)]
        pool: usize,
        /// Closed form: batch size.
        #[arg(long, default_value_t = 128)]
        batch: usize,
        /// Closed form: episode count.
        #[arg(long, default_value_t = 90)]
        episodes: usize,
        /// Closed form: total training batches.
        #[arg(long, default_value_t = 350_000.0)]
        train_batches: f64,
    },
    /// Error spread across seeded validation subsets of several sizes.
    ValsizeSweep {
        /// Checkpoints to evaluate (repeatable).
        #[arg(long, value_name = "PATH", required = true)]
        checkpoint: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = TaskArg::Spatial)]
        task: TaskArg,
        /// Comma-separated subset sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
    /// Pairwise distribution tests between difficulty groups.
    DiagnoseGroups {
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value_t = TaskArg::Spatial)]
        task: TaskArg,
        /// Group count to test; defaults to the config's n_groups.
        #[arg(long)]
        groups: Option<usize>,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
    },
}

/// Builds the run config from defaults, the optional file, `--set`
/// overrides, and the `--seed` flag, rejecting unknown keys.
fn resolve_config(cli: &Cli) -> Result<RunConfig, CurriculumError> {
    let mut value: serde_json::Value = match &cli.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => serde_json::json!({}),
    };
    for entry in &cli.set {
        let (key, raw) = entry.split_once('=').ok_or_else(|| {
            config_error(format!("--set expects KEY=VALUE, got {entry:?}"))
        })?;
        let parsed: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        set_path(&mut value, key, parsed)?;
    }
    if let Some(seed) = cli.seed {
        set_path(&mut value, "seed", serde_json::json!(seed))?;
    }
    let config: RunConfig = serde_json::from_value(value)
        .map_err(|e| config_error(format!("config rejected: {e}")))?;
    Ok(config)
}

fn config_error(message: String) -> CurriculumError {
    CurriculumError::Config(permrl::curriculum::ConfigError {
        issues: vec![message],
    })
}

/// Sets a (possibly dotted) path inside a JSON object tree.
fn set_path(
    root: &mut serde_json::Value,
    path: &str,
    new: serde_json::Value,
) -> Result<(), CurriculumError> {
    let mut node = root;
    let mut segments = path.split('.').peekable();
    while let Some(segment) = segments.next() {
        let object = node
            .as_object_mut()
            .ok_or_else(|| config_error(format!("--set path {path:?} crosses a non-object")))?;
        if segments.peek().is_none() {
            object.insert(segment.to_string(), new);
            return Ok(());
        }
        node = object
            .entry(segment.to_string())
            .or_insert_with(|| serde_json::json!({}));
    }
    Err(config_error(format!("--set path {path:?} is empty")))
}

/// Writes `contents` to `--out` when given, otherwise prints it.
fn emit(out: Option<&Path>, file_name: &str, contents: &str) -> Result<(), CurriculumError> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(file_name);
            fs::write(&path, contents)?;
            println!("{}", path.display());
            Ok(())
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CurriculumError> {
    let config = resolve_config(cli)?;
    match &cli.command {
        Command::GenPerms { n, size } => {
            let summary = cmd_gen_perms(*n, *size, config.seed, cli.out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::MakeData { task } => {
            let summary = cmd_make_data(&config, (*task).into(), cli.out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Train => {
            let out = cli.out.as_deref().ok_or_else(|| {
                config_error("train requires --out <dir> for its artifacts".into())
            })?;
            let summary = cmd_train(&config, out)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "out": out.display().to_string(),
                    "mode": config.mode.label(),
                    "episodes": config.episodes,
                    "final_spatial_error": summary.final_spatial_error,
                    "final_temporal_error": summary.final_temporal_error,
                    "training_forwards": summary.training_forwards,
                    "validation_forwards": summary.validation_forwards,
                }))?
            );
        }
        Command::EvalNn { checkpoint, task, k } => {
            let ks: &[usize] = if k.is_empty() { &DEFAULT_KS } else { k };
            let report = cmd_eval_nn(&config, checkpoint, (*task).into(), ks)?;
            emit(cli.out.as_deref(), "retrieval.csv", &report.to_csv())?;
        }
        Command::Compare {
            seeds,
            warmup_episodes,
        } => {
            let out = cli.out.as_deref().ok_or_else(|| {
                config_error("compare requires --out <dir> for its runs".into())
            })?;
            let report = cmd_compare(&config, seeds, *warmup_episodes, out)?;
            fs::write(out.join("compare_summary.csv"), report.summary_csv())?;
            fs::write(out.join("compare_detail.csv"), report.detail_csv())?;
            print!("{}", report.summary_csv());
        }
        Command::SelectionReport { run } => {
            let out = cli.out.as_deref().unwrap_or(run);
            fs::create_dir_all(out)?;
            let mut wrote = Vec::new();
            for task in ["spatial", "temporal"] {
                let records = match load_task_episodes(run, task) {
                    Ok(records) => records,
                    Err(CurriculumError::NoRecords(_)) => continue,
                    Err(e) => return Err(e),
                };
                let set = PermutationSet::load(&run.join(format!("perms_{task}.txt")))?;
                let quartiles = quartile_rows(&records)?;
                let hamming = hamming_rows(&records, &set)?;
                let q_path = out.join(format!("selection_quartiles_{task}.csv"));
                let h_path = out.join(format!("selection_hamming_{task}.csv"));
                fs::write(&q_path, quartile_csv(&quartiles))?;
                fs::write(&h_path, hamming_csv(&hamming))?;
                wrote.push(q_path);
                wrote.push(h_path);
            }
            if wrote.is_empty() {
                return Err(CurriculumError::NoRecords(format!(
                    "no episode records in {}",
                    run.display()
                )));
            }
            for path in wrote {
                println!("{}", path.display());
            }
        }
        Command::ErrorHeatmap { run, task } => {
            let task: TaskKind = (*task).into();
            let records = load_task_metrics(run, task.label())?;
            let map = error_heatmap(&records)?;
            emit(
                cli.out.as_deref(),
                &format!("error_heatmap_{}.csv", task.label()),
                &map.to_csv(),
            )?;
        }
        Command::CostReport {
            run,
            val_size,
            pool,
            batch,
            episodes,
            train_batches,
        } => match run {
            Some(dir) => {
                let report = cmd_cost_report(dir)?;
                print!("{}", report.to_text());
            }
            None => {
                let v = validation_sweep_batches(*val_size, *pool, *batch);
                let overhead = overhead_ratio(*episodes, 2, v, *train_batches);
                println!("validation sweep: {v} batch-equivalents");
                println!(
                    "overhead: {} * 2 * {v} / {train_batches} = {:.4}%",
                    episodes,
                    overhead * 100.0
                );
            }
        },
        Command::ValsizeSweep {
            checkpoint,
            task,
            sizes,
            repeats,
        } => {
            let paths: Vec<&Path> = checkpoint.iter().map(PathBuf::as_path).collect();
            let rows = cmd_valsize_sweep(&config, &paths, (*task).into(), sizes, *repeats)?;
            emit(cli.out.as_deref(), "valsize_sweep.csv", &sweep_csv(&rows))?;
        }
        Command::DiagnoseGroups {
            checkpoint,
            task,
            groups,
            alpha,
        } => {
            let n_groups = groups.unwrap_or(config.n_groups);
            let report =
                cmd_diagnose_groups(&config, checkpoint, (*task).into(), n_groups, *alpha)?;
            println!("{}", report.verdict());
            print!("{}", report.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                CurriculumError::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
