//! Command-line front end: denoise, train, evaluate, grid-search, report.
//!
//! Exit codes are a stable contract: 0 success, 2 configuration error,
//! 3 data error, 4 when every grid trial failed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::{load_run_config, RunConfig};
use crate::data::{load_capacity_csv, save_capacity_csv, CapacitySeries, CsvSchema};
use crate::error::{Error, Result};
use crate::pipeline::{
    evaluate, grid_search, normalize, train_branch, write_trial_table, TrainedBranch,
};
use crate::report::{read_tables, summarize, write_best_rows_csv, write_plot_data_csv, write_summary_csv};
use crate::wavelet::{
    wavelet_denoise, BoundaryMode, ThresholdMode, WaveletConfig, WaveletFamily,
};

pub const EXIT_ALL_TRIALS_FAILED: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "desate", version, about = "Battery-health prognostics: noise injection, denoising, and attention-based capacity forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Maximum number of grid trials trained concurrently.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Denoise a capacity CSV and write the result plus a JSON sidecar.
    Denoise(DenoiseArgs),
    /// Train every branch in the run config and write checkpoints.
    Train(TrainArgs),
    /// Evaluate trained branches on the test split.
    Evaluate(EvaluateArgs),
    /// Sweep the hyperparameter grid and persist the trial table.
    GridSearch(GridSearchArgs),
    /// Summarize one or more trial tables into plot-ready CSVs.
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum DenoiseMethod {
    Wavelet,
    Dae,
}

#[derive(Args, Debug)]
pub struct DenoiseArgs {
    /// Input capacity CSV (columns: cycle, capacity_ah).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "wavelet")]
    pub method: DenoiseMethod,
    /// Output CSV path; a `<out>.json` sidecar records the parameters.
    #[arg(long)]
    pub out: PathBuf,
    /// Branch checkpoint holding the trained DAE (required for --method dae).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Wavelet shrinkage threshold.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    /// soft | hard | garrote
    #[arg(long, default_value = "hard")]
    pub mode: String,
    /// haar | db4
    #[arg(long, default_value = "db4")]
    pub wavelet: String,
    /// symmetric | periodic
    #[arg(long, default_value = "symmetric")]
    pub boundary: String,
    #[arg(long, default_value = "series")]
    pub battery_id: String,
    #[arg(long, default_value_t = 1.0)]
    pub rated_capacity: f64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Override the epoch count of every branch.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Override the global seed (takes precedence over DE_SATE_SEED).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Directory of branch checkpoints; defaults to the run's checkpoint dir.
    #[arg(long)]
    pub checkpoints: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GridSearchArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Trial table CSVs to summarize (concatenated).
    #[arg(long, required = true, num_args = 1..)]
    pub tables: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(jobs) = cli.jobs {
        // ignore failure: the global pool may already exist in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let outcome = match cli.command {
        Command::Denoise(args) => cmd_denoise(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::GridSearch(args) => cmd_grid_search(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("DE_SATE_SEED") {
        Ok(v) => v
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::config(format!("DE_SATE_SEED must be an integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Flag > DE_SATE_SEED > config.
fn resolve_seed(cfg: &mut RunConfig, flag: Option<u64>) -> Result<()> {
    if let Some(s) = flag.map(Ok).or_else(|| env_seed().transpose()).transpose()? {
        cfg.seed = s;
        for b in &mut cfg.branches {
            b.train.seed = s;
        }
        if let Some(g) = &mut cfg.grid {
            g.base.seed = s;
        }
    }
    Ok(())
}

fn apply_overrides(cfg: &mut RunConfig, epochs: Option<usize>, out: &Option<PathBuf>) {
    if let Some(e) = epochs {
        for b in &mut cfg.branches {
            b.train.epochs = e;
        }
        if let Some(g) = &mut cfg.grid {
            g.base.epochs = e;
        }
    }
    if let Some(dir) = out {
        cfg.output_dir = dir.clone();
    }
}

/// Content-addressed run directory: `<output_dir>/<config hash>`.
fn run_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.join(cfg.hash());
    std::fs::create_dir_all(&dir)
        .map_err(|e| Error::data(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: String,
    seed: u64,
    version: &'a str,
    wall_seconds: f64,
}

fn write_manifest(dir: &Path, command: &str, cfg: &RunConfig, wall_seconds: f64) -> Result<()> {
    let manifest = Manifest {
        command,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION"),
        wall_seconds,
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))
}

fn load_normalized(cfg: &RunConfig) -> Result<(CapacitySeries, Vec<f64>)> {
    let series = cfg.data.load()?;
    let x = normalize(&series)?;
    Ok((series, x))
}

fn cmd_denoise(args: &DenoiseArgs) -> Result<i32> {
    let schema = CsvSchema::default();
    let series = load_capacity_csv(&args.input, &args.battery_id, args.rated_capacity, &schema)?;

    #[derive(Serialize)]
    struct Sidecar<'a> {
        method: &'a str,
        parameters: serde_json::Value,
        input: String,
    }
    let (denoised, sidecar) = match args.method {
        DenoiseMethod::Wavelet => {
            let cfg = WaveletConfig {
                family: parse_family(&args.wavelet)?,
                levels: args.levels,
                mode: parse_mode(&args.mode)?,
                epsilon: args.epsilon,
                boundary: parse_boundary(&args.boundary)?,
            };
            let out = wavelet_denoise(&series.capacity_ah, &cfg)?;
            (out, Sidecar {
                method: "wavelet",
                parameters: serde_json::to_value(&cfg)?,
                input: args.input.display().to_string(),
            })
        }
        DenoiseMethod::Dae => {
            let path = args.checkpoint.as_ref().ok_or_else(|| {
                Error::config("--method dae requires --checkpoint <trained branch>")
            })?;
            if !path.exists() {
                return Err(Error::config(format!(
                    "checkpoint not found: {}",
                    path.display()
                )));
            }
            let branch = load_checkpoint(path)?;
            let dae = branch.dae.as_ref().ok_or_else(|| {
                Error::config(format!("checkpoint {} holds no DAE model", path.display()))
            })?;
            let m = dae.m;
            if series.len() < m {
                return Err(Error::data(format!(
                    "series of length {} shorter than DAE window {m}",
                    series.len()
                )));
            }
            // overlap-average sliding reconstructions back onto the series
            let x = &series.capacity_ah;
            let mut acc = vec![0.0; x.len()];
            let mut hits = vec![0.0; x.len()];
            for start in 0..=x.len() - m {
                let rec = dae.reconstruct(&x[start..start + m])?;
                for (j, v) in rec.iter().enumerate() {
                    acc[start + j] += v;
                    hits[start + j] += 1.0;
                }
            }
            let out: Vec<f64> = acc.iter().zip(&hits).map(|(a, h)| a / h).collect();
            (out, Sidecar {
                method: "dae",
                parameters: serde_json::json!({ "checkpoint": path.display().to_string(), "window": m }),
                input: args.input.display().to_string(),
            })
        }
    };
    let result = CapacitySeries {
        battery_id: series.battery_id.clone(),
        cycles: series.cycles.clone(),
        capacity_ah: denoised,
        rated_capacity_ah: series.rated_capacity_ah,
    };
    save_capacity_csv(&result, &args.out, &schema)?;
    let sidecar_path = PathBuf::from(format!("{}.json", args.out.display()));
    std::fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar)?)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", sidecar_path.display())))?;
    println!("wrote {} and {}", args.out.display(), sidecar_path.display());
    Ok(0)
}

fn parse_mode(s: &str) -> Result<ThresholdMode> {
    match s {
        "soft" => Ok(ThresholdMode::Soft),
        "hard" => Ok(ThresholdMode::Hard),
        "garrote" => Ok(ThresholdMode::Garrote),
        _ => Err(Error::config(format!("unknown threshold mode {s:?} (soft|hard|garrote)"))),
    }
}

fn parse_family(s: &str) -> Result<WaveletFamily> {
    match s {
        "haar" => Ok(WaveletFamily::Haar),
        "db4" => Ok(WaveletFamily::Daubechies4),
        _ => Err(Error::config(format!("unknown wavelet {s:?} (haar|db4)"))),
    }
}

fn parse_boundary(s: &str) -> Result<BoundaryMode> {
    match s {
        "symmetric" => Ok(BoundaryMode::SymmetricPad),
        "periodic" => Ok(BoundaryMode::PeriodicPad),
        _ => Err(Error::config(format!("unknown boundary {s:?} (symmetric|periodic)"))),
    }
}

fn cmd_train(args: &TrainArgs) -> Result<i32> {
    let start = Instant::now();
    let mut cfg = load_run_config(&args.config)?;
    resolve_seed(&mut cfg, args.seed)?;
    apply_overrides(&mut cfg, args.epochs, &args.out);
    if cfg.branches.is_empty() {
        return Err(Error::config("train: config declares no branches"));
    }
    let (series, x) = load_normalized(&cfg)?;
    let (train_x, _) = cfg.split(&x);
    println!(
        "battery {}: temporal split, first {:.0}% of {} cycles train",
        series.battery_id,
        cfg.split_fraction * 100.0,
        x.len()
    );

    let dir = run_dir(&cfg)?;
    let ckpt_dir = dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir)
        .map_err(|e| Error::data(format!("cannot create {}: {e}", ckpt_dir.display())))?;
    for branch in &cfg.branches {
        let trained = train_branch(branch, train_x)?;
        let path = ckpt_dir.join(format!("{}.json", branch.id));
        save_checkpoint(&trained, &path)?;
        write_loss_curve(&dir.join(format!("loss_{}.csv", branch.id)), &trained.loss_curve)?;
        println!(
            "branch {}: {} epochs, final loss {:.6e} -> {}",
            branch.id,
            trained.loss_curve.len(),
            trained.loss_curve.last().unwrap_or(&f64::NAN),
            path.display()
        );
    }
    write_manifest(&dir, "train", &cfg, start.elapsed().as_secs_f64())?;
    Ok(0)
}

fn write_loss_curve(path: &Path, curve: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "loss"])?;
    for (i, l) in curve.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()])?;
    }
    w.flush().map_err(|e| Error::data(format!("flushing loss curve: {e}")))
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<i32> {
    let start = Instant::now();
    let mut cfg = load_run_config(&args.config)?;
    resolve_seed(&mut cfg, args.seed)?;
    apply_overrides(&mut cfg, None, &args.out);
    let (series, x) = load_normalized(&cfg)?;
    let (_, test_x) = cfg.split(&x);
    let dir = run_dir(&cfg)?;
    let ckpt_dir = args.checkpoints.clone().unwrap_or_else(|| dir.join("checkpoints"));

    let mut branches: Vec<TrainedBranch> = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&ckpt_dir)
        .map_err(|e| Error::config(format!("cannot read checkpoints {}: {e}", ckpt_dir.display())))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    entries.sort();
    for path in entries {
        branches.push(load_checkpoint(&path)?);
    }
    if branches.is_empty() {
        return Err(Error::config(format!("no checkpoints found in {}", ckpt_dir.display())));
    }

    println!(
        "battery {}: temporal split, first {:.0}% of {} cycles train, rest test",
        series.battery_id,
        cfg.split_fraction * 100.0,
        x.len()
    );
    let report = evaluate(&branches, test_x, cfg.eol_threshold)?;
    for (id, m) in &report.per_branch {
        println!(
            "branch {id}: RE {:.4}  MAE {:.4}  RMSE {:.4}  (capacity RE {:.4})",
            m.re, m.mae, m.rmse, m.re_capacity
        );
    }
    println!("selected branch: {}", report.selected);

    std::fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&report)?)
        .map_err(|e| Error::data(format!("cannot write metrics.json: {e}")))?;
    let mut w = csv::Writer::from_path(dir.join("metrics.csv"))?;
    w.write_record(["branch", "RE", "MAE", "RMSE", "RE_capacity", "selected"])?;
    for (id, m) in &report.per_branch {
        w.write_record([
            id.clone(),
            m.re.to_string(),
            m.mae.to_string(),
            m.rmse.to_string(),
            m.re_capacity.to_string(),
            (*id == report.selected).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::data(format!("flushing metrics: {e}")))?;

    for branch in &branches {
        let (one_step, rollout, targets) = branch.predict_test(test_x)?;
        let path = dir.join(format!("trajectory_{}.csv", branch.config.id));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["step", "actual", "one_step", "rollout"])?;
        for i in 0..targets.len() {
            w.write_record([
                i.to_string(),
                targets[i].to_string(),
                one_step[i].to_string(),
                rollout[i].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::data(format!("flushing trajectory: {e}")))?;
    }
    write_manifest(&dir, "evaluate", &cfg, start.elapsed().as_secs_f64())?;
    Ok(0)
}

fn cmd_grid_search(args: &GridSearchArgs) -> Result<i32> {
    let start = Instant::now();
    let mut cfg = load_run_config(&args.config)?;
    resolve_seed(&mut cfg, args.seed)?;
    apply_overrides(&mut cfg, args.epochs, &args.out);
    let grid = cfg
        .grid
        .clone()
        .ok_or_else(|| Error::config("grid-search: config has no `grid` section"))?;
    let (_, x) = load_normalized(&cfg)?;
    let (train_x, test_x) = cfg.split(&x);
    let dir = run_dir(&cfg)?;

    let records = grid_search(&grid.base, &grid.axes, train_x, test_x)?;
    let table_path = dir.join("trials.csv");
    write_trial_table(&table_path, &records)?;
    write_manifest(&dir, "grid-search", &cfg, start.elapsed().as_secs_f64())?;

    let failures = records.iter().filter(|r| r.re.is_none()).count();
    println!(
        "{} trials ({} failed) -> {}",
        records.len(),
        failures,
        table_path.display()
    );
    for r in records.iter().take(3) {
        if let (Some(re), Some(mae), Some(rmse)) = (r.re, r.mae, r.rmse) {
            println!(
                "  {}: LR {} NoL {} HD {} NL {}  RE {:.4} MAE {:.4} RMSE {:.4}",
                r.trial_id, r.lr, r.nol, r.hd, r.nl, re, mae, rmse
            );
        }
    }
    if failures == records.len() {
        eprintln!("error: all {} trials failed", records.len());
        return Ok(EXIT_ALL_TRIALS_FAILED);
    }
    Ok(0)
}

fn cmd_report(args: &ReportArgs) -> Result<i32> {
    let records = read_tables(&args.tables)?;
    let summary = summarize(&records)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Error::data(format!("cannot create {}: {e}", args.out.display())))?;
    write_summary_csv(&summary, &args.out.join("summary.csv"))?;
    write_plot_data_csv(&summary, &args.out.join("plot_data.csv"))?;
    write_best_rows_csv(&summary, &args.out.join("best_rows.csv"))?;
    println!(
        "{} trials summarized ({} failed) -> {}",
        records.len(),
        summary.failed_trials,
        args.out.display()
    );
    Ok(0)
}
