use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fda_hybrid::selection::log_grid;
use fda_hybrid::simgen::draw_replication;
use fda_hybrid::{FunctionalDataset, Method};
use serde::Serialize;

use fda_hybrid_bench::config::{beta_label, ExperimentConfig, LayoutKind, OutputFormat, SelectionMode};
use fda_hybrid_bench::emit::{emit_results, Metadata};
use fda_hybrid_bench::ingest::{ingest_csv, write_dataset, Layout};
use fda_hybrid_bench::predict::{run_split_prediction, PREDICTION_COLUMNS};
use fda_hybrid_bench::study::{run_mc_study, MSE_COLUMNS, REPLICATION_COLUMNS};
use fda_hybrid_bench::sweep::{run_rho_sweep, SWEEP_COLUMNS};
use fda_hybrid_bench::tuning::select_and_fit;
use fda_hybrid_bench::BenchError;

#[derive(Parser, Debug)]
#[command(name = "fda-bench", version, about = "Slope estimation benchmarks for scalar-on-function regression")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Also write per-replication values, to PATH or next to --out.
    #[arg(long, global = true, num_args = 0..=1, value_name = "PATH")]
    dump_replications: Option<Option<PathBuf>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw one simulated dataset and write it as CSV.
    Simulate {
        #[arg(long, default_value_t = 0)]
        replication: u64,
    },
    /// Fit one method to one dataset and write the estimated slope.
    Fit {
        #[arg(long)]
        method: Method,
        #[arg(long, value_enum, default_value = "kfold")]
        selection: SelectionMode,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Monte-Carlo MSE table.
    McBench,
    /// Monte-Carlo MSE along a ridge-parameter grid for TR (r = 0) and HR.
    RhoSweep {
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5")]
        r_values: Vec<usize>,
        /// `lo:hi:count` on a log scale, or a comma-separated list.
        #[arg(long, default_value = "1e-5:10:40")]
        rho_grid: String,
    },
    /// Prediction error over random train/test splits of observed data.
    PredictSplit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        train_frac: Option<f64>,
        #[arg(long)]
        splits: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV data file; simulated from the configured design when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Response file for the two-file layout.
    #[arg(long)]
    responses: Option<PathBuf>,
    #[arg(long, value_enum)]
    layout: Option<LayoutKind>,
}

#[derive(Serialize)]
struct SlopeRow {
    t: f64,
    beta: f64,
}

fn parse_rho_grid(spec: &str) -> Result<Vec<f64>, BenchError> {
    let bad = || BenchError::Config(format!("invalid rho grid '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi >= lo && count >= 1) {
            return Err(bad());
        }
        return Ok(log_grid(lo, hi, count));
    }
    spec.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect()
}

fn load_config(common: &Common) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.design.seed = s;
    }
    if let Some(r) = common.reps {
        cfg.replications = r;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(o) = &common.out {
        cfg.output = Some(o.clone());
    }
    if let Some(f) = common.format {
        cfg.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_data(cfg: &ExperimentConfig, args: &DataArgs) -> Result<FunctionalDataset, BenchError> {
    let path = args.data.clone().or_else(|| cfg.data_file.clone());
    let Some(path) = path else {
        return draw(cfg, 0);
    };
    let layout = args.layout.unwrap_or(cfg.layout);
    let layout = match layout {
        LayoutKind::ResponseFirst => Layout::ResponseFirst,
        LayoutKind::TwoFile => Layout::TwoFile {
            responses: args
                .responses
                .clone()
                .or_else(|| cfg.response_file.clone())
                .ok_or_else(|| BenchError::Config("the two-file layout needs a response file".into()))?,
        },
    };
    ingest_csv(&path, &layout)
}

fn draw(cfg: &ExperimentConfig, replication: u64) -> Result<FunctionalDataset, BenchError> {
    let design = cfg.designs().swap_remove(0);
    Ok(draw_replication(&design, replication)?.data)
}

fn metadata(cfg: &ExperimentConfig, command: &str, started: Instant) -> anyhow::Result<Metadata> {
    Ok(Metadata {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        seed: cfg.design.seed,
        workers: cfg.workers,
        wall_time_secs: started.elapsed().as_secs_f64(),
        config: serde_json::to_value(cfg).context("serialising the configuration")?,
        failures: serde_json::Value::Null,
        summary: serde_json::Value::Null,
    })
}

fn dump_path(flag: &Option<Option<PathBuf>>, out: Option<&Path>, format: OutputFormat) -> Option<PathBuf> {
    match flag {
        None => None,
        Some(Some(p)) => Some(p.clone()),
        Some(None) => {
            let ext = match format {
                OutputFormat::Csv => "csv",
                OutputFormat::Json => "json",
            };
            Some(match out {
                Some(o) => o.with_extension(format!("replications.{ext}")),
                None => PathBuf::from(format!("replications.{ext}")),
            })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let started = Instant::now();
    let cfg = load_config(&cli.common)?;
    let out = cfg.output.as_deref();
    match &cli.command {
        Command::Simulate { replication } => {
            let data = draw(&cfg, *replication)?;
            match out {
                Some(p) => {
                    let f = std::fs::File::create(p).map_err(|e| BenchError::Emit(format!("{}: {e}", p.display())))?;
                    write_dataset(&data, std::io::BufWriter::new(f))?;
                }
                None => write_dataset(&data, std::io::stdout().lock())?,
            }
        }
        Command::Fit { method, selection, data } => {
            let dataset = load_data(&cfg, data)?;
            if *selection == SelectionMode::OracleBest {
                return Err(BenchError::Config("oracle_best needs the Monte-Carlo study".into()).into());
            }
            let fitted = select_and_fit(&dataset, *method, *selection, &cfg.tuning, None, cfg.design.seed)?;
            let est = &fitted.estimate;
            let rows: Vec<SlopeRow> = est
                .grid
                .points()
                .iter()
                .zip(est.beta.values())
                .map(|(&t, &beta)| SlopeRow { t, beta })
                .collect();
            let mut meta = metadata(&cfg, "fit", started)?;
            meta.summary = serde_json::json!({
                "method": est.method,
                "selection": selection,
                "r": est.r,
                "rho": est.rho,
                "df": est.df,
                "intercept": est.intercept,
                "n": dataset.n(),
                "m": dataset.m(),
            });
            eprintln!(
                "{} ({}): r = {:?}, rho = {:?}, df = {:.3}, intercept = {}",
                est.method,
                selection.label(),
                est.r,
                est.rho,
                est.df,
                est.intercept
            );
            emit_results(&rows, &["t", "beta"], out, cfg.format, &meta)?;
        }
        Command::McBench => {
            let study = run_mc_study(&cfg, cfg.workers)?;
            let mut meta = metadata(&cfg, "mc-bench", started)?;
            meta.failures = serde_json::to_value(&study.failures)?;
            let total: usize = study.failures.iter().map(|f| f.failed).sum();
            if total > 0 {
                eprintln!("{total} replication fits failed and were excluded");
            }
            emit_results(&study.table.rows, &MSE_COLUMNS, out, cfg.format, &meta)?;
            if let Some(p) = dump_path(&cli.common.dump_replications, out, cfg.format) {
                emit_results(&study.replications, &REPLICATION_COLUMNS, Some(&p), cfg.format, &meta)?;
            }
        }
        Command::RhoSweep { r_values, rho_grid } => {
            let grid = parse_rho_grid(rho_grid)?;
            let table = run_rho_sweep(&cfg, r_values, &grid, cfg.workers)?;
            let meta = metadata(&cfg, "rho-sweep", started)?;
            for design in cfg.designs() {
                let label = beta_label(&design.beta_choice);
                if let Some(ratio) = table.tikhonov_to_hybrid_ratio(label, design.alpha_decay) {
                    eprintln!("{label} alpha={}: min TR / min HR = {ratio:.3}", design.alpha_decay);
                }
            }
            emit_results(&table.rows, &SWEEP_COLUMNS, out, cfg.format, &meta)?;
        }
        Command::PredictSplit { data, train_frac, splits } => {
            let mut cfg = cfg.clone();
            if let Some(f) = train_frac {
                cfg.train_frac = *f;
            }
            if let Some(s) = splits {
                cfg.splits = *s;
            }
            if cfg.selection.contains(&SelectionMode::OracleBest) {
                cfg.selection.retain(|s| *s != SelectionMode::OracleBest);
            }
            if cfg.selection.is_empty() {
                cfg.selection.push(SelectionMode::Kfold);
            }
            cfg.validate()?;
            let dataset = load_data(&cfg, data)?;
            let table = run_split_prediction(&dataset, &cfg, cfg.workers)?;
            let meta = metadata(&cfg, "predict-split", started)?;
            emit_results(&table.rows, &PREDICTION_COLUMNS, cfg.output.as_deref(), cfg.format, &meta)?;
        }
    }
    std::io::stdout().flush().ok();
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<BenchError>().map_or(1, BenchError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
