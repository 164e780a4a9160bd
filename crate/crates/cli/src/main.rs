//! `qpatch`: batch driver for the patch-feature spoofing detector.
//!
//! Exit codes: 0 success, 1 internal failure, 2 bad input or configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::info;
use qpatch_core::kernel::KernelKind;
use qpatch_core::pipeline::{self, ExperimentConfig};
use qpatch_core::quantum::Axis;

#[derive(Parser, Debug)]
#[command(name = "qpatch", version, about = "Patch-statistic quantum kernel spoofing detector")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration file. Flags below override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    work_dir: Option<PathBuf>,
    /// Directory of bona fide WAV files.
    #[arg(long, global = true)]
    input_dir: Option<PathBuf>,
    /// Generate N synthetic bona fide utterances instead of reading --input-dir.
    #[arg(long, global = true, value_name = "N")]
    synthetic_audio: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of patches kept per utterance.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Circuit depth (1-3).
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Rotation axis for the third statistic (X, Y or Z).
    #[arg(long, global = true)]
    s3_axis: Option<Axis>,
    /// SVM box constraint.
    #[arg(long, global = true)]
    c: Option<f64>,
    /// Spoof noise SNR in dB; "inf" disables noise.
    #[arg(long, global = true)]
    snr_db: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Create spoofed copies and the train/dev manifest.
    Synth,
    /// Extract patch features for every manifest entry.
    Features,
    /// Compute train and dev-vs-train kernel matrices.
    Kernel {
        #[arg(long)]
        kind: KernelKind,
    },
    /// Train the SVM on a stored kernel and evaluate on dev.
    TrainEval {
        #[arg(long)]
        kind: KernelKind,
    },
    /// Every stage, both kernels.
    RunAll,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.work_dir {
            cfg.work_dir = v.clone();
        }
        if let Some(v) = &self.input_dir {
            cfg.input_dir = Some(v.clone());
        }
        if let Some(v) = self.synthetic_audio {
            cfg.synthetic_audio = Some(v);
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.k {
            cfg.patch.k = v;
        }
        if let Some(v) = self.depth {
            cfg.circuit.depth = v;
        }
        if let Some(v) = self.s3_axis {
            cfg.circuit.s3_axis = v;
        }
        if let Some(v) = self.c {
            cfg.svm.params.c = v;
        }
        if let Some(v) = self.snr_db {
            cfg.spoof.snr_db = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Failure that should exit with status 2 even though it is not a core error.
#[derive(Debug)]
struct BadInput(String);

impl std::fmt::Display for BadInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for BadInput {}

fn check_features(run: &pipeline::FeatureRun) -> anyhow::Result<()> {
    if run.skipped.is_empty() {
        return Ok(());
    }
    for (id, why) in &run.skipped {
        eprintln!("skipped {id}: {why}");
    }
    Err(BadInput(format!("{} utterance(s) could not be processed", run.skipped.len())).into())
}

fn print_report(r: &qpatch_core::eval::EvalReport) {
    println!(
        "{:<8} auroc={:.4} eer={:.4} n_train={} n_dev={} n_support={}",
        r.kind, r.auroc, r.eer, r.n_train, r.n_dev, r.n_support
    );
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = cli.common.resolve()?;
    match &cli.command {
        Command::Synth => {
            let m = pipeline::run_synth(&cfg)?;
            println!("manifest: {} entries -> {}", m.entries.len(), cfg.manifest_path().display());
        }
        Command::Features => {
            let run = pipeline::run_features(&cfg)?;
            println!("features: {} rows -> {}", run.table.rows.len(), cfg.features_path().display());
            check_features(&run)?;
        }
        Command::Kernel { kind } => {
            let (gram, _) = pipeline::run_kernel(&cfg, *kind)?;
            println!(
                "{kind} kernel: {}x{} min eigenvalue {:.3e}",
                gram.len(),
                gram.len(),
                gram.min_eigenvalue()
            );
        }
        Command::TrainEval { kind } => print_report(&pipeline::run_train_eval(&cfg, *kind)?),
        Command::RunAll => {
            let all = pipeline::run_all(&cfg)?;
            print_report(&all.quantum);
            print_report(&all.rbf);
            check_features(&all.features)?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<BadInput>().is_some() {
        return 2;
    }
    match err.downcast_ref::<qpatch_core::Error>() {
        Some(e) if e.is_bad_input() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    if let Ok(v) = std::env::var("QPATCH_THREADS") {
        match v.parse::<usize>().context("QPATCH_THREADS must be a positive integer") {
            Ok(n) if n > 0 => {
                if qpatch_core::par::init_thread_pool(n) {
                    info!("using {n} worker thread(s)");
                }
            }
            _ => {
                eprintln!("error: QPATCH_THREADS={v:?} is not a positive integer");
                return ExitCode::from(2);
            }
        }
    }

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
