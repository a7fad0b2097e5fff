//! `synthabd`: preprocess subjects, expand them into clustered label-map
//! variants, export synthetic training pairs, and score segmentations.

mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{pick, PipelineConfig};
use manifest::Manifest;

/// Exit status when the run finished but some subjects, samples or cases failed.
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "synthabd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline configuration (JSON). Relative paths inside it resolve
    /// against the file's directory.
    #[arg(long)]
    config: PathBuf,
    /// Base seed. Required: there is no time-based default.
    #[arg(long)]
    seed: u64,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Resample and crop/pad subject CT and label pairs onto the common grid.
    Preprocess {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input_dir: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Split background and segments by intensity clustering into label-map variants.
    ClusterVariants {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input_dir: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Render synthetic image/label pairs from a variant directory.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        variants_dir: Option<PathBuf>,
        #[arg(long)]
        count: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Print the manifest on stdout instead of writing manifest.json.
        #[arg(long)]
        stdout_manifest: bool,
    },
    /// Score predicted label maps against references (Dice, HD95).
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pred_dir: PathBuf,
        #[arg(long)]
        gt_dir: PathBuf,
        /// JSON object mapping label names to ids, inline or as a file path.
        #[arg(long)]
        labels: String,
        /// Report CSV; summary.json and manifest.json go next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kruskal-Wallis test per (label, metric) across two or more reports.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Preprocess { common, .. }
            | Command::ClusterVariants { common, .. }
            | Command::Synth { common, .. }
            | Command::Evaluate { common, .. }
            | Command::Compare { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Preprocess { .. } => "preprocess",
            Command::ClusterVariants { .. } => "cluster-variants",
            Command::Synth { .. } => "synth",
            Command::Evaluate { .. } => "evaluate",
            Command::Compare { .. } => "compare",
        }
    }
}

fn parent_dir(p: &Path) -> PathBuf {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn run(cli: Cli) -> Result<usize> {
    let common = cli.command.common().clone();
    if let Some(n) = common.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker pool")?;
    }
    let (cfg, _) = PipelineConfig::load(&common.config)?;
    let seed = common.seed;
    let mut manifest = Manifest::new(cli.command.name(), seed, &cfg)?;

    let (outcome, manifest_dir, to_stdout) = match cli.command {
        Command::Preprocess { input_dir, out_dir, .. } => {
            let input = pick(input_dir, &cfg.paths.input_dir, "input directory")?;
            let out = pick(out_dir, &cfg.paths.preprocessed_dir, "output directory")?;
            (commands::preprocess::run(&cfg, &input, &out, &mut manifest)?, out, false)
        }
        Command::ClusterVariants { input_dir, out_dir, .. } => {
            let input = pick(input_dir, &cfg.paths.preprocessed_dir, "preprocessed directory")?;
            let out = pick(out_dir, &cfg.paths.variants_dir, "variants directory")?;
            (commands::cluster::run(&cfg, &input, &out, seed, &mut manifest)?, out, false)
        }
        Command::Synth { variants_dir, count, out_dir, stdout_manifest, .. } => {
            let variants = pick(variants_dir, &cfg.paths.variants_dir, "variants directory")?;
            let out = pick(out_dir, &cfg.paths.synth_dir, "output directory")?;
            let o = commands::synth::run(&cfg, &variants, &out, count, seed, &mut manifest)?;
            (o, out, stdout_manifest)
        }
        Command::Evaluate { pred_dir, gt_dir, labels, out, .. } => {
            let labels = commands::evaluate::parse_labels(&labels)?;
            let report = match out {
                Some(p) => p,
                None => pick(None, &cfg.paths.eval_dir, "--out")?.join("report.csv"),
            };
            let o = commands::evaluate::run(&cfg, &pred_dir, &gt_dir, &labels, &report, &mut manifest)?;
            (o, parent_dir(&report), false)
        }
        Command::Compare { reports, out, .. } => {
            let out = match out {
                Some(p) => p,
                None => pick(None, &cfg.paths.eval_dir, "--out")?.join("compare.csv"),
            };
            (commands::compare::run(&reports, &out, &mut manifest)?, parent_dir(&out), false)
        }
    };

    if to_stdout {
        print!("{}", manifest.to_json()?);
    } else {
        manifest.write(&manifest_dir)?;
    }
    Ok(outcome.failures)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SYNTHABD_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("synthabd: {n} item(s) failed; see manifest.json");
            ExitCode::from(EXIT_PARTIAL)
        }
        Err(e) => {
            eprintln!("synthabd: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
