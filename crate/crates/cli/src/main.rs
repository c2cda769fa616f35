//! `lomo`: curate interleaved corpora, render benchmarks and compute
//! alignment metrics.

mod config;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lomo_core::corpus::{manifest_path, stats_path, CurationManifest};
use lomo_core::evalprep::transform_benchmark;
use lomo_core::localizer::PositionMode;
use lomo_core::metrics::{
    decomposition_check, mir_from_reader, pairwise_from_reader, AnswerDistribution, HsdReader, DEFAULT_PCD_LAYER,
};
use lomo_core::pipeline::{curate, match_modality_ratio, CurationStats, ModalityRatio};
use serde::{Deserialize, Serialize};

use crate::config::RenderArgs;
use crate::report::{MirOutput, PcdOutput, StatsSummary};

#[derive(Debug, Parser)]
#[command(name = "lomo", version, about = "Local modality substitution for instruction corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rewrite a fraction of text-only instances into text/image/text form
    Curate(CurateArgs),
    /// Render every benchmark question as a single image
    EvalRender(EvalRenderArgs),
    /// Downsample a corpus to an image-bearing:text-only ratio
    RatioMatch(RatioMatchArgs),
    /// Alignment diagnostics over hidden-state dumps
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Summarize a curation manifest
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct CurateArgs {
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
    /// TOML file with pipeline settings
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of text-only instances to rewrite
    #[arg(long)]
    rewrite_ratio: Option<f64>,
    /// prefix, middle, suffix or multi_span
    #[arg(long)]
    position_mode: Option<PositionMode>,
    /// Skip perceptual distortion
    #[arg(long)]
    no_distortion: bool,
    #[arg(long)]
    workers: Option<usize>,
    /// Log and skip malformed input lines
    #[arg(long)]
    lenient: bool,
    #[arg(long)]
    batch_size: Option<usize>,
    #[command(flatten)]
    render: RenderArgs,
}

#[derive(Debug, Args)]
struct EvalRenderArgs {
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
    /// TOML file; only its [render] table is used
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    render: RenderArgs,
}

#[derive(Debug, Args)]
struct RatioMatchArgs {
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
    /// IMAGE:TEXT, e.g. 1:1; defaults to target_image_text_ratio from the config
    #[arg(long)]
    target: Option<ModalityRatio>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum MetricsCommand {
    /// Layer-wise mean Fréchet distance between visual and textual tokens
    Mir {
        #[arg(long)]
        hsd: PathBuf,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-sample cosine distance between mean textual and visual states
    Pcd {
        #[arg(long)]
        hsd: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PCD_LAYER)]
        layer: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Loss split and cross-entropy/KL identity for answer distributions
    Decomp(DecompArgs),
}

#[derive(Debug, Args)]
struct DecompArgs {
    /// Comma-separated probabilities given the text question
    #[arg(long, value_delimiter = ',', requires_all = ["p_tx", "answer"], conflicts_with = "input")]
    p_x: Option<Vec<f64>>,
    /// Comma-separated probabilities given the rewritten question
    #[arg(long, value_delimiter = ',')]
    p_tx: Option<Vec<f64>>,
    /// Index of the ground-truth answer
    #[arg(long)]
    answer: Option<usize>,
    /// JSON Lines file of {"p_x": [...], "p_tx": [...], "answer": n}
    #[arg(long, required_unless_present = "p_x")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Manifest file, or the output corpus it belongs to
    path: PathBuf,
    /// Stats sidecar; found next to the manifest by default
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("lomo: error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Curate(args) => cmd_curate(args),
        Command::EvalRender(args) => cmd_eval_render(args),
        Command::RatioMatch(args) => cmd_ratio_match(args),
        Command::Metrics(cmd) => cmd_metrics(cmd),
        Command::Stats(args) => cmd_stats(args),
    }
}

fn print_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct RunSummary<'a> {
    manifest: PathBuf,
    counts: &'a lomo_core::corpus::Counts,
}

fn cmd_curate(args: CurateArgs) -> Result<ExitCode> {
    let mut cfg = config::load(args.config.as_deref())?;
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.rewrite_ratio {
        cfg.rewrite_ratio = v;
    }
    if let Some(v) = args.position_mode {
        cfg.position_mode = v;
    }
    if args.no_distortion {
        cfg.distortion_enabled = false;
    }
    if let Some(v) = args.workers {
        cfg.workers = v;
    }
    if args.lenient {
        cfg.lenient = true;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    args.render.apply(&mut cfg.render);
    let outcome = curate(&args.input, &args.output, &cfg)?;
    print_json(
        &RunSummary {
            manifest: manifest_path(&args.output),
            counts: &outcome.manifest.counts,
        },
        None,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval_render(args: EvalRenderArgs) -> Result<ExitCode> {
    let mut cfg = config::load(args.config.as_deref())?.render;
    args.render.apply(&mut cfg);
    let manifest = transform_benchmark(&args.input, &args.output, &cfg)?;
    print_json(
        &RunSummary {
            manifest: manifest_path(&args.output),
            counts: &manifest.counts,
        },
        None,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_ratio_match(args: RatioMatchArgs) -> Result<ExitCode> {
    let cfg = config::load(args.config.as_deref())?;
    let Some(target) = args.target.or(cfg.target_image_text_ratio) else {
        bail!("no target ratio: pass --target or set target_image_text_ratio in the config");
    };
    let seed = args.seed.unwrap_or(cfg.seed);
    let manifest = match_modality_ratio(&args.input, &args.output, target, seed)?;
    print_json(
        &RunSummary {
            manifest: manifest_path(&args.output),
            counts: &manifest.counts,
        },
        None,
    )?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Deserialize)]
struct DecompCase {
    p_x: Vec<f64>,
    p_tx: Vec<f64>,
    answer: usize,
}

fn cmd_metrics(cmd: MetricsCommand) -> Result<ExitCode> {
    match cmd {
        MetricsCommand::Mir { hsd, out } => {
            let report = mir_from_reader(HsdReader::open(&hsd)?)?;
            print_json(&MirOutput::from(report), out.as_deref())?;
        }
        MetricsCommand::Pcd { hsd, layer, out } => {
            let report = pairwise_from_reader(HsdReader::open(&hsd)?, layer)?;
            print_json(&PcdOutput::from(report), out.as_deref())?;
        }
        MetricsCommand::Decomp(args) => {
            let cases = match (&args.input, args.p_x, args.p_tx, args.answer) {
                (Some(path), ..) => {
                    let text =
                        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    text.lines()
                        .enumerate()
                        .filter(|(_, l)| !l.trim().is_empty())
                        .map(|(i, l)| {
                            serde_json::from_str::<DecompCase>(l)
                                .with_context(|| format!("{}: line {}", path.display(), i + 1))
                        })
                        .collect::<Result<Vec<_>>>()?
                }
                (None, Some(p_x), Some(p_tx), Some(answer)) => vec![DecompCase { p_x, p_tx, answer }],
                _ => bail!("pass --p-x, --p-tx and --answer, or --input"),
            };
            let results = cases
                .into_iter()
                .map(|c| {
                    let p_x = AnswerDistribution::new(c.p_x)?;
                    let p_tx = AnswerDistribution::new(c.p_tx)?;
                    Ok(decomposition_check(&p_x, &p_tx, c.answer)?)
                })
                .collect::<Result<Vec<_>>>()?;
            if results.len() == 1 {
                print_json(&results[0], args.out.as_deref())?;
            } else {
                print_json(&results, args.out.as_deref())?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_stats(args: StatsArgs) -> Result<ExitCode> {
    let manifest_file = if args.path.to_string_lossy().ends_with(".manifest.json") {
        args.path.clone()
    } else {
        manifest_path(&args.path)
    };
    let manifest = CurationManifest::read(&manifest_file)?;
    let stats_file = args.stats.unwrap_or_else(|| {
        let name = manifest_file.to_string_lossy();
        let stem = name.strip_suffix(".manifest.json").unwrap_or(&name);
        stats_path(Path::new(&format!("{stem}.jsonl")))
    });
    let stats: Option<CurationStats> = match std::fs::read(&stats_file) {
        Ok(bytes) => Some(
            serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", stats_file.display()))?,
        ),
        Err(_) => None,
    };
    let summary = StatsSummary::new(&manifest, stats.as_ref());
    match args.format {
        Format::Json => print_json(&summary, None)?,
        Format::Text => print!("{}", summary.to_text()),
    }
    Ok(if summary.identity_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
