//! Config-driven experiment runner.
//!
//! Subcommands map one-to-one onto pipeline stages; `run` chains them all
//! and writes `run.json`, `curve.csv`, `net.json`, and the `timings.json`
//! sidecar into the output directory. Exit codes follow the verdicts: 0
//! when every verdict the invocation requested passes, 2 when one fails,
//! 1 on any error (with the failing stage named in the message).
//!
//! `--threads` splits evaluation loops over contiguous index ranges and
//! never changes any output byte; `--seed` overrides the config's master
//! seed before stage streams are derived from it.

mod config;
mod csvio;
mod parallel;
mod pipeline;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use pipeline::Ctx;

#[derive(Parser)]
#[command(
    name = "frameforge",
    version,
    about = "Wavelet-frame approximation toolkit: kernel certification, greedy approximation, network export"
)]
struct Cli {
    /// Experiment config file (JSON; see --print-schema).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path: a file for single-artifact subcommands, a directory
    /// for `run` (default: the config's output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for evaluation loops; affects speed only, never
    /// results.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Print the config schema as JSON and exit.
    #[arg(long, global = true)]
    print_schema: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the averaging-kernel conditions for the configured
    /// activation and emit the report.
    CheckKernel,
    /// Enumerate the dictionary and emit its summary.
    BuildDict,
    /// Run the greedy approximation and emit terms, residual curve, and
    /// the rate verdict.
    Approximate,
    /// Convert the expansion recorded in a run document to a network
    /// parameter file.
    ExportNet {
        /// A run.json produced by `approximate` or `run`.
        #[arg(long)]
        run: PathBuf,
    },
    /// Evaluate an exported network at points from a CSV file.
    EvalNet {
        /// A net.json produced by `export-net` or `run`.
        #[arg(long)]
        net: PathBuf,
        /// Points file with columns x_1..x_d.
        #[arg(long)]
        points: PathBuf,
    },
    /// Fit σ by shifted copies of σ0 for each budget and emit the
    /// combined-bound comparison.
    CompareActivations,
    /// The full pipeline: certify → dictionary → greedy → export →
    /// compare, writing all artifacts.
    Run,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    if cli.print_schema {
        println!("{}", report::to_sorted_json(&config::schema_json())?);
        return Ok(ExitCode::SUCCESS);
    }
    let Some(ref command) = cli.command else {
        anyhow::bail!("no subcommand given (try --help, or --print-schema for the config format)");
    };
    match *command {
        Command::CheckKernel => {
            let ctx = load_ctx(&cli)?;
            let report_doc = pipeline::kernel_stage(&ctx)?;
            let pass = pipeline::kernel_verdict(&report_doc);
            emit(&cli.out, &serde_json::to_value(&report_doc)?)?;
            Ok(verdict_code(pass))
        }
        Command::BuildDict => {
            let ctx = load_ctx(&cli)?;
            let dict = pipeline::dictionary_stage(&ctx)?;
            let doc = serde_json::json!({
                "resolved_config": serde_json::to_value(&ctx.cfg)?,
                "dictionary": pipeline::dict_summary(&dict),
            });
            emit(&cli.out, &doc)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Approximate => {
            let ctx = load_ctx(&cli)?;
            let out = pipeline::run_approximate(&ctx)?;
            let run_path = cli
                .out
                .clone()
                .unwrap_or_else(|| Path::new(&ctx.cfg.output.dir).join("run.json"));
            if let Some(parent) = run_path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .with_context(|| format!("creating output directory {}", parent.display()))?;
            }
            report::write_json(&run_path, &out.doc)?;
            let dir = run_path.parent().unwrap_or_else(|| Path::new("."));
            csvio::write_curve(&dir.join("curve.csv"), &out.curve, out.l1)?;
            out.timings.write_sidecar(&dir.join("timings.json"))?;
            Ok(verdict_code(out.all_pass))
        }
        Command::ExportNet { ref run } => {
            let doc: serde_json::Value = serde_json::from_str(
                &std::fs::read_to_string(run)
                    .with_context(|| format!("reading run document {}", run.display()))?,
            )
            .with_context(|| format!("parsing run document {}", run.display()))?;
            let cfg: ExperimentConfig = serde_json::from_value(doc["resolved_config"].clone())
                .context("run document carries no usable resolved_config")?;
            cfg.validate()?;
            let base_dir = run
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("."));
            let ctx = Ctx::new(cfg, base_dir, cli.threads)?;
            let expansion = pipeline::terms_from_json(&doc["greedy"]["terms"])?;
            let net = frameforge_core::network::expansion_to_net(&expansion, &ctx.spec)
                .context("network stage")?;
            let hash = pipeline::expansion_hash(&expansion);
            emit_or_default(&cli.out, Path::new("net.json"), &pipeline::net_json(&net, &hash))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::EvalNet {
            ref net,
            ref points,
        } => {
            let doc: serde_json::Value = serde_json::from_str(
                &std::fs::read_to_string(net)
                    .with_context(|| format!("reading network document {}", net.display()))?,
            )
            .with_context(|| format!("parsing network document {}", net.display()))?;
            let net = pipeline::net_from_json(&doc)?;
            let (dim, pts) = csvio::read_points(points)?;
            if dim != net.dim {
                anyhow::bail!(
                    "points file is {dim}-dimensional but the network expects d = {}",
                    net.dim
                );
            }
            let values = pipeline::eval_net_at(&net, &pts, cli.threads.max(1));
            match &cli.out {
                Some(path) => csvio::write_values(path, dim, &pts, &values)?,
                None => print!("{}", csvio::values_csv(dim, &pts, &values)?),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CompareActivations => {
            let ctx = load_ctx(&cli)?;
            let dict = pipeline::dictionary_stage(&ctx)?;
            let target = pipeline::target_stage(&ctx, &dict)?;
            let greedy_out = pipeline::greedy_stage(&ctx, &dict, &target)?;
            let network = pipeline::network_stage(&ctx, &dict, &greedy_out.trace)?;
            let compare = pipeline::compare_stage(&ctx, &target, &greedy_out.trace, &network)?;
            let doc = serde_json::json!({
                "resolved_config": serde_json::to_value(&ctx.cfg)?,
                "compare": pipeline::compare_json(&compare),
            });
            emit(&cli.out, &doc)?;
            Ok(verdict_code(compare.verdict))
        }
        Command::Run => {
            let ctx = load_ctx(&cli)?;
            let out = pipeline::run_all(&ctx)?;
            let dir = cli
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(&ctx.cfg.output.dir));
            pipeline::write_run_artifacts(&dir, &out)?;
            Ok(verdict_code(out.all_pass))
        }
    }
}

/// Load, resolve, and validate the config, then build the stage context.
fn load_ctx(cli: &Cli) -> anyhow::Result<Ctx> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("this subcommand needs --config <file>"))?;
    let cfg = ExperimentConfig::load(path)?.resolve(cli.seed);
    cfg.validate()?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."));
    Ctx::new(cfg, base_dir, cli.threads.max(1))
}

/// Write the document to `--out`, or print it to stdout.
fn emit(out: &Option<PathBuf>, doc: &serde_json::Value) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .with_context(|| format!("creating output directory {}", parent.display()))?;
            }
            report::write_json(path, doc)
        }
        None => {
            println!("{}", report::to_sorted_json(doc)?);
            Ok(())
        }
    }
}

/// Like [`emit`] but a missing `--out` falls back to a default file name
/// instead of stdout (network files are meant to be consumed by
/// `eval-net`, not read).
fn emit_or_default(
    out: &Option<PathBuf>,
    default: &Path,
    doc: &serde_json::Value,
) -> anyhow::Result<()> {
    let path = out.clone().unwrap_or_else(|| default.to_path_buf());
    emit(&Some(path), doc)
}

fn verdict_code(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
