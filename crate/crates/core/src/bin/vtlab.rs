use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vtlab::cli::{cmd_build, cmd_evaluate, cmd_reference, cmd_retexture, cmd_simulate, Overrides, RunConfig};
use vtlab::eval::SsimParams;
use vtlab::stream::{AncestorStrategy, HeuristicKind};

#[derive(Parser)]
#[command(name = "vtlab", version, about = "Deterministic virtual texturing laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a .vtx/.vtn pair from a layout file.
    Build {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long, default_value_t = 128)]
        page_size: u32,
        #[arg(long, default_value_t = 4)]
        border: u32,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Give every scene face a unique texture region.
    Retexture {
        #[arg(long)]
        scene: PathBuf,
        /// Directory the face texture names are relative to.
        #[arg(long)]
        sources: PathBuf,
        #[arg(long, default_value_t = 128)]
        page_size: u32,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Render every path frame with the full texture resident.
    Reference(RunArgs),
    /// Run the budgeted streaming simulation.
    Simulate(RunArgs),
    /// Compare two frame directories.
    Evaluate {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Config file supplying SSIM parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV report path.
        #[arg(long, default_value = "quality.csv")]
        out: PathBuf,
        /// Also write per-frame difference images into this directory.
        #[arg(long)]
        diffs: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    heuristic: Option<HeuristicKind>,
    /// Scale priorities by NoiseValues.
    #[arg(long)]
    noise: bool,
    /// Add the LookAhead prediction pass.
    #[arg(long)]
    lookahead: bool,
    #[arg(long, value_parser = ["none", "intern", "extern"])]
    ancestor: Option<String>,
    #[arg(long)]
    lock_mips: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> vtlab::Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            budget: self.budget,
            heuristic: self.heuristic,
            noise: self.noise,
            lookahead: self.lookahead,
            ancestor: self.ancestor.as_deref().map(str::parse::<AncestorStrategy>).transpose()?,
            lock_mips: self.lock_mips,
            out: self.out.clone(),
        });
        Ok(cfg)
    }
}

fn run(cli: Cli) -> vtlab::Result<()> {
    match cli.command {
        Command::Build { layout, page_size, border, out } => {
            let chain = cmd_build(&layout, page_size, border, &out)?;
            println!(
                "built {} pages in {} mips into {}",
                chain.meta.total_pages(),
                chain.meta.mip_count,
                out.display()
            );
        }
        Command::Retexture { scene, sources, page_size, out } => {
            let dim = cmd_retexture(&scene, &sources, page_size, &out)?;
            println!("layout {dim}x{dim} written to {}", out.display());
        }
        Command::Reference(args) => {
            let cfg = args.config()?;
            let n = cmd_reference(&cfg, &cfg.out)?;
            println!("rendered {n} reference frames into {}", cfg.out.display());
        }
        Command::Simulate(args) => {
            let cfg = args.config()?;
            let stats = cmd_simulate(&cfg, &cfg.out)?;
            let loads: usize = stats.iter().map(|s| s.loads).sum();
            println!("simulated {} frames, {loads} pages streamed, output in {}", stats.len(), cfg.out.display());
        }
        Command::Evaluate { reference, test, config, out, diffs } => {
            let params = match config {
                Some(c) => RunConfig::load(c)?.ssim,
                None => SsimParams::default(),
            };
            let rep = cmd_evaluate(&reference, &test, &params, &out, diffs.as_deref())?;
            println!(
                "{} frames: mean rmse {:.4}, mean ssim {:.6}, mean wssim {:.6}",
                rep.records.len(),
                rep.mean_rmse(),
                rep.mean_ssim(),
                rep.mean_wssim()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vtlab: {e}");
            ExitCode::FAILURE
        }
    }
}
