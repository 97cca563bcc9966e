//! Streams the gallery flythrough with every priority heuristic under the
//! same page budget and reports quality against the reference frames.
//!
//! cargo run --release --example heuristic_comparison -- [frames] [budget]

use rayon::prelude::*;
use vtlab::demo::{flythrough, DemoWorld, GallerySpec};
use vtlab::eval::{report, SsimParams};
use vtlab::render::{render_frame, ChainSampler, FilterMode, Viewport};
use vtlab::stream::{simulate, HeuristicConfig, HeuristicKind, SimConfig};

fn main() -> vtlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let frames: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(120);
    let budget: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(5);

    let world = DemoWorld::build(GallerySpec::default())?;
    let vp = Viewport::new(256, 256)?;
    let path = flythrough(&world.spec, frames);
    let sampler = ChainSampler { chain: &world.chain };
    let refs = path
        .iter()
        .map(|c| render_frame(&world.scene, c, &sampler, vp, FilterMode::Nearest).map(|f| f.color))
        .collect::<vtlab::Result<Vec<_>>>()?;
    let cfg = SimConfig { budget, ..SimConfig::default() };

    let mut variants: Vec<HeuristicConfig> = HeuristicKind::ALL.iter().map(|&k| HeuristicConfig::new(k)).collect();
    variants.push(HeuristicConfig { noise_scaling: true, ..HeuristicConfig::new(HeuristicKind::WeightedPixel) });

    let results = variants
        .par_iter()
        .map(|h| {
            let run = simulate(&world.scene, &path, &world.store, Some(&world.noise), vp, cfg, *h)?;
            Ok((h.label(), report(&refs, &run.frames, &SsimParams::default())?))
        })
        .collect::<vtlab::Result<Vec<_>>>()?;

    println!("{frames} frames, budget {budget} pages/frame");
    println!("{:<20} {:>9} {:>9} {:>9} {:>9}", "heuristic", "rmse", "ssim", "wssim", "min ssim");
    for (label, rep) in results {
        println!(
            "{label:<20} {:>9.3} {:>9.4} {:>9.4} {:>9.4}",
            rep.mean_rmse(),
            rep.mean_ssim(),
            rep.mean_wssim(),
            rep.min_ssim()
        );
    }
    Ok(())
}
