use std::collections::BTreeSet;

use vtlab::demo::{flythrough, DemoWorld, GallerySpec};
use vtlab::eval::{report, SsimParams};
use vtlab::render::{render_frame, ChainSampler, FilterMode, Viewport};
use vtlab::stream::{
    simulate, AncestorStrategy, HeuristicConfig, HeuristicKind, LookaheadConfig, SimConfig, Simulator,
};

fn world() -> DemoWorld {
    DemoWorld::build(GallerySpec {
        wall_panels: 4,
        texture_edge: 128,
        page_size: 16,
        border: 2,
        ..GallerySpec::default()
    })
    .unwrap()
}

fn vp() -> Viewport {
    Viewport::new(96, 96).unwrap()
}

#[test]
fn budget_and_residency_are_respected() {
    let w = world();
    let path = flythrough(&w.spec, 30);
    for strategy in [AncestorStrategy::None, AncestorStrategy::Intern, AncestorStrategy::Extern] {
        let cfg = SimConfig { budget: 3, cache_frames: [12, 12], ancestors: strategy, ..SimConfig::default() };
        let heur = HeuristicConfig::new(HeuristicKind::HotSpot);
        let mut sim = Simulator::new(&w.scene, &w.store, Some(&w.noise), vp(), cfg, heur, &path[0]).unwrap();
        for cam in &path {
            let before: BTreeSet<usize> = sim.runtime().cache.resident_pages().map(|p| p.abs_index()).collect();
            let rec = sim.step(cam).unwrap();
            assert!(rec.dispatched.len() <= 3);
            let pages: BTreeSet<usize> = rec.dispatched.iter().map(|e| e.p_abs).collect();
            assert_eq!(pages.len(), rec.dispatched.len(), "page dispatched twice in one frame");
            assert!(pages.is_disjoint(&before), "resident page dispatched");
            assert_eq!(rec.hits + rec.misses, rec.buffers.covered_pixels() as u64);
            assert!(sim.runtime().is_resident(vtlab::page::PageId::ROOT));
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let w = world();
    let path = flythrough(&w.spec, 20);
    let heur = HeuristicConfig {
        seed: 7,
        noise_scaling: true,
        lookahead: Some(LookaheadConfig::default()),
        ..HeuristicConfig::new(HeuristicKind::Random)
    };
    let cfg = SimConfig { budget: 2, ancestors: AncestorStrategy::Extern, noise_skip: true, ..SimConfig::default() };
    let a = simulate(&w.scene, &path, &w.store, Some(&w.noise), vp(), cfg, heur).unwrap();
    let b = simulate(&w.scene, &path, &w.store, Some(&w.noise), vp(), cfg, heur).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.frames, b.frames);
    assert!(!a.log.is_empty());
}

#[test]
fn unlimited_budget_repeats_are_exact() {
    let w = world();
    let path: Vec<_> = flythrough(&w.spec, 12).into_iter().flat_map(|c| [c, c]).collect();
    let sampler = ChainSampler { chain: &w.chain };
    let refs: Vec<_> =
        path.iter().map(|c| render_frame(&w.scene, c, &sampler, vp(), FilterMode::Nearest).unwrap().color).collect();
    let total = w.meta().total_pages();
    let cfg = SimConfig { budget: total, cache_frames: [40, 40], ..SimConfig::default() };
    let run = simulate(&w.scene, &path, &w.store, None, vp(), cfg, HeuristicConfig::default()).unwrap();
    let rep = report(&refs, &run.frames, &SsimParams::default()).unwrap();
    // A pose seen in the previous frame has every needed page loaded.
    assert_eq!(rep.records[0].ssim, 1.0);
    for i in (1..path.len()).step_by(2) {
        assert_eq!(run.frames[i], refs[i], "frame {i}");
    }
}

#[test]
fn latency_delays_arrival() {
    let w = world();
    let path = vec![flythrough(&w.spec, 2)[1]; 8];
    let cfg = SimConfig { budget: 1, preload_mips: 0, preload_visible: false, latency: 3, ..SimConfig::default() };
    let mut sim = Simulator::new(&w.scene, &w.store, None, vp(), cfg, HeuristicConfig::default(), &path[0]).unwrap();
    let first = sim.step(&path[0]).unwrap().dispatched[0].p_abs;
    let page = w.meta().from_abs(first).unwrap();
    for _ in 0..3 {
        assert!(!sim.runtime().is_resident(page));
        sim.step(&path[0]).unwrap();
    }
    assert!(sim.runtime().is_resident(page));
}
