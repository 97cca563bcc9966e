//! Budgeted, deterministic streaming simulation.
//!
//! Each frame renders through the current cache, analyzes the need buffer
//! (plus an optional LookAhead pass), rebuilds the stream queue, dispatches
//! up to `budget` pages and commits arrivals before the next frame.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VtError};
use crate::format::{NoiseTable, PageSource};
use crate::page::PageId;
use crate::render::{render_frame, render_need, CacheSampler, Camera, FilterMode, FrameBuffers, Viewport};
use crate::runtime::VtRuntime;
use crate::scene::SceneMesh;
use crate::stream::analysis::{analyze, Analysis};
use crate::stream::heuristics::{
    damped_lookahead_camera, hotspot_center, lookahead_camera, merge_need, noise_scale, priority, screen_center,
    HeuristicConfig, HeuristicKind,
};
use crate::stream::queue::{ancestor_closure, AncestorStrategy, NoiseSkip, StreamQueue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Pages dispatched per frame.
    pub budget: usize,
    /// Cache size in frames, columns × rows.
    pub cache_frames: [u32; 2],
    /// Mips loaded (not locked) at start-up.
    pub preload_mips: u32,
    /// Mips loaded and pinned at start-up.
    pub lock_mips: u32,
    /// Load every page the first view needs before frame 0.
    pub preload_visible: bool,
    pub ancestors: AncestorStrategy,
    /// Skip ancestors whose path child is below the mean NoiseValue.
    pub noise_skip: bool,
    /// Frames between dispatch and arrival.
    pub latency: u32,
    pub filter: FilterMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            budget: 5,
            cache_frames: [32, 32],
            preload_mips: 3,
            lock_mips: 0,
            preload_visible: true,
            ancestors: AncestorStrategy::None,
            noise_skip: false,
            latency: 0,
            filter: FilterMode::Nearest,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(VtError::Config("budget must be at least 1 page per frame".into()));
        }
        if self.cache_frames[0] == 0 || self.cache_frames[1] == 0 {
            return Err(VtError::Config("cache must have at least one frame".into()));
        }
        Ok(())
    }
}

/// One dispatched page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEvent {
    pub frame: u64,
    pub p_abs: usize,
    pub mip: u32,
    pub priority: f64,
    pub heuristic: String,
}

#[derive(Debug, Clone)]
pub struct FrameRecord {
    pub frame: u64,
    pub buffers: FrameBuffers,
    pub hits: u64,
    pub misses: u64,
    /// Queue contents before dispatching, in absolute page order.
    pub queue: Vec<(PageId, f64)>,
    pub dispatched: Vec<StreamEvent>,
}

pub struct Simulator<'a> {
    scene: &'a SceneMesh,
    source: &'a dyn PageSource,
    noise: Option<&'a NoiseTable>,
    viewport: Viewport,
    config: SimConfig,
    heuristic: HeuristicConfig,
    runtime: VtRuntime,
    frame: u64,
    history: VecDeque<Camera>,
    in_flight: VecDeque<(u64, PageId)>,
}

impl<'a> Simulator<'a> {
    /// Sets up the cache with the configured initial residency as seen from `start`.
    pub fn new(
        scene: &'a SceneMesh,
        source: &'a dyn PageSource,
        noise: Option<&'a NoiseTable>,
        viewport: Viewport,
        config: SimConfig,
        heuristic: HeuristicConfig,
        start: &Camera,
    ) -> Result<Self> {
        config.validate()?;
        heuristic.validate()?;
        let meta = source.meta();
        if (heuristic.noise_scaling || config.noise_skip) && noise.is_none() {
            return Err(VtError::Config("noise scaling or skipping requires a NoiseValue table".into()));
        }
        if let Some(n) = noise {
            if n.len() != meta.total_pages() {
                return Err(VtError::Config(format!(
                    "NoiseValue table has {} entries, texture has {} pages",
                    n.len(),
                    meta.total_pages()
                )));
            }
        }
        let mut runtime = VtRuntime::new(source, config.cache_frames[0], config.cache_frames[1])?;
        if config.lock_mips > 0 {
            runtime.lock_mips(config.lock_mips, source)?;
        }
        let mut preload: BTreeSet<usize> =
            (0..crate::page::pages_below(config.preload_mips.min(meta.mip_count))).collect();
        if config.preload_visible {
            let need = render_need(scene, start, &meta, viewport)?;
            preload.extend(need.need.iter().flatten().map(|p| p.abs_index()));
        }
        let payloads = preload
            .into_iter()
            .filter(|&abs| !runtime.cache.is_resident(meta.from_abs(abs).unwrap()))
            .map(|abs| source.read_page(abs))
            .collect::<Result<Vec<_>>>()?;
        runtime.load(&payloads)?;
        Ok(Self {
            scene,
            source,
            noise,
            viewport,
            config,
            heuristic,
            runtime,
            frame: 0,
            history: VecDeque::new(),
            in_flight: VecDeque::new(),
        })
    }

    pub fn runtime(&self) -> &VtRuntime {
        &self.runtime
    }

    pub fn frame_index(&self) -> u64 {
        self.frame
    }

    fn priorities(&self, analysis: &Analysis) -> BTreeMap<usize, (PageId, f64)> {
        analysis
            .pages
            .iter()
            .map(|(&abs, s)| (abs, (s.page, priority(s, self.heuristic.kind, self.heuristic.seed, self.frame))))
            .collect()
    }

    fn center(&self, camera: &Camera) -> (f64, f64) {
        match (self.heuristic.kind, self.history.back()) {
            (HeuristicKind::HotSpot, Some(prev)) => hotspot_center(
                camera.yaw - prev.yaw,
                camera.pitch - prev.pitch,
                self.heuristic.hotspot_gain,
                self.viewport,
            ),
            _ => screen_center(self.viewport),
        }
    }

    fn predicted_camera(&self, camera: &Camera) -> Camera {
        let la = self.heuristic.lookahead.unwrap_or_default();
        let n = self.history.len();
        match (la.damping, n) {
            (_, 0) => *camera,
            (Some(threshold), n) if n >= 2 => {
                damped_lookahead_camera(camera, &self.history[n - 1], &self.history[n - 2], threshold)
            }
            _ => lookahead_camera(camera, &self.history[n - 1]),
        }
    }

    /// Renders one frame from `camera`, then runs the management step.
    pub fn step(&mut self, camera: &Camera) -> Result<FrameRecord> {
        let meta = self.runtime.meta;
        self.runtime.cache.advance_clock();
        let buffers = render_frame(
            self.scene,
            camera,
            &CacheSampler { runtime: &self.runtime },
            self.viewport,
            self.config.filter,
        )?;

        let center = self.center(camera);
        let cache = &self.runtime.cache;
        let primary = analyze(&buffers.need, &buffers.depth, self.viewport, center, |p| cache.is_resident(p));
        for s in primary.pages.values() {
            let used = s.page.ancestor_at(self.runtime.table.fallback_mip(s.page));
            self.runtime.cache.touch(used);
        }

        let mut needed = self.priorities(&primary);
        if let Some(la) = self.heuristic.lookahead {
            let predicted = self.predicted_camera(camera);
            let pass = render_need(self.scene, &predicted, &meta, self.viewport)?;
            let cache = &self.runtime.cache;
            let ahead = analyze(&pass.need, &pass.depth, self.viewport, center, |p| cache.is_resident(p));
            needed = merge_need(&needed, &self.priorities(&ahead), la.lambda);
        }

        let in_flight: BTreeSet<usize> = self.in_flight.iter().map(|(_, p)| p.abs_index()).collect();
        needed.retain(|abs, (page, _)| !self.runtime.cache.is_resident(*page) && !in_flight.contains(abs));
        if self.heuristic.noise_scaling {
            let noise = self.noise.expect("checked at construction");
            for (page, w) in needed.values_mut() {
                *w = noise_scale(*w, *page, noise, &self.runtime.table);
            }
        }
        if self.config.ancestors != AncestorStrategy::None {
            let skip = if self.config.noise_skip { self.noise.map(NoiseSkip::mean) } else { None };
            needed = ancestor_closure(&needed, &self.runtime.table, skip);
            needed.retain(|abs, _| !in_flight.contains(abs));
        }

        let snapshot: Vec<(PageId, f64)> = needed.values().copied().collect();
        let mut queue = StreamQueue::for_strategy(self.config.ancestors);
        queue.extend(snapshot.iter().copied());
        let mut dispatched = Vec::new();
        let label = self.heuristic.label();
        while dispatched.len() < self.config.budget {
            let Some((page, w)) = queue.dequeue_next() else { break };
            dispatched.push(StreamEvent {
                frame: self.frame,
                p_abs: page.abs_index(),
                mip: page.mip,
                priority: w,
                heuristic: label.clone(),
            });
            self.in_flight.push_back((self.frame + self.config.latency as u64, page));
        }

        let due: Vec<PageId> = std::iter::from_fn(|| {
            if self.in_flight.front().is_some_and(|&(t, _)| t <= self.frame) {
                self.in_flight.pop_front().map(|(_, p)| p)
            } else {
                None
            }
        })
        .collect();
        let source = self.source;
        let payloads = due.par_iter().map(|p| source.read_page(p.abs_index())).collect::<Result<Vec<_>>>()?;
        self.runtime.load(&payloads)?;

        self.history.push_back(*camera);
        if self.history.len() > 2 {
            self.history.pop_front();
        }
        let record = FrameRecord {
            frame: self.frame,
            buffers,
            hits: primary.hits,
            misses: primary.misses,
            queue: snapshot,
            dispatched,
        };
        self.frame += 1;
        Ok(record)
    }
}

/// Colors, counters and the stream log of a whole run.
#[derive(Debug, Clone, Default)]
pub struct SimRun {
    pub frames: Vec<RgbImage>,
    pub hits: Vec<u64>,
    pub misses: Vec<u64>,
    pub log: Vec<StreamEvent>,
}

/// Runs the whole camera path.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    scene: &SceneMesh,
    path: &[Camera],
    source: &dyn PageSource,
    noise: Option<&NoiseTable>,
    viewport: Viewport,
    config: SimConfig,
    heuristic: HeuristicConfig,
) -> Result<SimRun> {
    let Some(start) = path.first() else {
        return Ok(SimRun::default());
    };
    let mut sim = Simulator::new(scene, source, noise, viewport, config, heuristic, start)?;
    let mut run = SimRun::default();
    for camera in path {
        let rec = sim.step(camera)?;
        run.frames.push(rec.buffers.color);
        run.hits.push(rec.hits);
        run.misses.push(rec.misses);
        run.log.extend(rec.dispatched);
    }
    Ok(run)
}

pub fn write_stream_log(path: impl AsRef<Path>, log: &[StreamEvent]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if log.is_empty() {
        w.write_record(["frame", "p_abs", "mip", "priority", "heuristic"])?;
    }
    for e in log {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stream_log(path: impl AsRef<Path>) -> Result<Vec<StreamEvent>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|e| e.map_err(Into::into)).collect()
}
