//! Command implementations behind the `vtlab` binary, usable from code.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::build::{build_from_layout, MipChain};
use crate::error::{Result, VtError};
use crate::eval::{diff_image, load_frames, report, save_frames, QualityReport, SsimParams};
use crate::format::{read_noise, NoiseTable, PageSource, VtFile};
use crate::layout::retexture;
use crate::render::{render_frame, Camera, ChainSampler, Viewport};
use crate::scene::SceneMesh;
use crate::stream::{
    write_stream_log, AncestorStrategy, CameraPath, HeuristicConfig, HeuristicKind, LookaheadConfig, SimConfig,
    Simulator,
};

/// Lens settings shared by every pose of a camera path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LensConfig {
    pub fov_y_deg: f64,
    pub near: f64,
    pub far: f64,
}

impl Default for LensConfig {
    fn default() -> Self {
        let c = Camera::default();
        Self { fov_y_deg: c.fov_y.to_degrees(), near: c.near, far: c.far }
    }
}

impl LensConfig {
    pub fn camera(&self) -> Camera {
        Camera { fov_y: self.fov_y_deg.to_radians(), near: self.near, far: self.far, ..Camera::default() }
    }
}

fn default_viewport() -> Viewport {
    Viewport { width: 256, height: 256 }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment: inputs, viewport, streaming setup and metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub vtx: PathBuf,
    #[serde(default)]
    pub vtn: Option<PathBuf>,
    pub scene: PathBuf,
    pub path: PathBuf,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_viewport")]
    pub viewport: Viewport,
    #[serde(default)]
    pub lens: LensConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub heuristic: HeuristicConfig,
    #[serde(default)]
    pub ssim: SsimParams,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub heuristic: Option<HeuristicKind>,
    pub noise: bool,
    pub lookahead: bool,
    pub ancestor: Option<AncestorStrategy>,
    pub lock_mips: Option<u32>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| VtError::Config(e.to_string()))
    }

    /// Loads a config file; relative paths are resolved against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| VtError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.vtx);
        resolve(&mut cfg.scene);
        resolve(&mut cfg.path);
        resolve(&mut cfg.out);
        if let Some(v) = cfg.vtn.as_mut() {
            resolve(v);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| VtError::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(b) = o.budget {
            self.sim.budget = b;
        }
        if let Some(h) = o.heuristic {
            self.heuristic.kind = h;
        }
        if o.noise {
            self.heuristic.noise_scaling = true;
        }
        if o.lookahead && self.heuristic.lookahead.is_none() {
            self.heuristic.lookahead = Some(LookaheadConfig::default());
        }
        if let Some(a) = o.ancestor {
            self.sim.ancestors = a;
        }
        if let Some(k) = o.lock_mips {
            self.sim.lock_mips = k;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, p) in [("vtx", &self.vtx), ("scene", &self.scene), ("path", &self.path)] {
            if !p.is_file() {
                return Err(VtError::Config(format!("{field}: file {} does not exist", p.display())));
            }
        }
        if let Some(v) = &self.vtn {
            if !v.is_file() {
                return Err(VtError::Config(format!("vtn: file {} does not exist", v.display())));
            }
        }
        if (self.heuristic.noise_scaling || self.sim.noise_skip) && self.vtn.is_none() {
            return Err(VtError::Config("vtn: NoiseValue file required for noise scaling or skipping".into()));
        }
        Viewport::new(self.viewport.width, self.viewport.height)
            .map_err(|e| VtError::Config(format!("viewport: {e}")))?;
        self.sim.validate()?;
        self.heuristic.validate()
    }

    pub fn heuristic(&self) -> HeuristicConfig {
        HeuristicConfig { seed: self.seed, ..self.heuristic }
    }

    fn inputs(&self) -> Result<(VtFile, Option<NoiseTable>, SceneMesh, CameraPath)> {
        self.validate()?;
        let vtx = VtFile::open(&self.vtx)?;
        let noise = match &self.vtn {
            Some(p) => Some(read_noise(p, Some(vtx.meta().total_pages()))?),
            None => None,
        };
        let scene = SceneMesh::load(&self.scene)?;
        let path = CameraPath::load(&self.path, &self.lens.camera())?;
        Ok((vtx, noise, scene, path))
    }
}

/// Composes the layout's images and writes `texture.vtx` and `texture.vtn` into `out`.
pub fn cmd_build(layout: &Path, page_size: u32, border: u32, out: &Path) -> Result<MipChain> {
    std::fs::create_dir_all(out)?;
    build_from_layout(layout, page_size, border, out.join("texture.vtx"), out.join("texture.vtn"))
}

/// Gives every face of `scene` a unique region; face texture names are
/// image paths relative to `sources`.
pub fn cmd_retexture(scene: &Path, sources: &Path, page_size: u32, out: &Path) -> Result<u32> {
    let mesh = SceneMesh::load(scene)?;
    let mut images = HashMap::new();
    for face in &mesh.faces {
        if !images.contains_key(&face.texture) {
            let img = image::open(sources.join(&face.texture))?.to_rgb8();
            images.insert(face.texture.clone(), img);
        }
    }
    let re = retexture(&mesh, &images, page_size)?;
    re.save(out)?;
    Ok(re.layout.target_dim)
}

/// Renders every path frame with the complete texture available.
pub fn cmd_reference(cfg: &RunConfig, out: &Path) -> Result<usize> {
    let (vtx, _, scene, path) = cfg.inputs()?;
    let chain = MipChain::from_source(&vtx)?;
    let frames = path
        .frames
        .iter()
        .map(|c| Ok(render_frame(&scene, c, &ChainSampler { chain: &chain }, cfg.viewport, cfg.sim.filter)?.color))
        .collect::<Result<Vec<_>>>()?;
    save_frames(out, &frames)?;
    Ok(frames.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub frame: u64,
    pub hits: u64,
    pub misses: u64,
    pub queued: usize,
    pub loads: usize,
}

/// Runs the streaming simulation, writing frames, `stream_log.csv` and `frame_stats.csv`.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<Vec<FrameStats>> {
    let (vtx, noise, scene, path) = cfg.inputs()?;
    std::fs::create_dir_all(out)?;
    let Some(start) = path.frames.first() else {
        return Err(VtError::Config("path: camera path is empty".into()));
    };
    let mut sim = Simulator::new(&scene, &vtx, noise.as_ref(), cfg.viewport, cfg.sim, cfg.heuristic(), start)?;
    let mut log = Vec::new();
    let mut stats = Vec::new();
    for (i, cam) in path.frames.iter().enumerate() {
        let rec = sim.step(cam)?;
        rec.buffers.color.save(out.join(crate::eval::frame_file_name(i)))?;
        stats.push(FrameStats {
            frame: rec.frame,
            hits: rec.hits,
            misses: rec.misses,
            queued: rec.queue.len(),
            loads: rec.dispatched.len(),
        });
        log.extend(rec.dispatched);
    }
    write_stream_log(out.join("stream_log.csv"), &log)?;
    let mut w = csv::Writer::from_path(out.join("frame_stats.csv"))?;
    for s in &stats {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(stats)
}

/// Compares two frame directories and writes the per-frame CSV to `out`.
/// With `diffs`, absolute-difference images are written there as well.
pub fn cmd_evaluate(
    reference: &Path,
    test: &Path,
    params: &SsimParams,
    out: &Path,
    diffs: Option<&Path>,
) -> Result<QualityReport> {
    let r = load_frames(reference)?;
    let t = load_frames(test)?;
    if r.is_empty() {
        return Err(VtError::Config(format!("no frames found in {}", reference.display())));
    }
    let rep = report(&r, &t, params)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    rep.write_csv(out)?;
    if let Some(dir) = diffs {
        let images = r.iter().zip(&t).map(|(a, b)| diff_image(a, b)).collect::<Result<Vec<_>>>()?;
        save_frames(dir, &images)?;
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overrides() {
        let mut cfg = RunConfig::parse(
            r#"
            vtx = "t.vtx"
            scene = "s.json"
            path = "p.txt"
            [sim]
            budget = 10
            ancestors = "extern"
            [heuristic]
            kind = "hotspot"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.sim.budget, 10);
        assert_eq!(cfg.sim.ancestors, AncestorStrategy::Extern);
        assert_eq!(cfg.heuristic.kind, HeuristicKind::HotSpot);
        assert_eq!(cfg.viewport, Viewport { width: 256, height: 256 });
        cfg.apply(&Overrides { budget: Some(5), lookahead: true, seed: Some(4), ..Overrides::default() });
        assert_eq!(cfg.sim.budget, 5);
        assert_eq!(cfg.heuristic().seed, 4);
        assert_eq!(cfg.heuristic.lookahead, Some(LookaheadConfig::default()));
        assert_eq!(RunConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn config_errors_name_fields() {
        let err = RunConfig::parse("vtx = \"a\"\nscene = \"b\"\npath = \"c\"\nbudgte = 3\n").unwrap_err();
        assert!(err.to_string().contains("budgte"));
        let err = RunConfig::parse("scene = \"b\"\npath = \"c\"\n").unwrap_err();
        assert!(err.to_string().contains("vtx"));
    }

    #[test]
    fn missing_noise_file_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["t.vtx", "s.json", "p.txt"] {
            std::fs::write(dir.path().join(f), "").unwrap();
        }
        let text = "vtx = \"t.vtx\"\nscene = \"s.json\"\npath = \"p.txt\"\n[heuristic]\nnoise_scaling = true\n";
        std::fs::write(dir.path().join("run.toml"), text).unwrap();
        let cfg = RunConfig::load(dir.path().join("run.toml")).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, VtError::Config(ref m) if m.starts_with("vtn")));
    }
}
