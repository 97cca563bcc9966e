//! Need-buffer analysis, priority heuristics, prediction, ancestor streaming
//! and the per-frame streaming simulation.

pub mod analysis;
pub mod heuristics;
pub mod path;
pub mod queue;
pub mod sim;

pub use analysis::{analyze, radial_weight, Analysis, PageStats, WEIGHT_EPSILON};
pub use heuristics::{
    damped_lookahead_camera, hotspot_center, lookahead_camera, merge_need, noise_scale, priority, HeuristicConfig,
    HeuristicKind, LookaheadConfig,
};
pub use path::CameraPath;
pub use queue::{ancestor_closure, AncestorStrategy, NoiseSkip, QueueOrder, StreamQueue};
pub use sim::{read_stream_log, simulate, write_stream_log, FrameRecord, SimConfig, SimRun, Simulator, StreamEvent};
