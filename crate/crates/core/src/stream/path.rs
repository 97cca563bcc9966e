//! Camera path files: one `x y z yaw pitch` record per line, angles in
//! radians, `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, VtError};
use crate::render::Camera;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CameraPath {
    pub frames: Vec<Camera>,
}

impl CameraPath {
    pub fn new(frames: Vec<Camera>) -> Self {
        Self { frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Parses path text; every pose shares `template`'s lens settings.
    pub fn parse(text: &str, template: &Camera) -> Result<Self> {
        let mut frames = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| VtError::format(format!("path line {}: {e}", lineno + 1)))?;
            let [x, y, z, yaw, pitch] = values[..] else {
                return Err(VtError::format(format!(
                    "path line {}: expected 5 values, found {}",
                    lineno + 1,
                    values.len()
                )));
            };
            if values.iter().any(|v| !v.is_finite()) {
                return Err(VtError::format(format!("path line {}: non-finite value", lineno + 1)));
            }
            frames.push(Camera { position: [x, y, z], yaw, pitch, ..*template });
        }
        Ok(Self { frames })
    }

    pub fn load(path: impl AsRef<Path>, template: &Camera) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, template)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# x y z yaw pitch (radians)\n");
        for c in &self.frames {
            let [x, y, z] = c.position;
            writeln!(s, "{x} {y} {z} {} {}", c.yaw, c.pitch).unwrap();
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let cam = Camera::default();
        let path = CameraPath::new(vec![
            Camera::at([0.0, 1.5, -2.25], 0.1, -0.05),
            Camera::at([1.0 / 3.0, 1.5, 7.0], std::f64::consts::PI, 0.0),
        ]);
        assert_eq!(CameraPath::parse(&path.to_text(), &cam).unwrap(), path);
    }

    #[test]
    fn comments_and_errors() {
        let cam = Camera::default();
        let p = CameraPath::parse("# header\n\n1 2 3 0 0  # first\n", &cam).unwrap();
        assert_eq!(p.frames[0].position, [1.0, 2.0, 3.0]);
        assert!(CameraPath::parse("1 2 3 4", &cam).is_err());
        assert!(CameraPath::parse("1 2 x 4 5", &cam).is_err());
        assert!(CameraPath::parse("1 2 NaN 4 5", &cam).is_err());
    }
}
