use serde::{Deserialize, Serialize};

use crate::error::{Result, VtError};

/// Pinhole camera. At zero yaw and pitch it looks down −Z with +Y up;
/// positive yaw turns right (towards +X), positive pitch looks up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: [f64; 3],
    pub yaw: f64,
    pub pitch: f64,
    /// Vertical field of view in radians.
    pub fov_y: f64,
    pub near: f64,
    pub far: f64,
}

impl Default for Camera {
    fn default() -> Self {
        Self { position: [0.0; 3], yaw: 0.0, pitch: 0.0, fov_y: 60f64.to_radians(), near: 0.05, far: 1000.0 }
    }
}

impl Camera {
    pub fn at(position: [f64; 3], yaw: f64, pitch: f64) -> Self {
        Self { position, yaw, pitch, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(VtError::domain(format!("invalid clip range {}..{}", self.near, self.far)));
        }
        if !(self.fov_y > 0.0 && self.fov_y < std::f64::consts::PI) {
            return Err(VtError::domain(format!("field of view {} outside (0, pi)", self.fov_y)));
        }
        Ok(())
    }

    pub fn forward(&self) -> [f64; 3] {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        [sy * cp, sp, -cy * cp]
    }

    pub fn right(&self) -> [f64; 3] {
        let (sy, cy) = self.yaw.sin_cos();
        [cy, 0.0, sy]
    }

    pub fn up(&self) -> [f64; 3] {
        cross(self.right(), self.forward())
    }

    /// World point to view space `(x right, y up, depth along the view direction)`.
    pub fn to_view(&self, p: [f64; 3]) -> [f64; 3] {
        let d = [p[0] - self.position[0], p[1] - self.position[1], p[2] - self.position[2]];
        [dot(d, self.right()), dot(d, self.up()), dot(d, self.forward())]
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis() {
        let c = Camera::default();
        assert_eq!(c.forward(), [0.0, 0.0, -1.0]);
        assert_eq!(c.up(), [0.0, 1.0, 0.0]);
        let right = Camera { yaw: std::f64::consts::FRAC_PI_2, ..c };
        let f = right.forward();
        assert!((f[0] - 1.0).abs() < 1e-12 && f[2].abs() < 1e-12);
        assert_eq!(c.to_view([1.0, 2.0, -3.0]), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn validation() {
        assert!(Camera::default().validate().is_ok());
        assert!(Camera { near: 2.0, far: 1.0, ..Camera::default() }.validate().is_err());
        assert!(Camera { fov_y: 4.0, ..Camera::default() }.validate().is_err());
    }
}
