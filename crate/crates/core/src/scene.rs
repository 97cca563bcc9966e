//! Neutral JSON mesh format shared by retexturing and rendering.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VtError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub position: [f64; 3],
    pub uv: [f64; 2],
}

/// A group of triangles textured by one source image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub texture: String,
    pub triangles: Vec<[u32; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneMesh {
    pub vertices: Vec<Vertex>,
    pub faces: Vec<Face>,
}

impl SceneMesh {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mesh: SceneMesh = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len() as u32;
        for (fi, face) in self.faces.iter().enumerate() {
            if let Some(t) = face.triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
                return Err(VtError::domain(format!("face {fi} triangle {t:?} indexes past {n} vertices")));
            }
        }
        for v in &self.vertices {
            if v.position.iter().chain(v.uv.iter()).any(|c| !c.is_finite()) {
                return Err(VtError::domain("non-finite vertex attribute"));
            }
        }
        Ok(())
    }

    pub fn triangles(&self) -> impl Iterator<Item = [Vertex; 3]> + '_ {
        self.faces.iter().flat_map(|f| f.triangles.iter()).map(|t| t.map(|i| self.vertices[i as usize]))
    }

    pub fn triangle_count(&self) -> usize {
        self.faces.iter().map(|f| f.triangles.len()).sum()
    }

    /// Appends an axis-aligned quad as one face. Corners go counter-clockwise
    /// starting at uv (0, 0); `uv_max` sets the repeat range.
    pub fn push_quad(&mut self, texture: &str, corners: [[f64; 3]; 4], uv_max: [f64; 2]) {
        let base = self.vertices.len() as u32;
        let uvs = [[0.0, 0.0], [uv_max[0], 0.0], [uv_max[0], uv_max[1]], [0.0, uv_max[1]]];
        for (position, uv) in corners.into_iter().zip(uvs) {
            self.vertices.push(Vertex { position, uv });
        }
        self.faces.push(Face {
            texture: texture.to_string(),
            triangles: vec![[base, base + 1, base + 2], [base, base + 2, base + 3]],
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let mut m = SceneMesh::default();
        m.push_quad("a", [[0.0; 3], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]], [1.0, 1.0]);
        assert!(m.validate().is_ok());
        assert_eq!(m.triangle_count(), 2);
        m.faces[0].triangles.push([0, 1, 9]);
        assert!(m.validate().is_err());
    }
}
