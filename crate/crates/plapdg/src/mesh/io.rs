//! Mesh import/export.
//!
//! Schema: `{"vertices": [[x, y], ...], "elements": [[i, j, k], ...]}` with
//! 0-based vertex indices. Interfaces are rebuilt on read, never stored.

use super::TriMesh;
use crate::error::MeshError;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
}

pub fn write_json(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let file = MeshFile {
        vertices: mesh.vertices.clone(),
        elements: mesh.elements.clone(),
    };
    let json = serde_json::to_string_pretty(&file).expect("mesh serialization cannot fail");
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_json(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    let file: MeshFile =
        serde_json::from_str(&text).map_err(|e| MeshError::Schema(e.to_string()))?;
    TriMesh::from_raw(file.vertices, file.elements)
}
