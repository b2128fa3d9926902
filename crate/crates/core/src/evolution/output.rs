use std::fs;
use std::path::{Path, PathBuf};

use super::engine::{Generation, GenerationManifest};
use crate::error::{Error, Result};
use crate::shape::io::write_shape;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn generation_dir(root: &Path, index: usize) -> PathBuf {
    root.join(format!("gen_{index}"))
}

/// Writes `gen_<i>/` under `root`: one OBJ and sidecar per shape plus the
/// ranked manifest.
pub fn write_generation(generation: &Generation, root: &Path) -> Result<PathBuf> {
    let dir = generation_dir(root, generation.index);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for shape in &generation.shapes {
        write_shape(shape, &dir)?;
    }
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&generation.manifest()).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(dir)
}

pub fn read_manifest(dir: &Path) -> Result<GenerationManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(&path, e))
}

/// Reloads a written generation; shapes come back in ranked order.
pub fn read_generation(root: &Path, index: usize) -> Result<Generation> {
    let dir = generation_dir(root, index);
    let manifest = read_manifest(&dir)?;
    let shapes = manifest
        .shapes
        .iter()
        .map(|e| crate::shape::io::load_shape(&dir.join(format!("{}.obj", e.id))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Generation {
        index: manifest.index,
        produced: manifest.produced,
        labels: manifest.labels.into_iter().collect(),
        shapes,
        entries: manifest.shapes,
        selected: manifest.selected,
    })
}
