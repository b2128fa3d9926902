//! Dataset I/O: `<id>.obj` (groups are parts) plus a `<id>.json` sidecar.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::contacts::{default_adjacency_eps, with_detected_contacts};
use super::{ContactKind, ContactPoint, Label, Part, PartId, Point, Provenance, Shape, Triangle, Vector};
use crate::error::{Error, Result};

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    /// Additional categories; offspring inherit several.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    #[serde(default)]
    pub contacts: Vec<SidecarContact>,
    #[serde(default)]
    pub symmetry: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    /// Cumulative per-axis part scales, absent means (1,1,1).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub scales: BTreeMap<String, [f64; 3]>,
    /// Whether to add automatically detected contacts on load.
    #[serde(default = "default_true")]
    pub auto_contacts: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidecarContact {
    pub a: String,
    pub b: String,
    pub kind: String,
    pub points: Vec<[f64; 3]>,
}

/// Path of the sidecar belonging to a mesh.
pub fn sidecar_path(mesh: &Path) -> PathBuf {
    mesh.with_extension("json")
}

/// Loads every `*.obj` in `dir` with its sidecar, sorted by shape id.
pub fn load_population(dir: impl AsRef<Path>) -> Result<Vec<Shape>> {
    let dir = dir.as_ref();
    let mut meshes = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "obj") && path.is_file() {
            meshes.push(path);
        }
    }
    meshes.sort();
    let mut shapes = meshes.iter().map(|m| load_shape(m)).collect::<Result<Vec<_>>>()?;
    shapes.sort_by(|a, b| a.id().cmp(b.id()));
    Ok(shapes)
}

/// Loads one shape; its id is the mesh file stem.
pub fn load_shape(mesh: &Path) -> Result<Shape> {
    let sidecar_file = sidecar_path(mesh);
    if !sidecar_file.is_file() {
        return Err(Error::MissingSidecar {
            mesh: mesh.to_path_buf(),
            sidecar: sidecar_file,
        });
    }
    let text = fs::read_to_string(&sidecar_file).map_err(|e| Error::io(&sidecar_file, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| Error::json(&sidecar_file, e))?;
    let id = mesh
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let groups = read_obj(mesh)?;
    build_shape(id, groups, &sidecar, &sidecar_file)
}

/// Triangles per OBJ group, in first-appearance order. Repeated group names
/// are merged.
pub fn read_obj(mesh: &Path) -> Result<Vec<(String, Vec<Triangle>)>> {
    let options = tobj::LoadOptions {
        triangulate: true,
        single_index: false,
        ignore_points: true,
        ignore_lines: true,
    };
    let (models, _materials) = tobj::load_obj(mesh, &options).map_err(|source| Error::Obj {
        path: mesh.to_path_buf(),
        source,
    })?;
    let mut out: Vec<(String, Vec<Triangle>)> = Vec::new();
    for model in models {
        let pos = &model.mesh.positions;
        let vertex = |i: u32| {
            let i = i as usize * 3;
            Point::new(pos[i], pos[i + 1], pos[i + 2])
        };
        let tris: Vec<Triangle> = model
            .mesh
            .indices
            .chunks_exact(3)
            .map(|f| [vertex(f[0]), vertex(f[1]), vertex(f[2])])
            .collect();
        if tris.is_empty() {
            continue;
        }
        match out.iter_mut().find(|(name, _)| *name == model.name) {
            Some((_, existing)) => existing.extend(tris),
            None => out.push((model.name, tris)),
        }
    }
    Ok(out)
}

fn build_shape(id: String, groups: Vec<(String, Vec<Triangle>)>, sidecar: &Sidecar, file: &Path) -> Result<Shape> {
    let names: BTreeSet<&str> = groups.iter().map(|(n, _)| n.as_str()).collect();
    let dangling = |field: String, part: &str| Error::DanglingPartReference {
        file: file.to_path_buf(),
        field,
        part: part.to_owned(),
    };
    let check = |field: String, part: &str| {
        if names.contains(part) {
            Ok(())
        } else {
            Err(dangling(field, part))
        }
    };

    for part in sidecar.labels.keys() {
        check(format!("labels.{part}"), part)?;
    }
    for part in sidecar.scales.keys() {
        check(format!("scales.{part}"), part)?;
    }
    let mut contacts = Vec::with_capacity(sidecar.contacts.len());
    for (i, c) in sidecar.contacts.iter().enumerate() {
        check(format!("contacts[{i}].a"), &c.a)?;
        check(format!("contacts[{i}].b"), &c.b)?;
        let kind = ContactKind::parse(&c.kind).ok_or_else(|| Error::UnknownContactKind {
            file: file.to_path_buf(),
            field: format!("contacts[{i}].kind"),
            kind: c.kind.clone(),
        })?;
        if c.points.len() != kind.point_count() {
            return Err(Error::MalformedContactKind {
                file: file.to_path_buf(),
                field: format!("contacts[{i}].points"),
                kind: c.kind.clone(),
                expected: kind.point_count(),
                found: c.points.len(),
            });
        }
        let points = c.points.iter().map(|p| Point::new(p[0], p[1], p[2])).collect();
        contacts.push(
            ContactPoint::new(c.a.as_str().into(), c.b.as_str().into(), kind, points).map_err(|e| match e {
                Error::InvalidShape { reason, .. } => Error::InvalidShape {
                    shape: format!("{} (contacts[{i}])", file.display()),
                    reason,
                },
                other => other,
            })?,
        );
    }
    for (i, group) in sidecar.symmetry.iter().enumerate() {
        for (j, part) in group.iter().enumerate() {
            check(format!("symmetry[{i}][{j}]"), part)?;
        }
    }

    let parts = groups
        .into_iter()
        .map(|(name, tris)| {
            let label = sidecar.labels.get(&name).map(|l| Label::from(l.as_str()));
            let scale = sidecar.scales.get(&name).map(|s| Vector::new(s[0], s[1], s[2]));
            let part = Part::new(name.as_str(), tris, label)?;
            Ok(match scale {
                Some(s) => part.with_scale(s),
                None => part,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut categories: BTreeSet<String> = sidecar.categories.iter().cloned().collect();
    categories.extend(sidecar.category.iter().cloned());
    let symmetry = sidecar
        .symmetry
        .iter()
        .map(|g| g.iter().map(|p| PartId::from(p.as_str())).collect())
        .collect();

    let shape = Shape::new(id.clone(), parts, Vec::new(), symmetry, categories).map_err(|e| match e {
        Error::InvalidShape { reason, .. } => Error::InvalidShape {
            shape: id.clone(),
            reason,
        },
        other => other,
    })?;
    let contacts = if sidecar.auto_contacts {
        with_detected_contacts(&shape, contacts, default_adjacency_eps(&shape))
    } else {
        contacts
    };
    let shape = shape.with_contacts(contacts)?;
    Ok(match &sidecar.provenance {
        Some(p) => shape.with_provenance(p.clone()),
        None => shape,
    })
}

/// Sidecar describing `shape` exactly: every contact is written explicitly
/// and detection is disabled so a reload reproduces the same shape.
pub fn sidecar_for(shape: &Shape) -> Sidecar {
    let point = |p: &Point| [p.x, p.y, p.z];
    Sidecar {
        category: shape.categories().iter().next().cloned(),
        categories: if shape.categories().len() > 1 {
            shape.categories().iter().cloned().collect()
        } else {
            Vec::new()
        },
        labels: shape
            .parts()
            .iter()
            .filter_map(|p| p.label().map(|l| (p.id().to_string(), l.to_string())))
            .collect(),
        contacts: shape
            .contacts()
            .iter()
            .map(|c| SidecarContact {
                a: c.part_a.to_string(),
                b: c.part_b.to_string(),
                kind: c.kind.name().to_owned(),
                points: c.points.iter().map(point).collect(),
            })
            .collect(),
        symmetry: shape
            .symmetry_groups()
            .iter()
            .map(|g| g.iter().map(|p| p.to_string()).collect())
            .collect(),
        provenance: shape.provenance().cloned(),
        scales: shape
            .parts()
            .iter()
            .filter(|p| p.scale() != Vector::repeat(1.0))
            .map(|p| (p.id().to_string(), [p.scale().x, p.scale().y, p.scale().z]))
            .collect(),
        auto_contacts: false,
    }
}

/// OBJ text with one `g` block per part. Floats use the shortest
/// representation that round-trips.
pub fn obj_text(shape: &Shape) -> String {
    let mut out = String::new();
    let mut base = 1usize;
    for part in shape.parts() {
        let _ = writeln!(out, "g {}", part.id());
        for v in part.vertices() {
            let _ = writeln!(out, "v {:?} {:?} {:?}", v.x, v.y, v.z);
        }
        for k in 0..part.triangles().len() {
            let i = base + 3 * k;
            let _ = writeln!(out, "f {} {} {}", i, i + 1, i + 2);
        }
        base += 3 * part.triangles().len();
    }
    out
}

/// Writes `<dir>/<id>.obj` and `<dir>/<id>.json`; returns the mesh path.
pub fn write_shape(shape: &Shape, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mesh = dir.join(format!("{}.obj", shape.id()));
    fs::write(&mesh, obj_text(shape)).map_err(|e| Error::io(&mesh, e))?;
    let side = sidecar_path(&mesh);
    let json = serde_json::to_string_pretty(&sidecar_for(shape)).map_err(|e| Error::json(&side, e))?;
    fs::write(&side, json).map_err(|e| Error::io(&side, e))?;
    Ok(mesh)
}
