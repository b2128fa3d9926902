//! Segmented shapes: parts, contact points, symmetry lists and categories.
//!
//! Coordinates are z-up; the ground plane sits at the lowest z of a shape.

mod contacts;
pub mod geometry;
mod graph;
pub mod io;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use contacts::{default_adjacency_eps, detect_contact_points, with_detected_contacts, EXACT_TRIANGLE_LIMIT};
pub use geometry::{Aabb, Point, Triangle, Vector};
pub use graph::RelationGraph;

use crate::error::{Error, Result};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

string_id!(
    /// Part identifier, unique within a shape.
    PartId
);
string_id!(
    /// Functionality label of a part, e.g. `sitting` or `rolling`.
    Label
);

/// A group of triangles with an optional functionality label.
///
/// `scale` is the cumulative per-axis scaling applied since the part was
/// loaded; it drives proportion restoration after crossovers.
#[derive(Clone, Debug, PartialEq)]
pub struct Part {
    id: PartId,
    triangles: Vec<Triangle>,
    label: Option<Label>,
    bbox: Aabb,
    scale: Vector,
}

impl Part {
    pub fn new(id: impl Into<PartId>, triangles: Vec<Triangle>, label: Option<Label>) -> Result<Part> {
        let id = id.into();
        let bbox = Aabb::from_points(triangles.iter().flatten()).ok_or_else(|| Error::InvalidShape {
            shape: String::new(),
            reason: format!("part `{id}` has no triangles"),
        })?;
        Ok(Part {
            id,
            triangles,
            label,
            bbox,
            scale: Vector::repeat(1.0),
        })
    }

    pub fn id(&self) -> &PartId {
        &self.id
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn label(&self) -> Option<&Label> {
        self.label.as_ref()
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn scale(&self) -> Vector {
        self.scale
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(geometry::triangle_area).sum()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Point> {
        self.triangles.iter().flatten()
    }

    pub fn with_id(mut self, id: impl Into<PartId>) -> Part {
        self.id = id.into();
        self
    }

    pub fn with_label(mut self, label: Option<Label>) -> Part {
        self.label = label;
        self
    }

    pub fn with_scale(mut self, scale: Vector) -> Part {
        self.scale = scale;
        self
    }

    /// Applies `p -> f(p)` to every vertex and recomputes the bounding box.
    pub fn map_points(&self, f: impl Fn(&Point) -> Point) -> Part {
        let triangles: Vec<Triangle> = self.triangles.iter().map(|t| [f(&t[0]), f(&t[1]), f(&t[2])]).collect();
        let bbox = Aabb::from_points(triangles.iter().flatten()).expect("non-empty");
        Part {
            id: self.id.clone(),
            triangles,
            label: self.label.clone(),
            bbox,
            scale: self.scale,
        }
    }

    pub fn translated(&self, offset: &Vector) -> Part {
        self.map_points(|p| p + offset)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContactKind {
    Quad,
    Pair,
    Single,
}

impl ContactKind {
    pub fn point_count(self) -> usize {
        match self {
            ContactKind::Quad => 4,
            ContactKind::Pair => 2,
            ContactKind::Single => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ContactKind::Quad => "quad",
            ContactKind::Pair => "pair",
            ContactKind::Single => "single",
        }
    }

    pub fn parse(name: &str) -> Option<ContactKind> {
        match name {
            "quad" => Some(ContactKind::Quad),
            "pair" => Some(ContactKind::Pair),
            "single" => Some(ContactKind::Single),
            _ => None,
        }
    }
}

/// Where two parts connect: one, two or four points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub part_a: PartId,
    pub part_b: PartId,
    pub kind: ContactKind,
    pub points: Vec<Point>,
}

impl ContactPoint {
    pub fn new(part_a: PartId, part_b: PartId, kind: ContactKind, points: Vec<Point>) -> Result<ContactPoint> {
        if part_a == part_b {
            return Err(Error::InvalidShape {
                shape: String::new(),
                reason: format!("contact connects part `{part_a}` to itself"),
            });
        }
        if points.len() != kind.point_count() {
            return Err(Error::InvalidShape {
                shape: String::new(),
                reason: format!(
                    "{} contact between `{part_a}` and `{part_b}` has {} points",
                    kind.name(),
                    points.len()
                ),
            });
        }
        Ok(ContactPoint {
            part_a,
            part_b,
            kind,
            points,
        })
    }

    pub fn single(part_a: PartId, part_b: PartId, point: Point) -> ContactPoint {
        ContactPoint {
            part_a,
            part_b,
            kind: ContactKind::Single,
            points: vec![point],
        }
    }

    pub fn involves(&self, id: &PartId) -> bool {
        &self.part_a == id || &self.part_b == id
    }

    /// The partner of `id` in this contact, if `id` takes part in it.
    pub fn other(&self, id: &PartId) -> Option<&PartId> {
        if &self.part_a == id {
            Some(&self.part_b)
        } else if &self.part_b == id {
            Some(&self.part_a)
        } else {
            None
        }
    }

    /// Unordered part pair, smaller id first.
    pub fn key(&self) -> (PartId, PartId) {
        if self.part_a <= self.part_b {
            (self.part_a.clone(), self.part_b.clone())
        } else {
            (self.part_b.clone(), self.part_a.clone())
        }
    }
}

/// How a part group came to be.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupOrigin {
    Base,
    Expanded,
    SymmetrySet,
    SymmetrySingleton,
    Null,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Exchange,
    Insertion,
}

/// A part group as recorded in offspring provenance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub shape_id: String,
    pub part_ids: Vec<PartId>,
    pub origin: GroupOrigin,
}

/// Parents and operation that produced an offspring. `from_a` and `from_b`
/// list the offspring part ids inherited from each parent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub parents: [String; 2],
    pub operation: Operation,
    /// Group removed from (or null for) the first parent, then the incoming group.
    pub groups: [GroupRecord; 2],
    pub from_a: Vec<PartId>,
    pub from_b: Vec<PartId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Shape {
    id: String,
    parts: Vec<Part>,
    contacts: Vec<ContactPoint>,
    symmetry_groups: Vec<Vec<PartId>>,
    categories: BTreeSet<String>,
    provenance: Option<Provenance>,
}

impl Shape {
    pub fn new(
        id: impl Into<String>,
        parts: Vec<Part>,
        contacts: Vec<ContactPoint>,
        symmetry_groups: Vec<Vec<PartId>>,
        categories: BTreeSet<String>,
    ) -> Result<Shape> {
        let shape = Shape {
            id: id.into(),
            parts,
            contacts,
            symmetry_groups,
            categories,
            provenance: None,
        };
        shape.validate()?;
        Ok(shape)
    }

    fn invalid(&self, reason: String) -> Error {
        Error::InvalidShape {
            shape: self.id.clone(),
            reason,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.parts.is_empty() {
            return Err(self.invalid("shape has no parts".into()));
        }
        let mut ids = BTreeSet::new();
        for part in &self.parts {
            if !ids.insert(part.id()) {
                return Err(self.invalid(format!("duplicate part id `{}`", part.id())));
            }
        }
        for c in &self.contacts {
            for id in [&c.part_a, &c.part_b] {
                if !ids.contains(id) {
                    return Err(Error::UnknownPartId(id.clone()));
                }
            }
            if c.part_a == c.part_b || c.points.len() != c.kind.point_count() {
                return Err(self.invalid(format!("malformed contact between `{}` and `{}`", c.part_a, c.part_b)));
            }
        }
        for group in &self.symmetry_groups {
            let distinct: BTreeSet<_> = group.iter().collect();
            if distinct.len() < 2 || distinct.len() != group.len() {
                return Err(self.invalid("symmetry group needs at least two distinct parts".into()));
            }
            if let Some(missing) = group.iter().find(|id| !ids.contains(id)) {
                return Err(Error::UnknownPartId(missing.clone()));
            }
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn contacts(&self) -> &[ContactPoint] {
        &self.contacts
    }

    pub fn symmetry_groups(&self) -> &[Vec<PartId>] {
        &self.symmetry_groups
    }

    pub fn categories(&self) -> &BTreeSet<String> {
        &self.categories
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn part(&self, id: &PartId) -> Option<&Part> {
        self.parts.iter().find(|p| p.id() == id)
    }

    pub fn part_index(&self, id: &PartId) -> Option<usize> {
        self.parts.iter().position(|p| p.id() == id)
    }

    /// All functionality labels carried by the shape's parts.
    pub fn labels(&self) -> BTreeSet<Label> {
        self.parts.iter().filter_map(|p| p.label().cloned()).collect()
    }

    pub fn bbox(&self) -> Aabb {
        self.parts
            .iter()
            .map(|p| *p.bbox())
            .reduce(|a, b| a.union(&b))
            .expect("shapes have parts")
    }

    /// Tight bounding box of a set of parts.
    pub fn bbox_of<'a, I>(&self, ids: I) -> Result<Aabb>
    where
        I: IntoIterator<Item = &'a PartId>,
    {
        let mut bbox: Option<Aabb> = None;
        for id in ids {
            let part = self.part(id).ok_or_else(|| Error::UnknownPartId(id.clone()))?;
            bbox = Some(match bbox {
                Some(b) => b.union(part.bbox()),
                None => *part.bbox(),
            });
        }
        bbox.ok_or(Error::EmptySelection)
    }

    pub fn relation_graph(&self) -> RelationGraph {
        RelationGraph::from_shape(self)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Shape {
        self.id = id.into();
        self
    }

    /// Renames every part, updating contacts, symmetry lists and provenance.
    pub fn map_part_ids(self, f: impl Fn(&PartId) -> PartId) -> Result<Shape> {
        let shape = Shape {
            id: self.id,
            parts: self
                .parts
                .into_iter()
                .map(|p| {
                    let id = f(p.id());
                    p.with_id(id)
                })
                .collect(),
            contacts: self
                .contacts
                .into_iter()
                .map(|c| ContactPoint {
                    part_a: f(&c.part_a),
                    part_b: f(&c.part_b),
                    ..c
                })
                .collect(),
            symmetry_groups: self
                .symmetry_groups
                .iter()
                .map(|g| g.iter().map(&f).collect())
                .collect(),
            categories: self.categories,
            provenance: self.provenance.map(|p| Provenance {
                from_a: p.from_a.iter().map(&f).collect(),
                from_b: p.from_b.iter().map(&f).collect(),
                ..p
            }),
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Shape {
        self.provenance = Some(provenance);
        self
    }

    pub fn with_contacts(mut self, contacts: Vec<ContactPoint>) -> Result<Shape> {
        self.contacts = contacts;
        self.validate()?;
        Ok(self)
    }

    /// Replaces part labels; parts missing from `labels` become unlabeled.
    pub fn with_labels(mut self, labels: &std::collections::BTreeMap<PartId, Label>) -> Shape {
        self.parts = self
            .parts
            .into_iter()
            .map(|p| {
                let label = labels.get(p.id()).cloned();
                p.with_label(label)
            })
            .collect();
        self
    }

    pub fn with_parts(mut self, parts: Vec<Part>) -> Result<Shape> {
        self.parts = parts;
        self.validate()?;
        Ok(self)
    }

    /// Builds an offspring; validation applies as for `new`.
    pub(crate) fn assemble(
        id: String,
        parts: Vec<Part>,
        contacts: Vec<ContactPoint>,
        symmetry_groups: Vec<Vec<PartId>>,
        categories: BTreeSet<String>,
        provenance: Provenance,
    ) -> Result<Shape> {
        let shape = Shape {
            id,
            parts,
            contacts,
            symmetry_groups,
            categories,
            provenance: Some(provenance),
        };
        shape.validate()?;
        Ok(shape)
    }
}
