//! Box-built fixture shapes used by tests, demos and the reference model
//! training distributions.

use std::collections::BTreeSet;

use crate::shape::{Aabb, ContactKind, ContactPoint, Label, Part, PartId, Point, Shape, Triangle};

/// Axis-aligned box part with outward-facing triangles.
pub fn cuboid(id: &str, min: Point, max: Point, label: Option<&str>) -> Part {
    let c = |x: usize, y: usize, z: usize| {
        Point::new(
            if x == 0 { min.x } else { max.x },
            if y == 0 { min.y } else { max.y },
            if z == 0 { min.z } else { max.z },
        )
    };
    // Each face as a quad in counter-clockwise order seen from outside.
    let faces = [
        [c(0, 0, 0), c(0, 1, 0), c(1, 1, 0), c(1, 0, 0)],
        [c(0, 0, 1), c(1, 0, 1), c(1, 1, 1), c(0, 1, 1)],
        [c(0, 0, 0), c(1, 0, 0), c(1, 0, 1), c(0, 0, 1)],
        [c(0, 1, 0), c(0, 1, 1), c(1, 1, 1), c(1, 1, 0)],
        [c(0, 0, 0), c(0, 0, 1), c(0, 1, 1), c(0, 1, 0)],
        [c(1, 0, 0), c(1, 1, 0), c(1, 1, 1), c(1, 0, 1)],
    ];
    let triangles: Vec<Triangle> = faces
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    Part::new(id, triangles, label.map(Label::from)).expect("cuboids have triangles")
}

/// Contacts between parts whose boxes touch or overlap, placed on the
/// overlap region: four points for broad regions, two for long thin ones
/// and one otherwise.
pub fn touching_contacts(parts: &[Part]) -> Vec<ContactPoint> {
    const BROAD: f64 = 0.1;
    let mut sorted: Vec<&Part> = parts.iter().collect();
    sorted.sort_by(|a, b| a.id().cmp(b.id()));
    let mut out = Vec::new();
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            let (a, b) = (sorted[i], sorted[j]);
            let Some(region) = a.bbox().intersection(b.bbox()) else {
                continue;
            };
            out.push(region_contact(a.id(), b.id(), &region, BROAD));
        }
    }
    out
}

fn region_contact(a: &PartId, b: &PartId, region: &Aabb, broad: f64) -> ContactPoint {
    let ext = region.extents();
    let center = region.center();
    let mut axes = [0usize, 1, 2];
    axes.sort_by(|&i, &j| ext[j].partial_cmp(&ext[i]).unwrap().then(i.cmp(&j)));
    let offset = |axis: usize, t: f64| {
        let mut p = center;
        p[axis] = region.min[axis] + t * ext[axis];
        p
    };
    let (kind, points) = if ext[axes[1]] >= broad {
        let corner = |s: f64, t: f64| {
            let mut p = center;
            p[axes[0]] = region.min[axes[0]] + s * ext[axes[0]];
            p[axes[1]] = region.min[axes[1]] + t * ext[axes[1]];
            p
        };
        (
            ContactKind::Quad,
            vec![
                corner(0.25, 0.25),
                corner(0.75, 0.25),
                corner(0.75, 0.75),
                corner(0.25, 0.75),
            ],
        )
    } else if ext[axes[0]] >= broad {
        (ContactKind::Pair, vec![offset(axes[0], 0.25), offset(axes[0], 0.75)])
    } else {
        (ContactKind::Single, vec![center])
    };
    ContactPoint::new(a.clone(), b.clone(), kind, points).expect("distinct parts, matching count")
}

struct Builder {
    id: &'static str,
    category: &'static str,
    parts: Vec<Part>,
    symmetry: Vec<Vec<PartId>>,
}

impl Builder {
    fn new(id: &'static str, category: &'static str) -> Builder {
        Builder {
            id,
            category,
            parts: Vec::new(),
            symmetry: Vec::new(),
        }
    }

    fn part(mut self, id: &str, min: [f64; 3], max: [f64; 3], label: Option<&str>) -> Builder {
        self.parts.push(cuboid(id, Point::from(min), Point::from(max), label));
        self
    }

    fn symmetric(mut self, ids: &[&str]) -> Builder {
        self.symmetry.push(ids.iter().map(|&s| PartId::from(s)).collect());
        self
    }

    fn build(self) -> Shape {
        let contacts = touching_contacts(&self.parts);
        Shape::new(
            self.id,
            self.parts,
            contacts,
            self.symmetry,
            BTreeSet::from([self.category.to_owned()]),
        )
        .expect("fixture shapes are valid")
    }
}

const SIT: Option<&str> = Some("sitting");
const LEAN: Option<&str> = Some("leaning");
const SUP: Option<&str> = Some("support");
const PLACE: Option<&str> = Some("placement");
const STORE: Option<&str> = Some("storage");
const ROLL: Option<&str> = Some("rolling");

fn four_legs(b: Builder, x: [f64; 2], y: [f64; 2], t: f64, top: f64, label: Option<&str>) -> Builder {
    b.part("leg1", [x[0], y[0], 0.0], [x[0] + t, y[0] + t, top], label)
        .part("leg2", [x[1] - t, y[0], 0.0], [x[1], y[0] + t, top], label)
        .part("leg3", [x[0], y[1] - t, 0.0], [x[0] + t, y[1], top], label)
        .part("leg4", [x[1] - t, y[1] - t, 0.0], [x[1], y[1], top], label)
        .symmetric(&["leg1", "leg2", "leg3", "leg4"])
}

fn chair_basic() -> Shape {
    let b = Builder::new("chair_basic", "chair")
        .part("seat", [0.0, 0.0, 0.40], [0.45, 0.45, 0.45], SIT)
        .part("back", [0.0, 0.45, 0.405], [0.45, 0.49, 0.90], LEAN);
    four_legs(b, [0.0, 0.45], [0.0, 0.45], 0.04, 0.40, SUP).build()
}

fn chair_panel() -> Shape {
    Builder::new("chair_panel", "chair")
        .part("seat", [0.0, 0.0, 0.42], [0.5, 0.45, 0.46], SIT)
        .part("back", [0.0, 0.45, 0.425], [0.5, 0.48, 0.95], LEAN)
        .part("side_l", [0.0, 0.0, 0.0], [0.04, 0.45, 0.42], SUP)
        .part("side_r", [0.46, 0.0, 0.0], [0.5, 0.45, 0.42], SUP)
        .symmetric(&["side_l", "side_r"])
        .build()
}

fn chair_pedestal() -> Shape {
    Builder::new("chair_pedestal", "chair")
        .part("seat", [0.0, 0.0, 0.42], [0.45, 0.45, 0.46], SIT)
        .part("back", [0.0, 0.45, 0.425], [0.45, 0.49, 0.92], LEAN)
        .part("column", [0.2, 0.2, 0.06], [0.25, 0.25, 0.42], SUP)
        .part("base", [0.05, 0.05, 0.0], [0.4, 0.4, 0.06], SUP)
        .build()
}

fn chair_wheeled() -> Shape {
    Builder::new("chair_wheeled", "chair")
        .part("seat", [0.0, 0.0, 0.45], [0.45, 0.45, 0.49], SIT)
        .part("back", [0.0, 0.45, 0.455], [0.45, 0.49, 0.95], LEAN)
        .part("column", [0.2, 0.2, 0.15], [0.25, 0.25, 0.45], SUP)
        .part("base", [0.05, 0.05, 0.1], [0.4, 0.4, 0.15], SUP)
        .part("wheel1", [0.05, 0.05, 0.0], [0.09, 0.15, 0.1], ROLL)
        .part("wheel2", [0.36, 0.05, 0.0], [0.4, 0.15, 0.1], ROLL)
        .part("wheel3", [0.205, 0.3, 0.0], [0.245, 0.4, 0.1], ROLL)
        .symmetric(&["wheel1", "wheel2", "wheel3"])
        .build()
}

/// Seat far beyond a single thin leg: the whole shape tips over.
fn chair_cantilever() -> Shape {
    Builder::new("chair_cantilever", "chair")
        .part("seat", [0.0, 0.0, 0.40], [0.7, 0.45, 0.45], SIT)
        .part("back", [0.0, 0.45, 0.405], [0.7, 0.49, 0.9], LEAN)
        .part("leg", [0.0, 0.2, 0.0], [0.04, 0.24, 0.40], SUP)
        .build()
}

/// A canopy board sits just above the seat and blocks the sitting space.
fn chair_obstructed() -> Shape {
    Builder::new("chair_obstructed", "chair")
        .part("seat", [0.0, 0.0, 0.42], [0.45, 0.45, 0.46], SIT)
        .part("back", [0.0, 0.45, 0.425], [0.45, 0.49, 0.95], LEAN)
        .part("canopy", [0.0, 0.0, 0.496], [0.45, 0.45, 0.516], None)
        .part("side_l", [0.0, 0.0, 0.0], [0.04, 0.45, 0.42], SUP)
        .part("side_r", [0.41, 0.0, 0.0], [0.45, 0.45, 0.42], SUP)
        .symmetric(&["side_l", "side_r"])
        .build()
}

fn stool() -> Shape {
    let b = Builder::new("stool", "chair").part("seat", [0.0, 0.0, 0.55], [0.35, 0.35, 0.6], SIT);
    four_legs(b, [0.0, 0.35], [0.0, 0.35], 0.04, 0.55, SUP).build()
}

fn stool_tri() -> Shape {
    Builder::new("stool_tri", "chair")
        .part("seat", [0.0, 0.0, 0.5], [0.4, 0.4, 0.54], SIT)
        .part("leg1", [0.0, 0.0, 0.0], [0.04, 0.04, 0.5], SUP)
        .part("leg2", [0.36, 0.0, 0.0], [0.4, 0.04, 0.5], SUP)
        .part("leg3", [0.18, 0.36, 0.0], [0.22, 0.4, 0.5], SUP)
        .symmetric(&["leg1", "leg2", "leg3"])
        .build()
}

fn bench() -> Shape {
    Builder::new("bench", "chair")
        .part("seat", [0.0, 0.0, 0.4], [1.2, 0.4, 0.45], SIT)
        .part("back", [0.0, 0.4, 0.405], [1.2, 0.44, 0.8], LEAN)
        .part("side_l", [0.0, 0.0, 0.0], [0.05, 0.4, 0.4], SUP)
        .part("side_r", [1.15, 0.0, 0.0], [1.2, 0.4, 0.4], SUP)
        .symmetric(&["side_l", "side_r"])
        .build()
}

fn table_basic() -> Shape {
    let b = Builder::new("table_basic", "table").part("top", [0.0, 0.0, 0.72], [1.0, 0.6, 0.76], PLACE);
    four_legs(b, [0.0, 1.0], [0.0, 0.6], 0.05, 0.72, SUP).build()
}

fn table_pedestal() -> Shape {
    Builder::new("table_pedestal", "table")
        .part("top", [0.0, 0.0, 0.72], [0.8, 0.8, 0.76], PLACE)
        .part("column", [0.37, 0.37, 0.05], [0.43, 0.43, 0.72], SUP)
        .part("base", [0.15, 0.15, 0.0], [0.65, 0.65, 0.05], SUP)
        .build()
}

fn table_trestle() -> Shape {
    Builder::new("table_trestle", "table")
        .part("top", [0.0, 0.0, 0.72], [1.0, 0.6, 0.76], PLACE)
        .part("panel_l", [0.0, 0.0, 0.0], [0.04, 0.6, 0.72], SUP)
        .part("panel_r", [0.96, 0.0, 0.0], [1.0, 0.6, 0.72], SUP)
        .part("stretcher", [0.04, 0.28, 0.1], [0.96, 0.32, 0.2], None)
        .symmetric(&["panel_l", "panel_r"])
        .build()
}

fn desk() -> Shape {
    Builder::new("desk", "table")
        .part("top", [0.0, 0.0, 0.72], [1.0, 0.6, 0.76], PLACE)
        .part("panel_l", [0.0, 0.0, 0.0], [0.04, 0.6, 0.72], SUP)
        .part("drawers", [0.6, 0.0, 0.0], [1.0, 0.6, 0.72], None)
        .part("modesty", [0.04, 0.56, 0.3], [0.6, 0.6, 0.72], None)
        .build()
}

fn coffee_table() -> Shape {
    let b = Builder::new("coffee_table", "table").part("top", [0.0, 0.0, 0.38], [0.9, 0.5, 0.42], PLACE);
    four_legs(b, [0.0, 0.9], [0.0, 0.5], 0.05, 0.38, SUP).build()
}

fn wheeled_table() -> Shape {
    Builder::new("wheeled_table", "table")
        .part("top", [0.0, 0.0, 0.72], [1.0, 0.6, 0.76], PLACE)
        .part("panel_l", [0.0, 0.0, 0.1], [0.04, 0.6, 0.72], SUP)
        .part("panel_r", [0.96, 0.0, 0.1], [1.0, 0.6, 0.72], SUP)
        .part("wheel_l", [0.0, 0.25, 0.0], [0.04, 0.35, 0.1], ROLL)
        .part("wheel_r", [0.96, 0.25, 0.0], [1.0, 0.35, 0.1], ROLL)
        .symmetric(&["panel_l", "panel_r"])
        .symmetric(&["wheel_l", "wheel_r"])
        .build()
}

fn shelf_3() -> Shape {
    Builder::new("shelf_3", "shelf")
        .part("side_l", [0.0, 0.0, 0.0], [0.03, 0.3, 1.2], SUP)
        .part("side_r", [0.77, 0.0, 0.0], [0.8, 0.3, 1.2], SUP)
        .part("board1", [0.03, 0.0, 0.05], [0.77, 0.3, 0.07], STORE)
        .part("board2", [0.03, 0.0, 0.45], [0.77, 0.3, 0.47], STORE)
        .part("board3", [0.03, 0.0, 0.85], [0.77, 0.3, 0.87], STORE)
        .symmetric(&["side_l", "side_r"])
        .build()
}

fn shelf_tall() -> Shape {
    Builder::new("shelf_tall", "shelf")
        .part("side_l", [0.0, 0.0, 0.0], [0.03, 0.3, 1.6], SUP)
        .part("side_r", [0.77, 0.0, 0.0], [0.8, 0.3, 1.6], SUP)
        .part("board1", [0.03, 0.0, 0.05], [0.77, 0.3, 0.07], STORE)
        .part("board2", [0.03, 0.0, 0.45], [0.77, 0.3, 0.47], STORE)
        .part("board3", [0.03, 0.0, 0.85], [0.77, 0.3, 0.87], STORE)
        .part("board4", [0.03, 0.0, 1.25], [0.77, 0.3, 1.27], STORE)
        .part("backing", [0.03, 0.3, 0.05], [0.77, 0.32, 1.6], None)
        .symmetric(&["side_l", "side_r"])
        .build()
}

fn cabinet() -> Shape {
    Builder::new("cabinet", "shelf")
        .part("side_l", [0.0, 0.0, 0.0], [0.03, 0.4, 0.8], SUP)
        .part("side_r", [0.77, 0.0, 0.0], [0.8, 0.4, 0.8], SUP)
        .part("bottom", [0.03, 0.0, 0.0], [0.77, 0.4, 0.02], STORE)
        .part("middle", [0.03, 0.0, 0.4], [0.77, 0.4, 0.42], STORE)
        .part("lid", [0.0, 0.0, 0.8], [0.8, 0.4, 0.83], PLACE)
        .symmetric(&["side_l", "side_r"])
        .build()
}

fn shelf_low() -> Shape {
    Builder::new("shelf_low", "shelf")
        .part("side_l", [0.0, 0.0, 0.0], [0.03, 0.35, 0.7], SUP)
        .part("side_r", [0.97, 0.0, 0.0], [1.0, 0.35, 0.7], SUP)
        .part("board1", [0.03, 0.0, 0.05], [0.97, 0.35, 0.07], STORE)
        .part("board2", [0.03, 0.0, 0.4], [0.97, 0.35, 0.42], STORE)
        .symmetric(&["side_l", "side_r"])
        .build()
}

fn bookcase_wide() -> Shape {
    Builder::new("bookcase_wide", "shelf")
        .part("side_l", [0.0, 0.0, 0.0], [0.03, 0.3, 1.0], SUP)
        .part("divider", [0.6, 0.0, 0.0], [0.63, 0.3, 1.0], SUP)
        .part("side_r", [1.2, 0.0, 0.0], [1.23, 0.3, 1.0], SUP)
        .part("board_l1", [0.03, 0.0, 0.1], [0.6, 0.3, 0.12], STORE)
        .part("board_l2", [0.03, 0.0, 0.55], [0.6, 0.3, 0.57], STORE)
        .part("board_r1", [0.63, 0.0, 0.1], [1.2, 0.3, 0.12], STORE)
        .part("board_r2", [0.63, 0.0, 0.55], [1.2, 0.3, 0.57], STORE)
        .symmetric(&["side_l", "side_r"])
        .build()
}

fn cart_basic() -> Shape {
    Builder::new("cart_basic", "cart")
        .part("platform", [0.0, 0.0, 0.1], [0.8, 0.5, 0.14], STORE)
        .part("handle", [0.0, 0.0, 0.14], [0.04, 0.5, 0.9], None)
        .part("wheel1", [0.05, 0.0, 0.0], [0.15, 0.04, 0.1], ROLL)
        .part("wheel2", [0.65, 0.0, 0.0], [0.75, 0.04, 0.1], ROLL)
        .part("wheel3", [0.05, 0.46, 0.0], [0.15, 0.5, 0.1], ROLL)
        .part("wheel4", [0.65, 0.46, 0.0], [0.75, 0.5, 0.1], ROLL)
        .symmetric(&["wheel1", "wheel2", "wheel3", "wheel4"])
        .build()
}

fn trolley() -> Shape {
    Builder::new("trolley", "cart")
        .part("platform", [0.0, 0.0, 0.1], [0.5, 0.4, 0.13], STORE)
        .part("handle", [0.0, 0.0, 0.13], [0.03, 0.4, 1.1], None)
        .part("wheel_l", [0.2, 0.0, 0.0], [0.3, 0.04, 0.1], ROLL)
        .part("wheel_r", [0.2, 0.36, 0.0], [0.3, 0.4, 0.1], ROLL)
        .symmetric(&["wheel_l", "wheel_r"])
        .build()
}

fn wagon() -> Shape {
    Builder::new("wagon", "cart")
        .part("bed", [0.0, 0.0, 0.1], [0.9, 0.5, 0.3], STORE)
        .part("wheel1", [0.05, 0.0, 0.0], [0.15, 0.04, 0.1], ROLL)
        .part("wheel2", [0.75, 0.0, 0.0], [0.85, 0.04, 0.1], ROLL)
        .part("wheel3", [0.05, 0.46, 0.0], [0.15, 0.5, 0.1], ROLL)
        .part("wheel4", [0.75, 0.46, 0.0], [0.85, 0.5, 0.1], ROLL)
        .symmetric(&["wheel1", "wheel2", "wheel3", "wheel4"])
        .build()
}

fn serving_cart() -> Shape {
    Builder::new("serving_cart", "cart")
        .part("lower", [0.0, 0.0, 0.1], [0.7, 0.45, 0.13], STORE)
        .part("upper", [0.03, 0.0, 0.5], [0.67, 0.45, 0.53], STORE)
        .part("panel_l", [0.0, 0.0, 0.13], [0.03, 0.45, 0.8], SUP)
        .part("panel_r", [0.67, 0.0, 0.13], [0.7, 0.45, 0.8], SUP)
        .part("wheel1", [0.05, 0.0, 0.0], [0.15, 0.04, 0.1], ROLL)
        .part("wheel2", [0.55, 0.0, 0.0], [0.65, 0.04, 0.1], ROLL)
        .part("roller", [0.1, 0.41, 0.0], [0.6, 0.45, 0.1], ROLL)
        .symmetric(&["panel_l", "panel_r"])
        .symmetric(&["wheel1", "wheel2"])
        .build()
}

/// The full fixture corpus, sorted by id.
pub fn corpus() -> Vec<Shape> {
    let mut shapes = vec![
        bench(),
        bookcase_wide(),
        cabinet(),
        cart_basic(),
        chair_basic(),
        chair_cantilever(),
        chair_obstructed(),
        chair_panel(),
        chair_pedestal(),
        chair_wheeled(),
        coffee_table(),
        desk(),
        serving_cart(),
        shelf_3(),
        shelf_low(),
        shelf_tall(),
        stool(),
        stool_tri(),
        table_basic(),
        table_pedestal(),
        table_trestle(),
        trolley(),
        wagon(),
        wheeled_table(),
    ];
    shapes.sort_by(|a, b| a.id().cmp(b.id()));
    shapes
}

pub fn by_id(id: &str) -> Option<Shape> {
    corpus().into_iter().find(|s| s.id() == id)
}

/// Four-shape starting population covering `sitting` and `rolling`.
pub fn population() -> Vec<Shape> {
    ["chair_basic", "chair_panel", "cart_basic", "wheeled_table"]
        .iter()
        .map(|id| by_id(id).expect("known fixture"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_sizes() {
        let corpus = corpus();
        assert!(corpus.len() >= 20);
        for s in &corpus {
            assert!(
                (3..=7).contains(&s.parts().len()),
                "{} has {} parts",
                s.id(),
                s.parts().len()
            );
        }
    }

    #[test]
    fn fixtures_are_connected() {
        for s in corpus() {
            let g = s.relation_graph();
            assert!(g.is_connected(g.nodes()).unwrap(), "{} is not connected", s.id());
        }
    }

    #[test]
    fn cuboid_bbox_and_area() {
        let p = cuboid("c", Point::new(0.0, 0.0, 0.0), Point::new(1.0, 2.0, 3.0), None);
        assert_eq!(p.triangles().len(), 12);
        assert!((p.area() - 22.0).abs() < 1e-12);
        for t in p.triangles() {
            let n = crate::shape::geometry::triangle_normal(t);
            let c = (t[0].coords + t[1].coords + t[2].coords) / 3.0 - Point::new(0.5, 1.0, 1.5).coords;
            assert!(n.dot(&c) > 0.0, "triangle faces inward");
        }
    }
}
