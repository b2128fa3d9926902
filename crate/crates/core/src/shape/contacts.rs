use std::collections::BTreeMap;

use super::geometry::{triangle_triangle_closest, Point};
use super::{ContactPoint, Part, PartId, Shape};

/// Parts with more triangles than this use a vertex-sampled distance.
pub const EXACT_TRIANGLE_LIMIT: usize = 5000;
const SAMPLED_VERTICES: usize = 2048;

/// Default adjacency threshold: 1% of the shape's bounding box diagonal.
pub fn default_adjacency_eps(shape: &Shape) -> f64 {
    0.01 * shape.bbox().diagonal()
}

/// One `Single` contact per part pair closer than `adjacency_eps`, placed at
/// the midpoint of the closest point pair. Pairs are visited with the
/// smaller part id first, so the result does not depend on part order.
pub fn detect_contact_points(shape: &Shape, adjacency_eps: f64) -> Vec<ContactPoint> {
    assert!(adjacency_eps > 0.0, "adjacency_eps must be positive");
    let tie = 1e-9 * shape.bbox().diagonal().max(f64::MIN_POSITIVE);
    let mut parts: Vec<&Part> = shape.parts().iter().collect();
    parts.sort_by(|a, b| a.id().cmp(b.id()));

    let mut out = Vec::new();
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            let (a, b) = (parts[i], parts[j]);
            if a.bbox().gap(b.bbox()) >= adjacency_eps {
                continue;
            }
            let (pa, pb, d) = closest_pair(a, b, tie);
            if d < adjacency_eps {
                let mid = nalgebra::center(&pa, &pb);
                out.push(ContactPoint::single(a.id().clone(), b.id().clone(), mid));
            }
        }
    }
    out
}

fn closest_pair(a: &Part, b: &Part, tie: f64) -> (Point, Point, f64) {
    if a.triangles().len() > EXACT_TRIANGLE_LIMIT || b.triangles().len() > EXACT_TRIANGLE_LIMIT {
        return sampled_closest_pair(a, b);
    }
    let mut best: Option<(Point, Point, f64)> = None;
    for ta in a.triangles() {
        for tb in b.triangles() {
            let (pa, pb, d) = triangle_triangle_closest(ta, tb, tie);
            if best.is_none_or(|(_, _, bd)| d < bd - tie) {
                best = Some((pa, pb, d));
                if d == 0.0 {
                    return (pa, pb, d);
                }
            }
        }
    }
    best.expect("parts have triangles")
}

fn sampled_vertices(part: &Part) -> Vec<Point> {
    let all: Vec<Point> = part.vertices().copied().collect();
    if all.len() <= SAMPLED_VERTICES {
        return all;
    }
    let stride = all.len() as f64 / SAMPLED_VERTICES as f64;
    (0..SAMPLED_VERTICES)
        .map(|k| all[(k as f64 * stride) as usize])
        .collect()
}

fn sampled_closest_pair(a: &Part, b: &Part) -> (Point, Point, f64) {
    let va = sampled_vertices(a);
    let vb = sampled_vertices(b);
    let mut best = (va[0], vb[0], f64::INFINITY);
    for p in &va {
        for q in &vb {
            let d = (p - q).norm();
            if d < best.2 {
                best = (*p, *q, d);
            }
        }
    }
    best
}

/// Merges detected contacts into `explicit`: any part pair that already has
/// an explicit contact keeps only the explicit ones.
pub fn with_detected_contacts(shape: &Shape, explicit: Vec<ContactPoint>, adjacency_eps: f64) -> Vec<ContactPoint> {
    let covered: BTreeMap<(PartId, PartId), ()> = explicit.iter().map(|c| (c.key(), ())).collect();
    let mut out = explicit;
    out.extend(
        detect_contact_points(shape, adjacency_eps)
            .into_iter()
            .filter(|c| !covered.contains_key(&c.key())),
    );
    out
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::fixtures::cuboid;
    use crate::shape::Vector;

    fn two_boxes(gap: f64) -> Shape {
        let a = cuboid("a", Point::origin(), Point::new(1.0, 1.0, 1.0), None);
        let b = cuboid(
            "b",
            Point::new(1.0 + gap, 0.0, 0.0),
            Point::new(2.0 + gap, 1.0, 1.0),
            None,
        );
        Shape::new("s", vec![a, b], vec![], vec![], BTreeSet::new()).unwrap()
    }

    #[test]
    fn touching_cubes_give_single_contact_on_shared_face() {
        let contacts = detect_contact_points(&two_boxes(0.0), 0.01);
        assert_eq!(contacts.len(), 1);
        let c = &contacts[0];
        assert_eq!(c.points.len(), 1);
        assert!((c.points[0].x - 1.0).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&c.points[0].y));
    }

    #[test]
    fn gap_above_threshold_gives_nothing() {
        assert!(detect_contact_points(&two_boxes(0.1), 0.05).is_empty());
        let near = detect_contact_points(&two_boxes(0.1), 0.2);
        assert_eq!(near.len(), 1);
        assert!((near[0].points[0].x - 1.05).abs() < 1e-12);
    }

    #[test]
    fn explicit_contacts_override_detected() {
        let shape = two_boxes(0.0);
        let explicit = vec![ContactPoint::single("b".into(), "a".into(), Point::new(1.0, 0.5, 0.5))];
        let merged = with_detected_contacts(&shape, explicit.clone(), 0.01);
        assert_eq!(merged, explicit);
    }

    #[test]
    fn sampled_path_agrees_on_separated_boxes() {
        let shape = two_boxes(0.25);
        let (_, _, d) = sampled_closest_pair(&shape.parts()[0], &shape.parts()[1]);
        assert!((d - 0.25).abs() < 1e-12);
    }

    #[test]
    fn translation_moves_midpoints() {
        let shape = two_boxes(0.0);
        let t = Vector::new(3.25, -7.5, 0.125);
        let moved: Vec<Part> = shape.parts().iter().map(|p| p.translated(&t)).collect();
        let moved = shape.clone().with_parts(moved).unwrap();
        let c0 = detect_contact_points(&shape, 0.01);
        let c1 = detect_contact_points(&moved, 0.01);
        assert_eq!(c0.len(), c1.len());
        for (x, y) in c0.iter().zip(&c1) {
            assert!((x.points[0] + t - y.points[0]).norm() < 1e-9);
        }
    }
}
