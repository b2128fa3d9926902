use nalgebra::Point2;

use super::sampling::ShapeView;
use crate::constants::GROUND_BAND_FRACTION;
use crate::shape::Point;

pub type Point2d = Point2<f64>;

fn cross(o: &Point2d, a: &Point2d, b: &Point2d) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Counter-clockwise convex hull (Andrew's monotone chain) without
/// collinear points. Fewer than three distinct points come back as is.
pub fn convex_hull(points: &[Point2d]) -> Vec<Point2d> {
    let mut pts: Vec<Point2d> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2d> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2d>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Whether `p` is inside or on a counter-clockwise convex polygon with at
/// least three vertices.
pub fn in_convex_polygon(poly: &[Point2d], p: &Point2d) -> bool {
    (0..poly.len()).all(|i| cross(&poly[i], &poly[(i + 1) % poly.len()], p) >= 0.0)
}

fn segment_distance(p: &Point2d, a: &Point2d, b: &Point2d) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

/// Stability of a center of mass over a set of 3D points. Ground points are
/// those below `zmin + GROUND_BAND_FRACTION · diag`; the center's ground
/// projection must lie in their convex hull. With a degenerate hull (a
/// point or a segment) the center must lie within `GROUND_BAND_FRACTION ·
/// diag` of it.
pub fn is_stable(points: &[Point], com: &Point, diag: f64) -> bool {
    let Some(zmin) = points.iter().map(|p| p.z).min_by(f64::total_cmp) else {
        return false;
    };
    let band = zmin + GROUND_BAND_FRACTION * diag;
    let ground: Vec<Point2d> = points
        .iter()
        .filter(|p| p.z < band || p.z == zmin)
        .map(|p| Point2d::new(p.x, p.y))
        .collect();
    let c = Point2d::new(com.x, com.y);
    let hull = convex_hull(&ground);
    match hull.len() {
        0 => false,
        1 | 2 => {
            let a = hull[0];
            let b = *hull.last().expect("non-empty");
            segment_distance(&c, &a, &b) <= GROUND_BAND_FRACTION * diag
        }
        _ => in_convex_polygon(&hull, &c),
    }
}

/// Mean of the bounding box centers of the view's parts.
pub fn center_of_mass(view: &ShapeView) -> Option<Point> {
    let mut sum = nalgebra::Vector3::zeros();
    let mut n = 0usize;
    for i in view.part_indices() {
        sum += view.shape.parts()[i].bbox().center().coords;
        n += 1;
    }
    (n > 0).then(|| Point::from(sum / n as f64))
}

/// Points used for the ground test: surface samples plus mesh vertices of
/// the included parts.
pub fn stability_points(view: &ShapeView) -> Vec<Point> {
    let mut pts: Vec<Point> = view
        .point_indices()
        .into_iter()
        .map(|i| view.sample.points[i])
        .collect();
    for i in view.part_indices() {
        pts.extend(view.shape.parts()[i].vertices().copied());
    }
    pts
}

pub fn check_stability(view: &ShapeView) -> bool {
    let (Some(com), Some(bbox)) = (center_of_mass(view), view.bbox()) else {
        return false;
    };
    is_stable(&stability_points(view), &com, bbox.diagonal())
}
