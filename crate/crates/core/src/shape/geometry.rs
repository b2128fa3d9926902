//! Small geometric toolkit: bounding boxes, triangle proximity queries and
//! triangle/box overlap.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

pub type Point = Point3<f64>;
pub type Vector = Vector3<f64>;
pub type Triangle = [Point; 3];

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn new(min: Point, max: Point) -> Self {
        debug_assert!(min.iter().zip(max.iter()).all(|(a, b)| a <= b));
        Aabb { min, max }
    }

    pub fn from_points<'a, I>(points: I) -> Option<Aabb>
    where
        I: IntoIterator<Item = &'a Point>,
    {
        let mut iter = points.into_iter();
        let first = *iter.next()?;
        let mut bbox = Aabb { min: first, max: first };
        for p in iter {
            bbox.grow(p);
        }
        Some(bbox)
    }

    pub fn grow(&mut self, p: &Point) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        let mut out = *self;
        out.grow(&other.min);
        out.grow(&other.max);
        out
    }

    pub fn center(&self) -> Point {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extents(&self) -> Vector {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extents().norm()
    }

    pub fn volume(&self) -> f64 {
        let e = self.extents();
        e.x * e.y * e.z
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.min[k] && other.max[k] <= self.max[k])
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        (0..3).all(|k| self.min[k] <= p[k] && p[k] <= self.max[k])
    }

    pub fn intersection(&self, other: &Aabb) -> Option<Aabb> {
        let mut min = self.min;
        let mut max = self.max;
        for k in 0..3 {
            min[k] = min[k].max(other.min[k]);
            max[k] = max[k].min(other.max[k]);
            if min[k] > max[k] {
                return None;
            }
        }
        Some(Aabb { min, max })
    }

    /// Volumetric intersection over union; 0 when the union has no volume.
    pub fn iou(&self, other: &Aabb) -> f64 {
        let inter = self.intersection(other).map_or(0.0, |b| b.volume());
        let union = self.volume() + other.volume() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Euclidean gap between two boxes, zero when they overlap or touch.
    pub fn gap(&self, other: &Aabb) -> f64 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let d = (other.min[k] - self.max[k]).max(self.min[k] - other.max[k]).max(0.0);
            d2 += d * d;
        }
        d2.sqrt()
    }

    /// Index of the longest axis, lowest index on ties.
    pub fn longest_axis(&self) -> usize {
        let e = self.extents();
        let mut best = 0;
        for k in 1..3 {
            if e[k] > e[best] {
                best = k;
            }
        }
        best
    }
}

pub fn triangle_normal(t: &Triangle) -> Vector {
    let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
    let len = n.norm();
    if len > 0.0 {
        n / len
    } else {
        Vector::z()
    }
}

pub fn triangle_area(t: &Triangle) -> f64 {
    0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm()
}

/// Closest point to `p` on triangle `t` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Point, t: &Triangle) -> Point {
    let (a, b, c) = (t[0], t[1], t[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let denom = d1 - d3;
        let v = if denom != 0.0 { d1 / denom } else { 0.0 };
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let denom = d2 - d6;
        let w = if denom != 0.0 { d2 / denom } else { 0.0 };
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let denom = (d4 - d3) + (d5 - d6);
        let w = if denom != 0.0 { (d4 - d3) / denom } else { 0.0 };
        return b + (c - b) * w;
    }
    let sum = va + vb + vc;
    if sum == 0.0 {
        // Degenerate triangle: fall back to the closest of its edges.
        let candidates = [
            closest_points_segments(p, p, &a, &b).1,
            closest_points_segments(p, p, &b, &c).1,
            closest_points_segments(p, p, &c, &a).1,
        ];
        return candidates
            .into_iter()
            .min_by(|x, y| (x - p).norm_squared().total_cmp(&(y - p).norm_squared()))
            .unwrap();
    }
    let denom = 1.0 / sum;
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Closest points between segments `p1q1` and `p2q2`.
pub fn closest_points_segments(p1: &Point, q1: &Point, p2: &Point, q2: &Point) -> (Point, Point) {
    const EPS: f64 = 1e-300;
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a <= EPS && e <= EPS {
        return (*p1, *p2);
    }
    if a <= EPS {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    (p1 + d1 * s, p2 + d2 * t)
}

/// Intersection point of segment `pq` with triangle `t`, if they cross.
/// Segments parallel to the triangle plane report no intersection. Hits on
/// the boundary (within a relative 1e-9) count, so exactly touching parts
/// are detected regardless of rounding.
pub fn segment_triangle_intersection(p: &Point, q: &Point, t: &Triangle) -> Option<Point> {
    const TOL: f64 = 1e-9;
    let dir = q - p;
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if scale == 0.0 || det.abs() <= 1e-12 * scale {
        return None;
    }
    let inv = 1.0 / det;
    let s = p - t[0];
    let u = inv * s.dot(&h);
    if !(-TOL..=1.0 + TOL).contains(&u) {
        return None;
    }
    let qv = s.cross(&e1);
    let v = inv * dir.dot(&qv);
    if v < -TOL || u + v > 1.0 + TOL {
        return None;
    }
    let along = inv * e2.dot(&qv);
    if !(-TOL..=1.0 + TOL).contains(&along) {
        return None;
    }
    Some(p + dir * along.clamp(0.0, 1.0))
}

/// Closest point pair between two triangles: `(on_a, on_b, distance)`.
///
/// Candidates are visited in a fixed order and a later candidate replaces
/// the current best only when it is closer by more than `tie_tolerance`, so
/// near-ties resolve to the earliest candidate.
pub fn triangle_triangle_closest(a: &Triangle, b: &Triangle, tie_tolerance: f64) -> (Point, Point, f64) {
    for i in 0..3 {
        if let Some(x) = segment_triangle_intersection(&a[i], &a[(i + 1) % 3], b) {
            return (x, x, 0.0);
        }
    }
    for i in 0..3 {
        if let Some(x) = segment_triangle_intersection(&b[i], &b[(i + 1) % 3], a) {
            return (x, x, 0.0);
        }
    }
    let mut best: Option<(Point, Point, f64)> = None;
    let mut consider = |pa: Point, pb: Point| {
        let d = (pa - pb).norm();
        match best {
            Some((_, _, bd)) if d >= bd - tie_tolerance => {}
            _ => best = Some((pa, pb, d)),
        }
    };
    for v in a {
        consider(*v, closest_point_on_triangle(v, b));
    }
    for v in b {
        consider(closest_point_on_triangle(v, a), *v);
    }
    for i in 0..3 {
        for j in 0..3 {
            let (pa, pb) = closest_points_segments(&a[i], &a[(i + 1) % 3], &b[j], &b[(j + 1) % 3]);
            consider(pa, pb);
        }
    }
    best.expect("candidates are never empty")
}

/// Separating-axis test between a triangle and a box (closed sets).
pub fn triangle_intersects_aabb(t: &Triangle, bbox: &Aabb) -> bool {
    let c = bbox.center();
    let h = bbox.extents() * 0.5;
    let v = [t[0] - c, t[1] - c, t[2] - c];
    let f = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    let axes = [Vector::x(), Vector::y(), Vector::z()];

    let separated = |axis: &Vector| -> bool {
        if axis.norm_squared() < 1e-24 {
            return false;
        }
        let p: Vec<f64> = v.iter().map(|x| x.dot(axis)).collect();
        let r = h.x * axis.x.abs() + h.y * axis.y.abs() + h.z * axis.z.abs();
        let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        lo > r || hi < -r
    };

    for e in &axes {
        if separated(e) {
            return false;
        }
    }
    let normal = f[0].cross(&f[1]);
    if separated(&normal) {
        return false;
    }
    for e in &axes {
        for edge in &f {
            if separated(&e.cross(edge)) {
                return false;
            }
        }
    }
    true
}
