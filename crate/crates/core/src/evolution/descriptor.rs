//! Reduced light-field descriptor: binary orthographic silhouettes from ten
//! fixed viewpoints, compared view by view without rotation search.

use crate::shape::{Point, Shape, Vector};

pub const VIEW_COUNT: usize = 10;
pub const RESOLUTION: usize = 64;
const WORDS: usize = RESOLUTION * RESOLUTION / 64;

/// One viewing direction per antipodal pair of dodecahedron vertices.
pub fn view_directions() -> [Vector; VIEW_COUNT] {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let inv = 1.0 / phi;
    let v = [
        Vector::new(1.0, 1.0, 1.0),
        Vector::new(1.0, 1.0, -1.0),
        Vector::new(1.0, -1.0, 1.0),
        Vector::new(1.0, -1.0, -1.0),
        Vector::new(0.0, inv, phi),
        Vector::new(0.0, inv, -phi),
        Vector::new(inv, phi, 0.0),
        Vector::new(inv, -phi, 0.0),
        Vector::new(phi, 0.0, inv),
        Vector::new(phi, 0.0, -inv),
    ];
    v.map(|d| d.normalize())
}

/// Orthonormal image axes for a view direction.
fn image_axes(d: &Vector) -> (Vector, Vector) {
    let helper = if d.z.abs() < 0.9 { Vector::z() } else { Vector::x() };
    let u = helper.cross(d).normalize();
    let v = d.cross(&u);
    (u, v)
}

/// A `res`×`res` silhouette of `shape` seen along `dir`, row-major, after
/// centering the shape and scaling its longest extent to 1. The image
/// covers a disc of radius √3/2, enough for the unit box in any direction.
pub fn render_silhouette(shape: &Shape, dir: &Vector, res: usize) -> Vec<bool> {
    let bbox = shape.bbox();
    let center = bbox.center();
    let extent = bbox.extents().max();
    let scale = if extent > 0.0 { 1.0 / extent } else { 1.0 };
    let (u, v) = image_axes(dir);
    let half = 3f64.sqrt() / 2.0;
    let to_pixel = |p: &Point| {
        let q = (p - center) * scale;
        let x = (q.dot(&u) + half) / (2.0 * half) * res as f64;
        let y = (q.dot(&v) + half) / (2.0 * half) * res as f64;
        (x, y)
    };
    let mut image = vec![false; res * res];
    for part in shape.parts() {
        for t in part.triangles() {
            let [a, b, c] = [to_pixel(&t[0]), to_pixel(&t[1]), to_pixel(&t[2])];
            fill_triangle(&mut image, res, a, b, c);
        }
    }
    image
}

fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Sets pixels whose centers lie inside or on the triangle; degenerate
/// (edge-on) triangles cover nothing, their neighbors cover the area.
fn fill_triangle(image: &mut [bool], res: usize, a: (f64, f64), b: (f64, f64), c: (f64, f64)) {
    let area = edge(a, b, c);
    if area == 0.0 {
        return;
    }
    let lo = |x: f64| (x - 0.5).ceil().max(0.0) as usize;
    let hi = |x: f64| ((x - 0.5).floor().min(res as f64 - 1.0)).max(-1.0);
    let (x0, x1) = (lo(a.0.min(b.0).min(c.0)), hi(a.0.max(b.0).max(c.0)));
    let (y0, y1) = (lo(a.1.min(b.1).min(c.1)), hi(a.1.max(b.1).max(c.1)));
    if x1 < 0.0 || y1 < 0.0 {
        return;
    }
    let sign = area.signum();
    for y in y0..=y1 as usize {
        for x in x0..=x1 as usize {
            let p = (x as f64 + 0.5, y as f64 + 0.5);
            if sign * edge(a, b, p) >= 0.0 && sign * edge(b, c, p) >= 0.0 && sign * edge(c, a, p) >= 0.0 {
                image[y * res + x] = true;
            }
        }
    }
}

/// Packed silhouettes of all views.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeDescriptor {
    views: Vec<[u64; WORDS]>,
}

impl ShapeDescriptor {
    pub fn view(&self, i: usize) -> Vec<bool> {
        (0..RESOLUTION * RESOLUTION)
            .map(|k| self.views[i][k / 64] >> (k % 64) & 1 == 1)
            .collect()
    }

    /// Mean over views of the fraction of differing pixels.
    pub fn distance(&self, other: &ShapeDescriptor) -> f64 {
        let total: u32 = self
            .views
            .iter()
            .zip(&other.views)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum::<u32>())
            .sum();
        total as f64 / (VIEW_COUNT * RESOLUTION * RESOLUTION) as f64
    }
}

pub fn descriptor(shape: &Shape) -> ShapeDescriptor {
    let views = view_directions()
        .iter()
        .map(|d| {
            let mut words = [0u64; WORDS];
            for (k, &on) in render_silhouette(shape, d, RESOLUTION).iter().enumerate() {
                if on {
                    words[k / 64] |= 1 << (k % 64);
                }
            }
            words
        })
        .collect();
    ShapeDescriptor { views }
}

/// Symmetric matrix of descriptor distances.
pub fn distance_matrix(descriptors: &[ShapeDescriptor]) -> Vec<Vec<f64>> {
    let n = descriptors.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let x = descriptors[i].distance(&descriptors[j]);
            d[i][j] = x;
            d[j][i] = x;
        }
    }
    d
}
