use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::shape::geometry::{triangle_area, triangle_normal};
use crate::shape::{Aabb, PartId, Point, Shape, Vector};

/// Fewest samples any part receives.
pub const MIN_SAMPLES_PER_PART: usize = 16;

/// Area-weighted surface samples; `area[i]` is the surface area point `i`
/// stands for.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSample {
    pub points: Vec<Point>,
    pub normals: Vec<Vector>,
    pub area: Vec<f64>,
    pub part: Vec<usize>,
}

impl SurfaceSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Splits `n` samples over parts: each part gets [`MIN_SAMPLES_PER_PART`],
/// the rest proportionally to area (largest remainder, lower index first).
fn allocate(areas: &[f64], n: usize) -> Vec<usize> {
    let floor = MIN_SAMPLES_PER_PART.min(n / areas.len().max(1));
    let mut counts = vec![floor; areas.len()];
    let rest = n.saturating_sub(floor * areas.len());
    let total: f64 = areas.iter().sum();
    if rest == 0 {
        return counts;
    }
    let share: Vec<f64> = if total > 0.0 {
        areas.iter().map(|a| a / total * rest as f64).collect()
    } else {
        vec![rest as f64 / areas.len() as f64; areas.len()]
    };
    let mut given = 0;
    for (c, s) in counts.iter_mut().zip(&share) {
        *c += s.floor() as usize;
        given += s.floor() as usize;
    }
    let mut order: Vec<usize> = (0..areas.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = share[i] - share[i].floor();
        let fj = share[j] - share[j].floor();
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    for &i in order.iter().cycle().take(rest - given) {
        counts[i] += 1;
    }
    counts
}

/// Deterministic uniform surface sampling of about `n` points; each part is
/// sampled from its own generator seeded by its index.
pub fn sample_surface(shape: &Shape, n: usize) -> SurfaceSample {
    let areas: Vec<f64> = shape.parts().iter().map(|p| p.area()).collect();
    let counts = allocate(&areas, n);
    let mut out = SurfaceSample {
        points: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        area: Vec::with_capacity(n),
        part: Vec::with_capacity(n),
    };
    for (pi, (part, &count)) in shape.parts().iter().zip(&counts).enumerate() {
        if count == 0 {
            continue;
        }
        let tri_areas: Vec<f64> = part.triangles().iter().map(triangle_area).collect();
        let total: f64 = tri_areas.iter().sum();
        let mut cdf = Vec::with_capacity(tri_areas.len());
        let mut acc = 0.0;
        for a in &tri_areas {
            acc += if total > 0.0 {
                a / total
            } else {
                1.0 / tri_areas.len() as f64
            };
            cdf.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(pi as u64);
        for _ in 0..count {
            let r: f64 = rng.random::<f64>() * acc;
            let ti = cdf.partition_point(|&c| c < r).min(cdf.len() - 1);
            let t = &part.triangles()[ti];
            let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            let p = t[0] + (t[1] - t[0]) * u + (t[2] - t[0]) * v;
            out.points.push(p);
            out.normals.push(triangle_normal(t));
            out.area.push(total / count as f64);
            out.part.push(pi);
        }
    }
    out
}

/// A subset of a shape's parts together with the shape's surface sample.
#[derive(Clone, Copy, Debug)]
pub struct ShapeView<'a> {
    pub shape: &'a Shape,
    pub sample: &'a SurfaceSample,
    /// Inclusion flag per part, indexed like `shape.parts()`.
    pub mask: &'a [bool],
}

impl<'a> ShapeView<'a> {
    pub fn new(shape: &'a Shape, sample: &'a SurfaceSample, mask: &'a [bool]) -> ShapeView<'a> {
        assert_eq!(mask.len(), shape.parts().len(), "mask must cover every part");
        ShapeView { shape, sample, mask }
    }

    pub fn part_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn part_ids(&self) -> BTreeSet<PartId> {
        self.part_indices()
            .map(|i| self.shape.parts()[i].id().clone())
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    /// Indices into the sample of points on included parts.
    pub fn point_indices(&self) -> Vec<usize> {
        (0..self.sample.len())
            .filter(|&i| self.mask[self.sample.part[i]])
            .collect()
    }

    pub fn bbox(&self) -> Option<Aabb> {
        self.part_indices()
            .map(|i| *self.shape.parts()[i].bbox())
            .reduce(|a, b| a.union(&b))
    }
}

/// Mask selecting the parts in `ids`.
pub fn mask_of(shape: &Shape, ids: &BTreeSet<PartId>) -> Vec<bool> {
    shape.parts().iter().map(|p| ids.contains(p.id())).collect()
}
