use serde::{Deserialize, Serialize};

use crate::constants::{PROPORTION_FACTOR, REVERT_FRACTION};
use crate::error::{Error, Result};
use crate::shape::{Aabb, Part, Point, Vector};

/// Per-axis scale followed by a translation: `p' = scale ⊙ p + translation`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub scale: Vector,
    pub translation: Vector,
}

impl SimilarityTransform {
    pub fn identity() -> SimilarityTransform {
        SimilarityTransform {
            scale: Vector::repeat(1.0),
            translation: Vector::zeros(),
        }
    }

    pub fn translation(t: Vector) -> SimilarityTransform {
        SimilarityTransform {
            scale: Vector::repeat(1.0),
            translation: t,
        }
    }

    pub fn apply(&self, p: &Point) -> Point {
        Point::from(self.scale.component_mul(&p.coords) + self.translation)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &SimilarityTransform) -> SimilarityTransform {
        SimilarityTransform {
            scale: next.scale.component_mul(&self.scale),
            translation: next.scale.component_mul(&self.translation) + next.translation,
        }
    }

    /// Transforms the geometry and accumulates the scale on the part.
    pub fn apply_part(&self, part: &Part) -> Part {
        let scale = part.scale().component_mul(&self.scale);
        part.map_points(|p| self.apply(p)).with_scale(scale)
    }
}

/// Aligns bbox centers and scales uniformly so the source's longest axis
/// matches the destination's extent on that axis.
pub fn initial_alignment(src: &Aabb, dst: &Aabb) -> Result<SimilarityTransform> {
    let axis = src.longest_axis();
    let src_extent = src.extents()[axis];
    let dst_extent = dst.extents()[axis];
    if src_extent.is_nan() || src_extent <= 0.0 || dst_extent.is_nan() || dst_extent <= 0.0 {
        return Err(Error::DegenerateBBox(format!(
            "extent on axis {axis}: source {src_extent}, destination {dst_extent}"
        )));
    }
    let s = dst_extent / src_extent;
    Ok(SimilarityTransform {
        scale: Vector::repeat(s),
        translation: dst.center().coords - src.center().coords * s,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub source_index: usize,
    pub target_index: usize,
    pub source: Point,
    pub target: Point,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactMatch {
    pub pairs: Vec<MatchedPair>,
}

impl ContactMatch {
    pub fn n(&self) -> usize {
        self.pairs.len()
    }
}

/// Matches each source point to its nearest target and keeps the
/// `min(n_src, n_dst)` closest pairs. Ties go to the lower index.
pub fn match_contacts(src: &[Point], dst: &[Point]) -> Result<ContactMatch> {
    if src.is_empty() || dst.is_empty() {
        return Err(Error::NoContacts);
    }
    let mut pairs: Vec<MatchedPair> = src
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (j, d) = dst
                .iter()
                .enumerate()
                .map(|(j, t)| (j, (s - t).norm()))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            MatchedPair {
                source_index: i,
                target_index: j,
                source: *s,
                target: dst[j],
                distance: d,
            }
        })
        .collect();
    pairs.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.source_index.cmp(&b.source_index))
            .then(a.target_index.cmp(&b.target_index))
    });
    pairs.truncate(src.len().min(dst.len()));
    Ok(ContactMatch { pairs })
}

fn centroid<'a>(points: impl Iterator<Item = &'a Point>) -> Point {
    let mut sum = Vector::zeros();
    let mut n = 0.0;
    for p in points {
        sum += p.coords;
        n += 1.0;
    }
    Point::from(sum / n)
}

/// Translation aligning the matched centroids plus the per-axis scale about
/// the source centroid that minimises the squared contact error.
///
/// Per axis the scale is `Σ a·b / Σ a²` over source offsets `a` and target
/// offsets `b`, i.e. the `a²`-weighted mean of the per-pair scalings `b/a`.
/// Offsets shorter than `1e-6` of the point set diagonal are skipped; axes
/// without a usable positive estimate keep scale 1.
pub fn refined_alignment(m: &ContactMatch) -> SimilarityTransform {
    if m.pairs.is_empty() {
        return SimilarityTransform::identity();
    }
    let cs = centroid(m.pairs.iter().map(|p| &p.source));
    let ct = centroid(m.pairs.iter().map(|p| &p.target));
    let extent = Aabb::from_points(m.pairs.iter().flat_map(|p| [&p.source, &p.target])).map_or(0.0, |b| b.diagonal());
    let skip = 1e-6 * extent;

    let mut scale = Vector::repeat(1.0);
    for k in 0..3 {
        let (mut num, mut den) = (0.0, 0.0);
        for p in &m.pairs {
            let a = p.source[k] - cs[k];
            if a.abs() < skip || a == 0.0 {
                continue;
            }
            num += a * (p.target[k] - ct[k]);
            den += a * a;
        }
        let s = num / den;
        if den > 0.0 && s.is_finite() && s > 0.0 {
            scale[k] = s;
        }
    }
    SimilarityTransform {
        scale,
        translation: ct.coords - scale.component_mul(&cs.coords),
    }
}

/// Distance of each matched source point, after `t`, to its target.
pub fn residuals(m: &ContactMatch, t: &SimilarityTransform) -> Vec<f64> {
    m.pairs.iter().map(|p| (t.apply(&p.source) - p.target).norm()).collect()
}

pub fn sum_squared_error(m: &ContactMatch, t: &SimilarityTransform) -> f64 {
    residuals(m, t).iter().map(|r| r * r).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementChoice {
    Refined,
    Initial,
}

/// Keeps the refined placement only if every residual is within
/// `REVERT_FRACTION · diag` (inclusive).
pub fn accept_or_revert(residuals: &[f64], diag: f64) -> PlacementChoice {
    let limit = REVERT_FRACTION * diag;
    if residuals.iter().all(|&r| r <= limit) {
        PlacementChoice::Refined
    } else {
        PlacementChoice::Initial
    }
}

/// Rescales y or z about the bbox center to match x when a labeled part's
/// cumulative scale ratio exceeds [`PROPORTION_FACTOR`] either way.
pub fn restore_proportions(part: &Part) -> Part {
    if part.label().is_none() {
        return part.clone();
    }
    let s = part.scale();
    let mut fix = Vector::repeat(1.0);
    for k in 1..3 {
        let ratio = s[k] / s.x;
        if !(1.0 / PROPORTION_FACTOR..=PROPORTION_FACTOR).contains(&ratio) {
            fix[k] = s.x / s[k];
        }
    }
    if fix == Vector::repeat(1.0) {
        return part.clone();
    }
    let c = part.bbox().center();
    let t = SimilarityTransform {
        scale: fix,
        translation: c.coords - fix.component_mul(&c.coords),
    };
    t.apply_part(part)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::cuboid;
    use proptest::prelude::*;

    fn bx(min: [f64; 3], max: [f64; 3]) -> Aabb {
        Aabb::new(Point::from(min), Point::from(max))
    }

    #[test]
    fn initial_identity() {
        let b = bx([0.0, 1.0, 2.0], [3.0, 4.0, 5.0]);
        let t = initial_alignment(&b, &b).unwrap();
        assert_eq!(t.scale, Vector::repeat(1.0));
        assert!(t.translation.norm() < 1e-15);
    }

    #[test]
    fn initial_forced_case() {
        let src = bx([-1.0, -0.5, -0.5], [1.0, 0.5, 0.5]);
        let dst = bx([-1.0, -0.5, -0.5], [3.0, 0.5, 0.5]);
        let t = initial_alignment(&src, &dst).unwrap();
        assert_eq!(t.scale, Vector::repeat(2.0));
        assert_eq!(t.translation, Vector::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn initial_degenerate() {
        let flat = bx([0.0, 0.0, 0.0], [0.0, 0.0, 0.0]);
        let ok = bx([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]);
        assert!(matches!(initial_alignment(&flat, &ok), Err(Error::DegenerateBBox(_))));
        let thin = bx([0.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        let wide = bx([0.0, 0.0, 0.0], [1.0, 1.0, 0.0]);
        assert!(matches!(initial_alignment(&thin, &wide), Err(Error::DegenerateBBox(_))));
    }

    #[test]
    fn match_keeps_min_count() {
        let src = [Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0)];
        let dst = [
            Point::new(0.1, 0.0, 0.0),
            Point::new(5.0, 0.0, 0.0),
            Point::new(0.9, 0.0, 0.0),
            Point::new(-3.0, 0.0, 0.0),
        ];
        let m = match_contacts(&src, &dst).unwrap();
        assert_eq!(m.n(), 2);
        let m = match_contacts(&dst, &src).unwrap();
        assert_eq!(m.n(), 2);
        let mut kept: Vec<usize> = m.pairs.iter().map(|p| p.source_index).collect();
        kept.sort();
        assert_eq!(kept, [0, 2]);
        assert!(matches!(match_contacts(&[], &src), Err(Error::NoContacts)));
    }

    #[test]
    fn match_coincident() {
        let pts = [
            Point::new(0.0, 1.0, 2.0),
            Point::new(3.0, 1.0, 0.0),
            Point::new(-1.0, 0.0, 0.0),
        ];
        let m = match_contacts(&pts, &pts).unwrap();
        assert!(m.pairs.iter().all(|p| p.distance == 0.0));
    }

    #[test]
    fn refined_identity_and_single_pair() {
        let pts = [Point::new(0.0, 1.0, 2.0), Point::new(3.0, 1.0, 0.0)];
        let m = match_contacts(&pts, &pts).unwrap();
        let t = refined_alignment(&m);
        assert!((t.scale - Vector::repeat(1.0)).norm() < 1e-15);
        assert!(t.translation.norm() < 1e-15);

        let m = match_contacts(&[Point::new(1.0, 0.0, 0.0)], &[Point::new(2.0, 0.0, 0.0)]).unwrap();
        let t = refined_alignment(&m);
        assert_eq!(t.scale, Vector::repeat(1.0));
        assert_eq!(t.translation, Vector::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn revert_threshold() {
        assert_eq!(accept_or_revert(&[0.0, 0.0], 1.0), PlacementChoice::Refined);
        assert_eq!(accept_or_revert(&[0.0, 0.06 * 2.0], 2.0), PlacementChoice::Initial);
        assert_eq!(accept_or_revert(&[0.05 * 2.0], 2.0), PlacementChoice::Refined);
    }

    fn labeled_box() -> Part {
        cuboid("p", Point::origin(), Point::new(1.0, 1.0, 1.0), Some("sitting"))
    }

    #[test]
    fn restore_thresholds() {
        let unit = labeled_box();
        assert_eq!(restore_proportions(&unit), unit);

        let stretched = SimilarityTransform {
            scale: Vector::new(1.0, 4.0, 1.0),
            translation: Vector::zeros(),
        }
        .apply_part(&unit);
        let restored = restore_proportions(&stretched);
        assert_eq!(restored.scale(), Vector::repeat(1.0));
        assert!((restored.bbox().extents() - Vector::repeat(1.0)).norm() < 1e-12);
        assert!((restored.bbox().center() - stretched.bbox().center()).norm() < 1e-12);

        let mild = SimilarityTransform {
            scale: Vector::new(1.0, 2.9, 1.0),
            translation: Vector::zeros(),
        }
        .apply_part(&unit);
        assert_eq!(restore_proportions(&mild), mild);

        let squashed = SimilarityTransform {
            scale: Vector::new(1.0, 1.0, 0.25),
            translation: Vector::zeros(),
        }
        .apply_part(&unit);
        assert_eq!(restore_proportions(&squashed).scale(), Vector::repeat(1.0));

        let unlabeled = stretched.clone().with_label(None);
        assert_eq!(restore_proportions(&unlabeled), unlabeled);
    }

    #[test]
    fn composition_matches_sequential_application() {
        let a = SimilarityTransform {
            scale: Vector::new(2.0, 0.5, 1.5),
            translation: Vector::new(1.0, -2.0, 0.25),
        };
        let b = SimilarityTransform {
            scale: Vector::new(0.3, 4.0, 1.0),
            translation: Vector::new(-0.5, 0.0, 3.0),
        };
        let p = Point::new(0.7, -1.1, 2.3);
        assert!((a.then(&b).apply(&p) - b.apply(&a.apply(&p))).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn initial_alignment_centers_and_extents(
            c1 in prop::array::uniform3(-5.0f64..5.0), e1 in prop::array::uniform3(0.1f64..3.0),
            c2 in prop::array::uniform3(-5.0f64..5.0), e2 in prop::array::uniform3(0.1f64..3.0),
        ) {
            let make = |c: [f64; 3], e: [f64; 3]| {
                let c = Point::from(c);
                let h = Vector::from(e) * 0.5;
                Aabb::new(c - h, c + h)
            };
            let (src, dst) = (make(c1, e1), make(c2, e2));
            let t = initial_alignment(&src, &dst).unwrap();
            let moved = Aabb::from_points([t.apply(&src.min), t.apply(&src.max)].iter()).unwrap();
            prop_assert!((moved.center() - dst.center()).norm() < 1e-9);
            let k = src.longest_axis();
            prop_assert!((moved.extents()[k] - dst.extents()[k]).abs() < 1e-9);
            prop_assert!(t.scale.x == t.scale.y && t.scale.y == t.scale.z);
        }

        #[test]
        fn restore_is_idempotent(sx in 0.1f64..5.0, sy in 0.1f64..5.0, sz in 0.1f64..5.0) {
            let part = SimilarityTransform { scale: Vector::new(sx, sy, sz), translation: Vector::zeros() }
                .apply_part(&labeled_box());
            let once = restore_proportions(&part);
            let twice = restore_proportions(&once);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn refined_never_worse_than_identity(
            pts in prop::collection::vec((prop::array::uniform3(-2.0f64..2.0), prop::array::uniform3(-2.0f64..2.0)), 1..7)
        ) {
            let src: Vec<Point> = pts.iter().map(|p| Point::from(p.0)).collect();
            let dst: Vec<Point> = pts.iter().map(|p| Point::from(p.1)).collect();
            let m = match_contacts(&src, &dst).unwrap();
            let refined = sum_squared_error(&m, &refined_alignment(&m));
            let identity = sum_squared_error(&m, &SimilarityTransform::identity());
            prop_assert!(refined <= identity * (1.0 + 1e-12) + 1e-12);
        }
    }
}
