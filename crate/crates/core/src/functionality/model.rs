use std::fmt;

use serde::{Deserialize, Serialize};

use super::sampling::ShapeView;
use crate::error::{Error, Result};
use crate::shape::{Aabb, Label, Shape};

/// Per-point weights of one proto-patch over a view's sample points, in the
/// order of [`ShapeView::point_indices`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightField {
    pub patch_label: Label,
    pub weights: Vec<f64>,
}

/// Functionality model of one category.
///
/// Implementations must be deterministic and safe to share across threads.
pub trait CategoryModel: Send + Sync + fmt::Debug {
    fn category(&self) -> &str;

    fn proto_patch_labels(&self) -> &[Label];

    /// One field per proto-patch; at every point the weights sum to 1.
    fn weight_fields(&self, view: &ShapeView) -> Vec<WeightField>;

    /// Higher means more functional. Finite for any non-empty view.
    fn raw_score(&self, view: &ShapeView) -> f64;

    fn distributions(&self) -> &ScoreDistributions;

    /// Region that must stay free of other parts for `label`, given the
    /// bounding box of the labeled patch. `None` if the model has no
    /// functional space for that label.
    fn functional_space(&self, label: &Label, patch: &Aabb, full_shape: &Shape) -> Option<Aabb>;
}

/// Empirical score distributions of training shapes inside and outside the
/// category, with weights proportional to their counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistributions {
    inside: Vec<f64>,
    outside: Vec<f64>,
    pub w1: f64,
    pub w2: f64,
}

impl ScoreDistributions {
    pub fn new(mut inside: Vec<f64>, mut outside: Vec<f64>) -> Result<ScoreDistributions> {
        if inside.is_empty() || outside.is_empty() {
            return Err(Error::InvalidConfig(
                "score distributions need inside and outside training scores".into(),
            ));
        }
        if inside.iter().chain(&outside).any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig("training scores must be finite".into()));
        }
        inside.sort_by(f64::total_cmp);
        outside.sort_by(f64::total_cmp);
        let total = (inside.len() + outside.len()) as f64;
        let w1 = inside.len() as f64 / total;
        Ok(ScoreDistributions {
            w1,
            w2: 1.0 - w1,
            inside,
            outside,
        })
    }

    pub fn inside(&self) -> &[f64] {
        &self.inside
    }

    pub fn outside(&self) -> &[f64] {
        &self.outside
    }

    /// D1(x) = P(inside ≤ x).
    pub fn d1(&self, x: f64) -> f64 {
        ecdf(&self.inside, x)
    }

    /// D2(x) = P(outside ≤ x).
    pub fn d2(&self, x: f64) -> f64 {
        ecdf(&self.outside, x)
    }
}

/// Fraction of `sorted` values ≤ `x`.
pub fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

/// `w1·D1(raw) + w2·D2(raw)`.
pub fn normalize_score(dist: &ScoreDistributions, raw: f64) -> f64 {
    let (p1, p2) = (dist.d1(raw), dist.d2(raw));
    if p1 == 1.0 && p2 == 1.0 {
        return 1.0;
    }
    dist.w1 * p1 + dist.w2 * p2
}
