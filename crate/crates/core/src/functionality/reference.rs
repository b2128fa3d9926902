//! Rule-based category models configured from JSON.
//!
//! Each proto-patch is a soft geometric predicate over sample points: a
//! height band above the view's lowest point, a cone of admissible
//! normals, and hard ranges on the height and area of the owning part.
//! The raw score is the importance-weighted coverage of the required
//! patches, damped by the share of surface no patch explains.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::model::{CategoryModel, ScoreDistributions, WeightField};
use super::sampling::{sample_surface, ShapeView, SurfaceSample};
use crate::constants::{DEFAULT_SAMPLE_COUNT, LABEL_THRESHOLD};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::shape::{Aabb, Label, Point, Shape, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalCone {
    pub axis: [f64; 3],
    /// Admissible angle range to `axis`, in degrees.
    pub angle: [f64; 2],
    #[serde(default)]
    pub two_sided: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    pub label: Label,
    #[serde(default = "one")]
    pub importance: f64,
    #[serde(default = "yes")]
    pub required: bool,
    /// Area at which coverage saturates.
    #[serde(default = "one")]
    pub min_area: f64,
    /// Band of heights above the lowest point of the view.
    #[serde(default)]
    pub height: Option<[f64; 2]>,
    #[serde(default)]
    pub normal: Option<NormalCone>,
    #[serde(default)]
    pub part_height: Option<[f64; 2]>,
    #[serde(default)]
    pub part_area: Option<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

/// Clearance box extruded from a patch by `factor` times its smaller
/// horizontal extent, shrunk laterally by `inset` and lifted off the patch
/// by `gap` (a fraction of the full shape diagonal).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub direction: Direction,
    pub factor: f64,
    #[serde(default = "default_inset")]
    pub inset: f64,
    #[serde(default = "default_gap")]
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingFixtures {
    pub inside: Vec<String>,
    pub outside: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingScores {
    pub inside: Vec<f64>,
    pub outside: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub category: String,
    pub patches: Vec<PatchSpec>,
    #[serde(default = "default_height_softness")]
    pub height_softness: f64,
    #[serde(default = "default_angle_softness")]
    pub angle_softness: f64,
    #[serde(default)]
    pub clutter_penalty: f64,
    #[serde(default)]
    pub functional_spaces: BTreeMap<Label, SpaceSpec>,
    /// Fixture ids scored for the normalization distributions. Defaults to
    /// the fixtures of the category against all others.
    #[serde(default)]
    pub training_fixtures: Option<TrainingFixtures>,
    /// Precomputed training scores; take precedence over fixtures.
    #[serde(default)]
    pub training_scores: Option<TrainingScores>,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_inset() -> f64 {
    0.1
}

fn default_gap() -> f64 {
    0.005
}

fn default_height_softness() -> f64 {
    0.05
}

fn default_angle_softness() -> f64 {
    10.0
}

impl ModelConfig {
    pub fn from_json(text: &str, source: &str) -> Result<ModelConfig> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("{source}: {e}")))
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("model {}: {msg}", self.category)));
        if self.category.is_empty() {
            return bad("empty category".into());
        }
        if self.patches.is_empty() {
            return bad("no proto-patches".into());
        }
        let mut seen = BTreeSet::new();
        for p in &self.patches {
            if !seen.insert(&p.label) {
                return bad(format!("duplicate patch label {}", p.label));
            }
            if !(p.importance.is_finite() && p.importance >= 0.0) {
                return bad(format!("patch {}: importance must be finite and non-negative", p.label));
            }
            if !(p.min_area.is_finite() && p.min_area > 0.0) {
                return bad(format!("patch {}: min_area must be positive", p.label));
            }
            for r in [p.height, p.part_height, p.part_area].into_iter().flatten() {
                if r[0].is_nan() || r[1].is_nan() || r[0] > r[1] {
                    return bad(format!("patch {}: empty range {r:?}", p.label));
                }
            }
            if let Some(n) = &p.normal {
                if Vector::from(n.axis).norm() == 0.0
                    || n.angle[0].is_nan()
                    || n.angle[1].is_nan()
                    || n.angle[0] > n.angle[1]
                {
                    return bad(format!("patch {}: invalid normal cone", p.label));
                }
            }
        }
        if !self.patches.iter().any(|p| p.required && p.importance > 0.0) {
            return bad("no required patch with positive importance".into());
        }
        if !(self.height_softness > 0.0 && self.angle_softness > 0.0) {
            return bad("softness must be positive".into());
        }
        if !(0.0..1.0).contains(&self.clutter_penalty) {
            return bad("clutter_penalty must lie in [0, 1)".into());
        }
        for (label, s) in &self.functional_spaces {
            if !(s.factor > 0.0 && (0.0..0.5).contains(&s.inset) && s.gap >= 0.0) {
                return bad(format!("functional space {label}: invalid extent"));
            }
        }
        Ok(())
    }
}

/// Linear falloff to 0 over `soft` outside `[lo, hi]`.
fn ramp(x: f64, [lo, hi]: [f64; 2], soft: f64) -> f64 {
    if x < lo {
        (1.0 - (lo - x) / soft).max(0.0)
    } else if x > hi {
        (1.0 - (x - hi) / soft).max(0.0)
    } else {
        1.0
    }
}

fn within(x: f64, [lo, hi]: [f64; 2]) -> bool {
    lo <= x && x <= hi
}

#[derive(Debug)]
pub struct ReferenceModel {
    config: ModelConfig,
    labels: Vec<Label>,
    distributions: ScoreDistributions,
}

impl ReferenceModel {
    pub fn from_config(config: ModelConfig) -> Result<ReferenceModel> {
        config.validate()?;
        let labels = config.patches.iter().map(|p| p.label.clone()).collect();
        let placeholder = ScoreDistributions::new(vec![0.0], vec![0.0])?;
        let mut model = ReferenceModel {
            config,
            labels,
            distributions: placeholder,
        };
        model.distributions = match &model.config.training_scores {
            Some(t) => ScoreDistributions::new(t.inside.clone(), t.outside.clone())?,
            None => model.fixture_distributions()?,
        };
        Ok(model)
    }

    pub fn from_json(text: &str, source: &str) -> Result<ReferenceModel> {
        ReferenceModel::from_config(ModelConfig::from_json(text, source)?)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn fixture_distributions(&self) -> Result<ScoreDistributions> {
        let corpus = fixtures::corpus();
        let (inside, outside): (Vec<&Shape>, Vec<&Shape>) = match &self.config.training_fixtures {
            Some(t) => {
                let pick = |ids: &[String]| -> Result<Vec<&Shape>> {
                    ids.iter()
                        .map(|id| {
                            corpus.iter().find(|s| s.id() == id).ok_or_else(|| {
                                Error::InvalidConfig(format!("model {}: unknown fixture {id}", self.config.category))
                            })
                        })
                        .collect()
                };
                (pick(&t.inside)?, pick(&t.outside)?)
            }
            None => corpus
                .iter()
                .partition(|s| s.categories().contains(&self.config.category)),
        };
        let score = |s: &&Shape| {
            let sample = sample_surface(s, DEFAULT_SAMPLE_COUNT);
            let mask = vec![true; s.parts().len()];
            self.raw_score(&ShapeView::new(s, &sample, &mask))
        };
        ScoreDistributions::new(inside.iter().map(score).collect(), outside.iter().map(score).collect())
    }

    /// Predicate value of every patch at every point of the view, as
    /// `(point index, memberships)` in point order.
    fn memberships(&self, view: &ShapeView) -> Vec<(usize, Vec<f64>)> {
        let Some(bbox) = view.bbox() else {
            return Vec::new();
        };
        let zmin = bbox.min.z;
        let parts = view.shape.parts();
        // Hard per-part gates, indexed [part][patch].
        let gates: Vec<Vec<bool>> = parts
            .iter()
            .map(|part| {
                let h = part.bbox().extents().z;
                let area = part.area();
                self.config
                    .patches
                    .iter()
                    .map(|p| p.part_height.is_none_or(|r| within(h, r)) && p.part_area.is_none_or(|r| within(area, r)))
                    .collect()
            })
            .collect();
        view.point_indices()
            .into_iter()
            .map(|i| {
                let point = &view.sample.points[i];
                let normal = &view.sample.normals[i];
                let part = view.sample.part[i];
                let a = self
                    .config
                    .patches
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        if !gates[part][k] {
                            return 0.0;
                        }
                        let mut m = 1.0;
                        if let Some(band) = p.height {
                            m *= ramp(point.z - zmin, band, self.config.height_softness);
                        }
                        if let Some(cone) = &p.normal {
                            m *= ramp(angle_to(normal, cone), cone.angle, self.config.angle_softness);
                        }
                        m
                    })
                    .collect();
                (i, a)
            })
            .collect()
    }
}

fn angle_to(normal: &Vector, cone: &NormalCone) -> f64 {
    let axis = Vector::from(cone.axis).normalize();
    let mut c = normal.dot(&axis).clamp(-1.0, 1.0);
    if cone.two_sided {
        c = c.abs();
    }
    c.acos().to_degrees()
}

impl CategoryModel for ReferenceModel {
    fn category(&self) -> &str {
        &self.config.category
    }

    fn proto_patch_labels(&self) -> &[Label] {
        &self.labels
    }

    fn weight_fields(&self, view: &ShapeView) -> Vec<WeightField> {
        let k = self.labels.len();
        let mut fields: Vec<WeightField> = self
            .labels
            .iter()
            .map(|l| WeightField {
                patch_label: l.clone(),
                weights: Vec::new(),
            })
            .collect();
        for (_, a) in self.memberships(view) {
            let sum: f64 = a.iter().sum();
            for (f, ak) in fields.iter_mut().zip(&a) {
                f.weights.push(if sum > 0.0 { ak / sum } else { 1.0 / k as f64 });
            }
        }
        fields
    }

    fn raw_score(&self, view: &ShapeView) -> f64 {
        let members = self.memberships(view);
        let total: f64 = members.iter().map(|(i, _)| view.sample.area[*i]).sum();
        if total <= 0.0 {
            return 0.0;
        }
        let mut coverage = vec![0.0; self.labels.len()];
        let mut unexplained = 0.0;
        for (i, a) in &members {
            let area = view.sample.area[*i];
            for (c, ak) in coverage.iter_mut().zip(a) {
                *c += area * ak;
            }
            if a.iter().all(|&x| x == 0.0) {
                unexplained += area;
            }
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (p, c) in self.config.patches.iter().zip(&coverage) {
            if p.required {
                num += p.importance * (c / p.min_area).min(1.0);
                den += p.importance;
            }
        }
        num / den * (1.0 - self.config.clutter_penalty * unexplained / total)
    }

    fn distributions(&self) -> &ScoreDistributions {
        &self.distributions
    }

    fn functional_space(&self, label: &Label, patch: &Aabb, full_shape: &Shape) -> Option<Aabb> {
        let spec = self.config.functional_spaces.get(label)?;
        let ext = patch.extents();
        let width = match ext.x.min(ext.y) {
            w if w > 0.0 => w,
            _ => ext.x.max(ext.y),
        };
        let gap = spec.gap * full_shape.bbox().diagonal();
        let height = spec.factor * width;
        let (x0, x1) = (patch.min.x + spec.inset * ext.x, patch.max.x - spec.inset * ext.x);
        let (y0, y1) = (patch.min.y + spec.inset * ext.y, patch.max.y - spec.inset * ext.y);
        Some(match spec.direction {
            Direction::Up => Aabb::new(
                Point::new(x0, y0, patch.max.z + gap),
                Point::new(x1, y1, patch.max.z + gap + height),
            ),
            Direction::Down => Aabb::new(
                Point::new(x0, y0, patch.min.z - gap - height),
                Point::new(x1, y1, patch.min.z - gap),
            ),
        })
    }
}

pub type ModelSet = Vec<Arc<dyn CategoryModel>>;

const BUILTIN: [(&str, &str); 4] = [
    ("cart.json", include_str!("../../models/cart.json")),
    ("chair.json", include_str!("../../models/chair.json")),
    ("shelf.json", include_str!("../../models/shelf.json")),
    ("table.json", include_str!("../../models/table.json")),
];

/// Shipped reference models for the fixture categories, sorted by
/// category. Built once per process.
pub fn builtin_models() -> ModelSet {
    static MODELS: OnceLock<Vec<Arc<ReferenceModel>>> = OnceLock::new();
    MODELS
        .get_or_init(|| {
            BUILTIN
                .iter()
                .map(|(name, text)| Arc::new(ReferenceModel::from_json(text, name).expect("shipped models are valid")))
                .collect()
        })
        .iter()
        .map(|m| m.clone() as Arc<dyn CategoryModel>)
        .collect()
}

/// Every `*.json` model config in `dir`, sorted by file name.
pub fn load_models(dir: &Path) -> Result<ModelSet> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidConfig(format!("no model configs in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let model = ReferenceModel::from_json(&text, &p.display().to_string())?;
            Ok(Arc::new(model) as Arc<dyn CategoryModel>)
        })
        .collect()
}

/// A surface sample of a whole shape with one model's weight fields.
#[derive(Clone, Debug)]
pub struct ProtoPatches {
    pub category: String,
    pub sample: SurfaceSample,
    pub fields: Vec<WeightField>,
}

pub fn predict_proto_patches(model: &dyn CategoryModel, shape: &Shape, n_points: usize) -> ProtoPatches {
    let sample = sample_surface(shape, n_points);
    let mask = vec![true; shape.parts().len()];
    let fields = model.weight_fields(&ShapeView::new(shape, &sample, &mask));
    ProtoPatches {
        category: model.category().to_owned(),
        sample,
        fields,
    }
}

/// Mean weight of every field over each part's sample points, indexed
/// `[part][field]` across all predictions in order.
pub fn part_weight_sums(shape: &Shape, predictions: &[ProtoPatches]) -> Vec<Vec<(Label, f64)>> {
    let n = shape.parts().len();
    let mut out = vec![Vec::new(); n];
    for pred in predictions {
        let mut counts = vec![0usize; n];
        for &p in &pred.sample.part {
            counts[p] += 1;
        }
        for field in &pred.fields {
            let mut sums = vec![0.0; n];
            for (w, &p) in field.weights.iter().zip(&pred.sample.part) {
                sums[p] += w;
            }
            for (i, s) in sums.into_iter().enumerate() {
                let mean = if counts[i] > 0 { s / counts[i] as f64 } else { 0.0 };
                out[i].push((field.patch_label.clone(), mean));
            }
        }
    }
    out
}

/// Labels each part with the proto-patch of highest in-part weight over
/// all predictions; parts whose best weight is below the threshold end up
/// unlabeled. Ties go to the smaller label name.
pub fn label_parts(shape: &Shape, predictions: &[ProtoPatches]) -> Shape {
    let sums = part_weight_sums(shape, predictions);
    let mut labels = BTreeMap::new();
    for (part, scores) in shape.parts().iter().zip(sums) {
        let best = scores
            .into_iter()
            .max_by(|(la, a), (lb, b)| a.total_cmp(b).then_with(|| lb.cmp(la)));
        if let Some((label, w)) = best {
            if w >= LABEL_THRESHOLD {
                labels.insert(part.id().clone(), label);
            }
        }
    }
    shape.clone().with_labels(&labels)
}

/// Shapes whose parts carry no labels at all are labeled from the
/// predictions of their applicable models; labeled shapes are kept as is.
pub fn ensure_labeled(shape: Shape, models: &[Arc<dyn CategoryModel>]) -> Shape {
    if !shape.labels().is_empty() {
        return shape;
    }
    let predictions: Vec<ProtoPatches> = super::matching::applicable_models(&shape, models)
        .iter()
        .map(|m| predict_proto_patches(m.as_ref(), &shape, DEFAULT_SAMPLE_COUNT))
        .collect();
    label_parts(&shape, &predictions)
}
