//! Functionality analysis: category models, proto-patch labeling, subset
//! validity checks and partial matching.

pub mod matching;
pub mod model;
pub mod reference;
pub mod sampling;
pub mod space;
pub mod stability;

pub use matching::{
    applicable_models, count_above, match_all, multi_functionality_default, multi_functionality_score, partial_match,
    partial_match_default, plausibility_score, simplified_matches, simplified_partial_match, PartialMatchResult,
    SubsetEval, SubsetEvaluator,
};
pub use model::{ecdf, normalize_score, CategoryModel, ScoreDistributions, WeightField};
pub use reference::{
    builtin_models, ensure_labeled, label_parts, load_models, predict_proto_patches, ModelConfig, ModelSet,
    ProtoPatches, ReferenceModel,
};
pub use sampling::{mask_of, sample_surface, ShapeView, SurfaceSample};
pub use space::{check_functional_space, functional_space_clear};
pub use stability::check_stability;
