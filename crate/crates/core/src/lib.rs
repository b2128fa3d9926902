//! Functionality-aware evolution of segmented 3D shapes.
//!
//! A population of part-segmented shapes is evolved by exchanging and
//! inserting part groups between shapes. Offspring are scored by matching
//! subsets of their parts against category functionality models, filtered
//! for diversity and ranked for user selection.

pub mod crossover;
pub mod error;
pub mod evolution;
pub mod fixtures;
pub mod functionality;
pub mod groups;
pub mod shape;

pub use error::{Error, Result};
pub use groups::{enumerate_part_groups, form_base_groups, PartGroup};
pub use shape::{Aabb, ContactKind, ContactPoint, Label, Part, PartId, Point, RelationGraph, Shape, Vector};

/// Fixed constants of the method.
pub mod constants {
    /// Minimum in-part proto-patch weight for a part to receive a label.
    pub const LABEL_THRESHOLD: f64 = 0.5;
    /// Refined placements are kept only if every matched contact lies within
    /// this fraction of the host bounding box diagonal.
    pub const REVERT_FRACTION: f64 = 0.05;
    /// Axis scale ratio above which a labeled part's proportions are restored.
    pub const PROPORTION_FACTOR: f64 = 3.0;
    /// Beam width of the reverse search over part subsets.
    pub const BEAM_WIDTH: usize = 2;
    /// Height band above the lowest point, as a fraction of the bbox
    /// diagonal, in which points count as touching the ground.
    pub const GROUND_BAND_FRACTION: f64 = 0.01;
    /// Fraction of offspring kept by diversity selection.
    pub const DIVERSITY_KEEP_FRACTION: f64 = 0.5;
    /// Normalized score a category must exceed to count towards
    /// multi-functionality.
    pub const MULTI_FUNCTION_THRESHOLD: f64 = 0.9;

    pub const DEFAULT_MAX_GROUPS: usize = 64;
    pub const DEFAULT_PAIR_OFFSPRING_CAP: usize = 32;
    pub const DEFAULT_TOP_K: usize = 8;
    pub const DEFAULT_SAMPLE_COUNT: usize = 2048;
}
