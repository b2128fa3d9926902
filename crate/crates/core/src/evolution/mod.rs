//! Generation loop: crossovers under label constraints, constraint repair
//! by insertion, diversity selection and ranking.

pub mod descriptor;
pub mod engine;
pub mod output;
pub mod selection;

pub use descriptor::{descriptor, distance_matrix, render_silhouette, view_directions, ShapeDescriptor};
pub use engine::{
    top_k_selector, DescriptorKind, EvolutionConfig, Evolver, Generation, GenerationManifest, ScoringMode, Selector,
    ShapeEntry,
};
pub use output::{generation_dir, read_generation, read_manifest, write_generation};
pub use selection::{farthest_point_sampling, keep_count, rank, RankKey, Ranking};
