//! Part group exchange and insertion.
//!
//! Incoming groups are first aligned by bounding box, then refined by
//! fitting matched contact points with a per-axis scale and translation.

pub mod alignment;
pub mod exchange;
pub mod insertion;

pub use alignment::{
    accept_or_revert, initial_alignment, match_contacts, refined_alignment, residuals, restore_proportions,
    sum_squared_error, ContactMatch, MatchedPair, PlacementChoice, SimilarityTransform,
};
pub use exchange::{exchange, offspring_part_id, place_group, replace_group, Placement};
pub use insertion::{anchor_vectors, find_site, insert, AnchorVector, InsertionSite, OCCUPANCY_IOU};
