//! Part groups: the units exchanged by crossover.
//!
//! Base groups are connected same-label components, symmetry sets and their
//! individual members. Each base group is then grown by subsets of its
//! one-ring neighbourhood in the relation graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::constants::DEFAULT_MAX_GROUPS;
use crate::shape::{GroupOrigin, GroupRecord, Label, PartId, Shape};

/// Frontier parts considered for expansion, nearest to the base first.
pub const MAX_FRONTIER: usize = 8;
/// Largest frontier subset added to a base group.
pub const MAX_EXPANSION: usize = 4;
/// Groups never carry more labels than this.
pub const MAX_GROUP_LABELS: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartGroup {
    pub shape_id: String,
    pub part_ids: BTreeSet<PartId>,
    pub labels: BTreeSet<Label>,
    pub origin: GroupOrigin,
    /// The base group this group was grown from; equal to `part_ids` for
    /// base groups and empty for the null group.
    pub base: BTreeSet<PartId>,
}

impl PartGroup {
    pub fn new(shape: &Shape, part_ids: BTreeSet<PartId>, origin: GroupOrigin, base: BTreeSet<PartId>) -> PartGroup {
        let labels = part_ids
            .iter()
            .filter_map(|id| shape.part(id).and_then(|p| p.label().cloned()))
            .collect();
        PartGroup {
            shape_id: shape.id().to_owned(),
            part_ids,
            labels,
            origin,
            base,
        }
    }

    /// The empty group used when a part group is inserted rather than exchanged.
    pub fn null(shape_id: impl Into<String>) -> PartGroup {
        PartGroup {
            shape_id: shape_id.into(),
            part_ids: BTreeSet::new(),
            labels: BTreeSet::new(),
            origin: GroupOrigin::Null,
            base: BTreeSet::new(),
        }
    }

    pub fn is_null(&self) -> bool {
        self.origin == GroupOrigin::Null
    }

    pub fn len(&self) -> usize {
        self.part_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.part_ids.is_empty()
    }

    pub fn contains(&self, id: &PartId) -> bool {
        self.part_ids.contains(id)
    }

    pub fn record(&self) -> GroupRecord {
        GroupRecord {
            shape_id: self.shape_id.clone(),
            part_ids: self.part_ids.iter().cloned().collect(),
            origin: self.origin,
        }
    }

    /// Whether the group includes a whole symmetry set of its shape.
    pub fn contains_symmetry_set(&self, shape: &Shape) -> bool {
        shape
            .symmetry_groups()
            .iter()
            .any(|g| g.iter().all(|id| self.part_ids.contains(id)))
    }
}

/// Rank used when two origins produce the same part set.
fn precedence(origin: GroupOrigin) -> u8 {
    match origin {
        GroupOrigin::SymmetrySet => 0,
        GroupOrigin::SymmetrySingleton => 1,
        GroupOrigin::Base => 2,
        GroupOrigin::Expanded => 3,
        GroupOrigin::Null => 4,
    }
}

fn insert_dedup(out: &mut BTreeMap<BTreeSet<PartId>, PartGroup>, group: PartGroup) {
    match out.get(&group.part_ids) {
        Some(existing) if precedence(existing.origin) <= precedence(group.origin) => {}
        _ => {
            out.insert(group.part_ids.clone(), group);
        }
    }
}

/// Base groups sorted by part-id set.
pub fn form_base_groups(shape: &Shape) -> Vec<PartGroup> {
    let graph = shape.relation_graph();
    let mut by_label: BTreeMap<&Label, BTreeSet<PartId>> = BTreeMap::new();
    for part in shape.parts() {
        if let Some(label) = part.label() {
            by_label.entry(label).or_default().insert(part.id().clone());
        }
    }

    let mut out = BTreeMap::new();
    for members in by_label.values() {
        for comp in graph.components(members) {
            insert_dedup(&mut out, PartGroup::new(shape, comp.clone(), GroupOrigin::Base, comp));
        }
    }
    for sym in shape.symmetry_groups() {
        let set: BTreeSet<PartId> = sym.iter().cloned().collect();
        let group = PartGroup::new(shape, set.clone(), GroupOrigin::SymmetrySet, set);
        if group.labels.len() <= MAX_GROUP_LABELS {
            insert_dedup(&mut out, group);
        }
        for id in sym {
            let single = BTreeSet::from([id.clone()]);
            insert_dedup(
                &mut out,
                PartGroup::new(shape, single.clone(), GroupOrigin::SymmetrySingleton, single),
            );
        }
    }
    out.into_values().collect()
}

/// Frontier of a group: parts adjacent to it, nearest to its centroid first,
/// at most [`MAX_FRONTIER`].
pub fn frontier(shape: &Shape, group: &BTreeSet<PartId>) -> Vec<PartId> {
    let graph = shape.relation_graph();
    let ring: BTreeSet<PartId> = group
        .iter()
        .flat_map(|id| graph.neighbors(id).cloned().collect::<Vec<_>>())
        .filter(|id| !group.contains(id))
        .collect();
    let Ok(bbox) = shape.bbox_of(group) else {
        return Vec::new();
    };
    let centroid = bbox.center();
    let mut ring: Vec<(f64, PartId)> = ring
        .into_iter()
        .map(|id| {
            let d = (shape.part(&id).expect("graph node").bbox().center() - centroid).norm();
            (d, id)
        })
        .collect();
    ring.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    ring.truncate(MAX_FRONTIER);
    ring.into_iter().map(|(_, id)| id).collect()
}

/// Base groups plus their expansions by frontier subsets whose parts are all
/// unlabeled or all share one label. Deduplicated, sorted by part-id set and
/// limited to `max_groups`; base groups are always kept.
pub fn enumerate_part_groups(shape: &Shape, max_groups: usize) -> Vec<PartGroup> {
    let bases = form_base_groups(shape);
    let mut out: BTreeMap<BTreeSet<PartId>, PartGroup> = BTreeMap::new();
    for b in &bases {
        insert_dedup(&mut out, b.clone());
    }
    for b in &bases {
        let ring = frontier(shape, &b.part_ids);
        let ring_labels: Vec<Option<&Label>> = ring.iter().map(|id| shape.part(id).and_then(|p| p.label())).collect();
        for mask in 1u32..(1u32 << ring.len()) {
            if mask.count_ones() as usize > MAX_EXPANSION {
                continue;
            }
            let chosen: Vec<usize> = (0..ring.len()).filter(|&i| mask & (1 << i) != 0).collect();
            let first = ring_labels[chosen[0]];
            if chosen.iter().any(|&i| ring_labels[i] != first) {
                continue;
            }
            let mut parts = b.part_ids.clone();
            parts.extend(chosen.iter().map(|&i| ring[i].clone()));
            let group = PartGroup::new(shape, parts, GroupOrigin::Expanded, b.part_ids.clone());
            if group.labels.len() <= MAX_GROUP_LABELS {
                insert_dedup(&mut out, group);
            }
        }
    }
    truncate(out.into_values().collect(), max_groups)
}

pub fn enumerate_default(shape: &Shape) -> Vec<PartGroup> {
    enumerate_part_groups(shape, DEFAULT_MAX_GROUPS)
}

fn truncate(groups: Vec<PartGroup>, max_groups: usize) -> Vec<PartGroup> {
    if groups.len() <= max_groups {
        return groups;
    }
    let (base, mut expanded): (Vec<_>, Vec<_>) = groups.into_iter().partition(|g| g.origin != GroupOrigin::Expanded);
    expanded.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.part_ids.cmp(&b.part_ids)));
    let room = max_groups.saturating_sub(base.len());
    let mut kept = base;
    kept.extend(expanded.into_iter().take(room));
    kept.sort_by(|a, b| a.part_ids.cmp(&b.part_ids));
    kept
}
