use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::alignment::{
    accept_or_revert, initial_alignment, match_contacts, refined_alignment, residuals, restore_proportions,
    ContactMatch, PlacementChoice, SimilarityTransform,
};
use crate::error::{Error, Result};
use crate::groups::PartGroup;
use crate::shape::{ContactPoint, Operation, Part, PartId, Point, Provenance, Shape};

/// Namespaced part id of an offspring part.
pub fn offspring_part_id(parent: &str, part: &PartId) -> PartId {
    PartId(format!("{parent}/{part}"))
}

/// How the incoming group was placed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub initial: SimilarityTransform,
    pub refined: Option<SimilarityTransform>,
    pub choice: PlacementChoice,
    pub residuals: Vec<f64>,
}

impl Placement {
    pub fn transform(&self) -> SimilarityTransform {
        match (self.choice, &self.refined) {
            (PlacementChoice::Refined, Some(r)) => self.initial.then(r),
            _ => self.initial,
        }
    }
}

/// Contacts of `shape` with exactly one side inside `group`, as
/// `(contact index, inside part, outside part)`.
pub(crate) fn boundary_contacts<'a>(
    shape: &'a Shape,
    group: &BTreeSet<PartId>,
) -> Vec<(usize, &'a PartId, &'a PartId)> {
    shape
        .contacts()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match (group.contains(&c.part_a), group.contains(&c.part_b)) {
            (true, false) => Some((i, &c.part_a, &c.part_b)),
            (false, true) => Some((i, &c.part_b, &c.part_a)),
            _ => None,
        })
        .collect()
}

/// Flattened contact points with the contact index and inside part they came from.
fn flatten<'a>(shape: &'a Shape, boundary: &[(usize, &'a PartId, &'a PartId)]) -> Vec<(Point, usize, &'a PartId)> {
    boundary
        .iter()
        .flat_map(|&(ci, inside, _)| shape.contacts()[ci].points.iter().map(move |p| (*p, ci, inside)))
        .collect()
}

/// Computes where `incoming` (from `donor`) goes when it replaces `removed`
/// in `host`, along with the contact match used for rewiring.
pub fn place_group(
    host: &Shape,
    removed: &PartGroup,
    donor: &Shape,
    incoming: &PartGroup,
) -> Result<(Placement, Option<ContactMatch>)> {
    let src_box = donor.bbox_of(&incoming.part_ids)?;
    let dst_box = host.bbox_of(&removed.part_ids)?;
    let initial = initial_alignment(&src_box, &dst_box).map_err(|e| match e {
        Error::DegenerateBBox(why) => Error::AlignmentImpossible(format!("{} into {}: {why}", donor.id(), host.id())),
        other => other,
    })?;

    let src_points: Vec<Point> = flatten(donor, &boundary_contacts(donor, &incoming.part_ids))
        .iter()
        .map(|(p, _, _)| initial.apply(p))
        .collect();
    let dst_points: Vec<Point> = flatten(host, &boundary_contacts(host, &removed.part_ids))
        .iter()
        .map(|(p, _, _)| *p)
        .collect();
    let Ok(m) = match_contacts(&src_points, &dst_points) else {
        let placement = Placement {
            initial,
            refined: None,
            choice: PlacementChoice::Initial,
            residuals: Vec::new(),
        };
        return Ok((placement, None));
    };
    let refined = refined_alignment(&m);
    let res = residuals(&m, &refined);
    let choice = accept_or_revert(&res, host.bbox().diagonal());
    let placement = Placement {
        initial,
        refined: Some(refined),
        choice,
        residuals: res,
    };
    Ok((placement, Some(m)))
}

fn distance_to_part(p: &Point, part: &Part) -> f64 {
    let b = part.bbox();
    let mut d2 = 0.0;
    for k in 0..3 {
        let d = (b.min[k] - p[k]).max(p[k] - b.max[k]).max(0.0);
        d2 += d * d;
    }
    d2.sqrt()
}

fn rename_contact(c: &ContactPoint, a: PartId, b: PartId, map: impl Fn(&Point) -> Point) -> ContactPoint {
    ContactPoint {
        part_a: a,
        part_b: b,
        kind: c.kind,
        points: c.points.iter().map(map).collect(),
    }
}

fn restricted_symmetry(shape: &Shape, keep: &BTreeSet<PartId>, rename: impl Fn(&PartId) -> PartId) -> Vec<Vec<PartId>> {
    shape
        .symmetry_groups()
        .iter()
        .map(|g| g.iter().filter(|id| keep.contains(id)).map(&rename).collect::<Vec<_>>())
        .filter(|g| g.len() >= 2)
        .collect()
}

/// Offspring of `host` in which `removed` is replaced by `incoming` from
/// `donor`. Host contacts that touched the removed group are rewired to the
/// incoming part matched to them, or else to the nearest incoming part.
pub fn replace_group(
    host: &Shape,
    removed: &PartGroup,
    donor: &Shape,
    incoming: &PartGroup,
    offspring_id: impl Into<String>,
) -> Result<Shape> {
    if removed.is_null() || incoming.is_null() {
        return Err(Error::EmptySelection);
    }
    let (placement, matched) = place_group(host, removed, donor, incoming)?;
    let transform = placement.transform();
    let host_name = |id: &PartId| offspring_part_id(host.id(), id);
    let donor_name = |id: &PartId| offspring_part_id(donor.id(), id);

    let kept: BTreeSet<PartId> = host
        .parts()
        .iter()
        .map(|p| p.id().clone())
        .filter(|id| !removed.contains(id))
        .collect();
    let mut parts: Vec<Part> = host
        .parts()
        .iter()
        .filter(|p| kept.contains(p.id()))
        .map(|p| p.clone().with_id(host_name(p.id())))
        .collect();
    let placed: Vec<Part> = donor
        .parts()
        .iter()
        .filter(|p| incoming.contains(p.id()))
        .map(|p| restore_proportions(&transform.apply_part(p)).with_id(donor_name(p.id())))
        .collect();

    let mut contacts = Vec::new();
    for c in host.contacts() {
        if kept.contains(&c.part_a) && kept.contains(&c.part_b) {
            contacts.push(rename_contact(c, host_name(&c.part_a), host_name(&c.part_b), |p| *p));
        }
    }
    for c in donor.contacts() {
        if incoming.contains(&c.part_a) && incoming.contains(&c.part_b) {
            contacts.push(rename_contact(c, donor_name(&c.part_a), donor_name(&c.part_b), |p| {
                transform.apply(p)
            }));
        }
    }

    // Which incoming part each freed host contact point was matched to.
    let src_flat = flatten(donor, &boundary_contacts(donor, &incoming.part_ids));
    let dst_boundary = boundary_contacts(host, &removed.part_ids);
    let dst_flat = flatten(host, &dst_boundary);
    let mut matched_part: BTreeMap<usize, &PartId> = BTreeMap::new();
    if let Some(m) = &matched {
        for pair in &m.pairs {
            let (_, ci, _) = dst_flat[pair.target_index];
            let (_, _, inside) = src_flat[pair.source_index];
            matched_part.entry(ci).or_insert(inside);
        }
    }
    for &(ci, _, outside) in &dst_boundary {
        let c = &host.contacts()[ci];
        let target = match matched_part.get(&ci) {
            Some(&id) => donor_name(id),
            None => {
                let anchor = c.points[0];
                placed
                    .iter()
                    .min_by(|a, b| distance_to_part(&anchor, a).total_cmp(&distance_to_part(&anchor, b)))
                    .expect("incoming group is not empty")
                    .id()
                    .clone()
            }
        };
        contacts.push(rename_contact(c, host_name(outside), target, |p| *p));
    }

    let from_a: Vec<PartId> = parts.iter().map(|p| p.id().clone()).collect();
    let from_b: Vec<PartId> = placed.iter().map(|p| p.id().clone()).collect();
    parts.extend(placed);

    let mut symmetry = restricted_symmetry(host, &kept, host_name);
    symmetry.extend(restricted_symmetry(donor, &incoming.part_ids, donor_name));
    let categories = host.categories().union(donor.categories()).cloned().collect();
    let provenance = Provenance {
        parents: [host.id().to_owned(), donor.id().to_owned()],
        operation: Operation::Exchange,
        groups: [removed.record(), incoming.record()],
        from_a,
        from_b,
    };
    Shape::assemble(offspring_id.into(), parts, contacts, symmetry, categories, provenance)
}

/// Both offspring of exchanging `g_a` on `s_a` with `g_b` on `s_b`: the
/// first is `s_a` receiving `g_b`, the second `s_b` receiving `g_a`.
pub fn exchange(s_a: &Shape, g_a: &PartGroup, s_b: &Shape, g_b: &PartGroup) -> Result<(Shape, Shape)> {
    let first = replace_group(s_a, g_a, s_b, g_b, format!("{}+{}", s_a.id(), s_b.id()))?;
    let second = replace_group(s_b, g_b, s_a, g_a, format!("{}+{}", s_b.id(), s_a.id()))?;
    Ok((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::groups::enumerate_default;
    use crate::shape::{GroupOrigin, Vector};

    fn group(shape: &Shape, names: &[&str]) -> PartGroup {
        let ids: BTreeSet<PartId> = names.iter().map(|&n| PartId::from(n)).collect();
        enumerate_default(shape)
            .into_iter()
            .find(|g| g.part_ids == ids)
            .unwrap_or_else(|| panic!("no group {names:?} on {}", shape.id()))
    }

    #[test]
    fn self_exchange_is_identity() {
        let a = fixtures::by_id("chair_basic").unwrap();
        let b = a.clone().with_id("chair_copy");
        let (o1, o2) = exchange(&a, &group(&a, &["seat"]), &b, &group(&b, &["seat"])).unwrap();
        for (off, parent) in [(&o1, &a), (&o2, &b)] {
            assert_eq!(off.parts().len(), parent.parts().len());
            for part in parent.parts() {
                let moved = off
                    .parts()
                    .iter()
                    .find(|p| p.id().as_str().ends_with(&format!("/{}", part.id())))
                    .unwrap();
                for (x, y) in moved.vertices().zip(part.vertices()) {
                    assert!((x - y).norm() < 1e-6);
                }
            }
            assert_eq!(off.contacts().len(), parent.contacts().len());
        }
    }

    #[test]
    fn offspring_metadata() {
        let chair = fixtures::by_id("chair_basic").unwrap();
        let shelf = fixtures::by_id("shelf_3").unwrap();
        let (o1, o2) = exchange(&chair, &group(&chair, &["seat"]), &shelf, &group(&shelf, &["board2"])).unwrap();
        for o in [&o1, &o2] {
            let cats: Vec<&str> = o.categories().iter().map(|s| s.as_str()).collect();
            assert_eq!(cats, ["chair", "shelf"]);
            let prov = o.provenance().unwrap();
            assert_eq!(prov.operation, Operation::Exchange);
            assert_ne!(prov.parents[0], prov.parents[1]);
            assert_eq!(prov.from_a.len() + prov.from_b.len(), o.parts().len());
        }
        assert!(o1.part(&"shelf_3/board2".into()).unwrap().label().is_some());
        assert!(o1.part(&"chair_basic/seat".into()).is_none());
        assert_eq!(o1.symmetry_groups().len(), 1);
        assert_eq!(o2.symmetry_groups().len(), 1);
        let g = o1.relation_graph();
        assert!(g.is_connected(g.nodes()).unwrap());
    }

    #[test]
    fn initial_alignment_used_without_contacts() {
        let chair = fixtures::by_id("chair_basic").unwrap();
        let table = fixtures::by_id("table_basic").unwrap();
        let isolated = table.clone().with_contacts(Vec::new()).unwrap();
        let (placement, m) =
            place_group(&chair, &group(&chair, &["seat"]), &isolated, &group(&table, &["top"])).unwrap();
        assert!(m.is_none());
        assert_eq!(placement.choice, PlacementChoice::Initial);
    }

    #[test]
    fn symmetric_singleton_origin_recorded() {
        let chair = fixtures::by_id("chair_basic").unwrap();
        let stool = fixtures::by_id("stool_tri").unwrap();
        let g = group(&stool, &["leg1"]);
        assert_eq!(g.origin, GroupOrigin::SymmetrySingleton);
        let (o, _) = exchange(&chair, &group(&chair, &["leg2"]), &stool, &g).unwrap();
        assert_eq!(o.provenance().unwrap().groups[1].origin, GroupOrigin::SymmetrySingleton);
    }

    #[test]
    fn stretched_labeled_parts_are_restored() {
        let chair = fixtures::by_id("chair_basic").unwrap();
        let bench = fixtures::by_id("bench").unwrap();
        let (o, _) = exchange(&chair, &group(&chair, &["seat"]), &bench, &group(&bench, &["seat"])).unwrap();
        let seat = o.part(&"bench/seat".into()).unwrap();
        let s = seat.scale();
        for k in 1..3 {
            assert!(s[k] / s.x <= 3.0 && s[k] / s.x >= 1.0 / 3.0, "{s:?}");
        }
        assert!(seat.scale() != Vector::repeat(1.0));
    }
}
