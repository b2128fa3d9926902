use std::collections::BTreeSet;

use super::alignment::SimilarityTransform;
use super::exchange::{boundary_contacts, offspring_part_id, replace_group};
use crate::error::{Error, Result};
use crate::groups::PartGroup;
use crate::shape::{ContactPoint, Label, Operation, Part, PartId, Point, Provenance, Shape, Vector};

/// Bbox IoU above which an insertion site counts as occupied.
pub const OCCUPANCY_IOU: f64 = 0.3;

/// Vector from a group's centroid to an adjacent labeled part's centroid.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchorVector {
    pub neighbor: PartId,
    pub label: Label,
    pub vector: Vector,
}

/// Anchor vectors of `group` towards every adjacent labeled part outside it.
pub fn anchor_vectors(shape: &Shape, group: &PartGroup) -> Result<Vec<AnchorVector>> {
    let center = shape.bbox_of(&group.part_ids)?.center();
    let neighbors: BTreeSet<&PartId> = boundary_contacts(shape, &group.part_ids)
        .into_iter()
        .map(|(_, _, outside)| outside)
        .collect();
    Ok(neighbors
        .into_iter()
        .filter_map(|id| {
            let part = shape.part(id)?;
            Some(AnchorVector {
                neighbor: id.clone(),
                label: part.label()?.clone(),
                vector: part.bbox().center() - center,
            })
        })
        .collect())
}

/// Where an inserted group should go and which host part anchors each label.
#[derive(Clone, Debug, PartialEq)]
pub struct InsertionSite {
    pub center: Point,
    /// Host part closest to `center + vector` for each used anchor vector.
    pub anchors: Vec<(AnchorVector, PartId)>,
    pub error: f64,
}

fn nearest_with_label<'a>(host: &'a Shape, label: &Label, target: &Point) -> Option<&'a Part> {
    host.parts().iter().filter(|p| p.label() == Some(label)).min_by(|a, b| {
        (a.bbox().center() - target)
            .norm()
            .total_cmp(&(b.bbox().center() - target).norm())
    })
}

/// Candidate centers are `c_h - v` for every anchor vector `v` and every host
/// part with that vector's label. Each candidate is scored by how far its
/// mean vector to the nearest same-labeled host parts is from the source
/// mean vector; the first best candidate wins.
pub fn find_site(host: &Shape, anchors: &[AnchorVector]) -> Option<InsertionSite> {
    let host_labels = host.labels();
    let usable: Vec<&AnchorVector> = anchors.iter().filter(|a| host_labels.contains(&a.label)).collect();
    if usable.is_empty() {
        return None;
    }
    let source_mean = usable.iter().map(|a| a.vector).sum::<Vector>() / usable.len() as f64;

    let mut best: Option<InsertionSite> = None;
    for a in &usable {
        for h in host.parts().iter().filter(|p| p.label() == Some(&a.label)) {
            let center = h.bbox().center() - a.vector;
            let mut chosen = Vec::with_capacity(usable.len());
            let mut sum = Vector::zeros();
            for b in &usable {
                let part = nearest_with_label(host, &b.label, &(center + b.vector)).expect("label is present");
                sum += part.bbox().center() - center;
                chosen.push(((*b).clone(), part.id().clone()));
            }
            let error = (sum / usable.len() as f64 - source_mean).norm();
            if best.as_ref().is_none_or(|s| error < s.error) {
                best = Some(InsertionSite {
                    center,
                    anchors: chosen,
                    error,
                });
            }
        }
    }
    best
}

/// Adds `g` from `donor` to `host` at the location suggested by its anchor
/// vectors. If that location overlaps one of `host_groups` by more than
/// [`OCCUPANCY_IOU`], the overlapped group is exchanged for `g` instead.
pub fn insert(
    g: &PartGroup,
    donor: &Shape,
    host: &Shape,
    host_groups: &[PartGroup],
    offspring_id: impl Into<String>,
) -> Result<Shape> {
    let offspring_id = offspring_id.into();
    let anchors = anchor_vectors(donor, g)?;
    let site = find_site(host, &anchors).ok_or_else(|| Error::NoAnchorLabels(host.id().to_owned()))?;
    let source_box = donor.bbox_of(&g.part_ids)?;
    let offset = site.center - source_box.center();
    let placed_box = crate::shape::Aabb::new(source_box.min + offset, source_box.max + offset);

    let occupied = host_groups
        .iter()
        .filter(|hg| !hg.is_null())
        .filter_map(|hg| host.bbox_of(&hg.part_ids).ok().map(|b| (hg, b.iou(&placed_box))))
        .filter(|(_, iou)| *iou > OCCUPANCY_IOU)
        .fold(None::<(&PartGroup, f64)>, |best, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        });
    if let Some((target, _)) = occupied {
        return replace_group(host, target, donor, g, offspring_id);
    }

    let shift = SimilarityTransform::translation(offset);
    let host_name = |id: &PartId| offspring_part_id(host.id(), id);
    let donor_name = |id: &PartId| offspring_part_id(donor.id(), id);

    let mut parts: Vec<Part> = host
        .parts()
        .iter()
        .map(|p| p.clone().with_id(host_name(p.id())))
        .collect();
    let from_a: Vec<PartId> = parts.iter().map(|p| p.id().clone()).collect();
    let placed: Vec<Part> = donor
        .parts()
        .iter()
        .filter(|p| g.contains(p.id()))
        .map(|p| shift.apply_part(p).with_id(donor_name(p.id())))
        .collect();
    let from_b: Vec<PartId> = placed.iter().map(|p| p.id().clone()).collect();
    parts.extend(placed);

    let mut contacts: Vec<ContactPoint> = host
        .contacts()
        .iter()
        .map(|c| ContactPoint {
            part_a: host_name(&c.part_a),
            part_b: host_name(&c.part_b),
            kind: c.kind,
            points: c.points.clone(),
        })
        .collect();
    for c in donor.contacts() {
        if g.contains(&c.part_a) && g.contains(&c.part_b) {
            contacts.push(ContactPoint {
                part_a: donor_name(&c.part_a),
                part_b: donor_name(&c.part_b),
                kind: c.kind,
                points: c.points.iter().map(|p| shift.apply(p)).collect(),
            });
        }
    }
    for (ci, inside, outside) in boundary_contacts(donor, &g.part_ids) {
        let Some((_, host_part)) = site.anchors.iter().find(|(a, _)| &a.neighbor == outside) else {
            continue;
        };
        let c = &donor.contacts()[ci];
        contacts.push(ContactPoint {
            part_a: donor_name(inside),
            part_b: host_name(host_part),
            kind: c.kind,
            points: c.points.iter().map(|p| shift.apply(p)).collect(),
        });
    }

    let mut symmetry: Vec<Vec<PartId>> = host
        .symmetry_groups()
        .iter()
        .map(|s| s.iter().map(host_name).collect())
        .collect();
    symmetry.extend(
        donor
            .symmetry_groups()
            .iter()
            .map(|s| s.iter().filter(|id| g.contains(id)).map(donor_name).collect::<Vec<_>>())
            .filter(|s| s.len() >= 2),
    );
    let categories = host.categories().union(donor.categories()).cloned().collect();
    let provenance = Provenance {
        parents: [host.id().to_owned(), donor.id().to_owned()],
        operation: Operation::Insertion,
        groups: [PartGroup::null(host.id()).record(), g.record()],
        from_a,
        from_b,
    };
    Shape::assemble(offspring_id, parts, contacts, symmetry, categories, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::groups::enumerate_default;

    fn group(shape: &Shape, names: &[&str]) -> PartGroup {
        let ids: BTreeSet<PartId> = names.iter().map(|&n| PartId::from(n)).collect();
        enumerate_default(shape)
            .into_iter()
            .find(|g| g.part_ids == ids)
            .unwrap()
    }

    #[test]
    fn wheels_go_below_support_parts() {
        let table = fixtures::by_id("wheeled_table").unwrap();
        let chair = fixtures::by_id("chair_basic").unwrap();
        let wheels = group(&table, &["wheel_l"]);
        let out = insert(&wheels, &table, &chair, &enumerate_default(&chair), "o").unwrap();
        let wheel = out.part(&"wheeled_table/wheel_l".into()).unwrap();
        let legs_bottom = chair.bbox().min.z;
        assert!(wheel.bbox().max.z <= legs_bottom + 1e-9);
        assert!(out.labels().contains(&Label::from("rolling")));
        assert_eq!(out.provenance().unwrap().operation, Operation::Insertion);
        let g = out.relation_graph();
        assert!(g.is_connected(g.nodes()).unwrap());
    }

    #[test]
    fn no_shared_labels() {
        let cart = fixtures::by_id("cart_basic").unwrap();
        let shelf = fixtures::by_id("shelf_3").unwrap();
        let handle_free = group(&cart, &["wheel1"]);
        // wheel1 touches only the platform (storage); the host has storage, so
        // strip labels from the host to leave no anchor.
        let bare = shelf.clone().with_labels(&Default::default());
        let err = insert(&handle_free, &cart, &bare, &[], "o").unwrap_err();
        assert!(matches!(err, Error::NoAnchorLabels(_)));
    }
}
