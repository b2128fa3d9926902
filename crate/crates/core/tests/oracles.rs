use std::collections::{BTreeSet, VecDeque};

use fame_core::crossover::alignment::{
    refined_alignment, sum_squared_error, ContactMatch, MatchedPair, SimilarityTransform,
};
use fame_core::fixtures;
use fame_core::groups::{enumerate_part_groups, form_base_groups};
use fame_core::shape::io::{load_population, write_shape};
use fame_core::shape::GroupOrigin;
use fame_core::{PartId, Point, Shape, Vector};
use proptest::prelude::*;

fn bfs_connected(shape: &Shape, subset: &BTreeSet<PartId>) -> bool {
    let Some(start) = subset.first() else {
        return false;
    };
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(cur) = queue.pop_front() {
        for c in shape.contacts() {
            let next = match (&c.part_a, &c.part_b) {
                (a, b) if *a == cur => b,
                (a, b) if *b == cur => a,
                _ => continue,
            };
            if subset.contains(next) && seen.insert(next.clone()) {
                queue.push_back(next.clone());
            }
        }
    }
    seen.len() == subset.len()
}

#[test]
fn relation_graph_connectivity_matches_bfs() {
    for shape in fixtures::corpus() {
        let graph = shape.relation_graph();
        let ids: Vec<PartId> = shape.parts().iter().map(|p| p.id().clone()).collect();
        for bits in 0u32..(1 << ids.len()) {
            let subset: BTreeSet<PartId> = ids
                .iter()
                .enumerate()
                .filter(|(i, _)| bits >> i & 1 == 1)
                .map(|(_, id)| id.clone())
                .collect();
            assert_eq!(
                graph.is_connected(&subset).unwrap(),
                bfs_connected(&shape, &subset),
                "{} {bits:b}",
                shape.id()
            );
        }
    }
}

#[test]
fn part_groups_are_consistent() {
    for shape in fixtures::corpus() {
        let groups = enumerate_part_groups(&shape, 64);
        assert!(groups.len() <= 64);
        let sets: BTreeSet<_> = groups.iter().map(|g| g.part_ids.clone()).collect();
        assert_eq!(sets.len(), groups.len(), "{} has duplicate groups", shape.id());
        for base in form_base_groups(&shape) {
            assert!(
                sets.contains(&base.part_ids),
                "{} lost base group {:?}",
                shape.id(),
                base.part_ids
            );
        }
        for g in &groups {
            assert!(!g.part_ids.is_empty());
            assert!(g.base.is_subset(&g.part_ids));
            let labels: BTreeSet<_> = g
                .part_ids
                .iter()
                .filter_map(|id| shape.part(id).unwrap().label().cloned())
                .collect();
            assert_eq!(g.labels, labels);
            assert!(g.labels.len() <= 2);
            if g.origin == GroupOrigin::SymmetrySingleton {
                assert_eq!(g.part_ids.len(), 1);
                let id = g.part_ids.first().unwrap();
                assert!(shape.symmetry_groups().iter().any(|s| s.len() > 1 && s.contains(id)));
            }
        }
    }
}

#[test]
fn corpus_round_trips_through_obj_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixtures::corpus();
    for shape in &corpus {
        write_shape(shape, dir.path()).unwrap();
    }
    let loaded = load_population(dir.path()).unwrap();
    assert_eq!(loaded.len(), corpus.len());
    for (a, b) in corpus.iter().zip(&loaded) {
        assert_eq!(a.id(), b.id());
        assert_eq!(a.categories(), b.categories());
        assert_eq!(a.symmetry_groups(), b.symmetry_groups());
        assert_eq!(a.contacts().len(), b.contacts().len());
        for (p, q) in a.parts().iter().zip(b.parts()) {
            assert_eq!(p.id(), q.id());
            assert_eq!(p.label(), q.label());
            assert_eq!(p.triangles().len(), q.triangles().len());
            assert!((p.bbox().min - q.bbox().min).norm() < 1e-9);
            assert!((p.bbox().max - q.bbox().max).norm() < 1e-9);
        }
    }
}

fn arb_match() -> impl Strategy<Value = ContactMatch> {
    let pair = (
        prop::array::uniform3(-1.0f64..1.0),
        prop::array::uniform3(-0.05f64..0.05),
    );
    (
        prop::collection::vec(pair, 2..=6),
        prop::array::uniform3(0.6f64..1.4),
        prop::array::uniform3(-1.0f64..1.0),
    )
        .prop_map(|(pts, s, t)| ContactMatch {
            pairs: pts
                .into_iter()
                .enumerate()
                .map(|(i, (p, n))| {
                    let source = Point::from(p);
                    let target = Point::new(
                        s[0] * p[0] + t[0] + n[0],
                        s[1] * p[1] + t[1] + n[1],
                        s[2] * p[2] + t[2] + n[2],
                    );
                    MatchedPair {
                        source_index: i,
                        target_index: i,
                        source,
                        target,
                        distance: (target - source).norm(),
                    }
                })
                .collect(),
        })
}

proptest! {
    #[test]
    fn refined_alignment_is_locally_optimal(
        m in arb_match(),
        ds in prop::array::uniform3(-0.1f64..0.1),
        dt in prop::array::uniform3(-0.1f64..0.1),
    ) {
        let best = refined_alignment(&m);
        let moved = SimilarityTransform {
            scale: best.scale + Vector::from(ds),
            translation: best.translation + Vector::from(dt),
        };
        prop_assert!(sum_squared_error(&m, &best) <= sum_squared_error(&m, &moved) + 1e-12);
    }
}
