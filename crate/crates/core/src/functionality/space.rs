use std::collections::BTreeSet;

use super::model::CategoryModel;
use super::sampling::ShapeView;
use crate::error::{Error, Result};
use crate::shape::geometry::triangle_intersects_aabb;
use crate::shape::{Aabb, Label, Part, PartId, Shape};

/// Whether the model's functional space above (or below) every part of the
/// view carrying `label` is free of all other parts of `full_shape`.
pub fn check_functional_space(
    model: &dyn CategoryModel,
    view: &ShapeView,
    label: &Label,
    full_shape: &Shape,
) -> Result<bool> {
    let patches: Vec<&Part> = view
        .part_indices()
        .map(|i| &view.shape.parts()[i])
        .filter(|p| p.label() == Some(label))
        .collect();
    if patches.is_empty() {
        return Err(Error::UnknownLabel(label.clone()));
    }
    for part in patches {
        let space = model
            .functional_space(label, part.bbox(), full_shape)
            .ok_or_else(|| Error::UnknownLabel(label.clone()))?;
        if obstructed(&space, full_shape, &BTreeSet::from([part.id()])) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether any triangle of a part outside `exclude` touches `space`.
pub fn obstructed(space: &Aabb, shape: &Shape, exclude: &BTreeSet<&PartId>) -> bool {
    shape
        .parts()
        .iter()
        .filter(|p| !exclude.contains(p.id()))
        .filter(|p| p.bbox().intersection(space).is_some())
        .any(|p| p.triangles().iter().any(|t| triangle_intersects_aabb(t, space)))
}

/// All labels of the view that the model has a functional space for must
/// be clear; other labels are ignored.
pub fn functional_space_clear(model: &dyn CategoryModel, view: &ShapeView, full_shape: &Shape) -> bool {
    let labels: BTreeSet<Label> = view
        .part_indices()
        .filter_map(|i| view.shape.parts()[i].label().cloned())
        .collect();
    labels
        .iter()
        .all(|label| check_functional_space(model, view, label, full_shape).unwrap_or(true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, cuboid};
    use crate::functionality::reference::builtin_models;
    use crate::functionality::sampling::sample_surface;
    use crate::shape::Point;

    fn chair_model() -> std::sync::Arc<dyn CategoryModel> {
        builtin_models().into_iter().find(|m| m.category() == "chair").unwrap()
    }

    fn check(shape: &Shape, label: &str) -> Result<bool> {
        let sample = sample_surface(shape, 256);
        let mask = vec![true; shape.parts().len()];
        check_functional_space(
            chair_model().as_ref(),
            &ShapeView::new(shape, &sample, &mask),
            &label.into(),
            shape,
        )
    }

    fn seat_with_board(height_fraction: f64) -> Shape {
        let seat_top = 0.45;
        let clearance = 0.8 * 0.4;
        let z = seat_top + height_fraction * clearance;
        let parts = vec![
            cuboid(
                "seat",
                Point::new(0.0, 0.0, 0.4),
                Point::new(0.4, 0.4, seat_top),
                Some("sitting"),
            ),
            cuboid("board", Point::new(0.0, 0.0, z), Point::new(0.4, 0.4, z + 0.02), None),
        ];
        Shape::new("s", parts, vec![], vec![], BTreeSet::new()).unwrap()
    }

    #[test]
    fn free_seat_is_clear() {
        let seat = cuboid(
            "seat",
            Point::new(0.0, 0.0, 0.4),
            Point::new(0.4, 0.4, 0.45),
            Some("sitting"),
        );
        let shape = Shape::new("s", vec![seat], vec![], vec![], BTreeSet::new()).unwrap();
        assert!(check(&shape, "sitting").unwrap());
        assert!(check(&fixtures::by_id("chair_basic").unwrap(), "sitting").unwrap());
    }

    #[test]
    fn board_over_seat_blocks() {
        let shape = seat_with_board(0.1);
        assert!(!check(&shape, "sitting").unwrap());
        // Oracle: the board's own triangles against the clearance box.
        let seat = shape.part(&"seat".into()).unwrap();
        let space = chair_model()
            .functional_space(&"sitting".into(), seat.bbox(), &shape)
            .unwrap();
        let board = shape.part(&"board".into()).unwrap();
        assert!(board.triangles().iter().any(|t| triangle_intersects_aabb(t, &space)));
        assert!(check(&seat_with_board(1.5), "sitting").unwrap());
        assert!(!check(&fixtures::by_id("chair_obstructed").unwrap(), "sitting").unwrap());
    }

    #[test]
    fn unknown_labels() {
        let shape = fixtures::by_id("chair_basic").unwrap();
        assert!(matches!(check(&shape, "leaning"), Err(Error::UnknownLabel(_))));
        assert!(matches!(check(&shape, "rolling"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn fixture_spaces_clear_except_obstructed() {
        for m in builtin_models() {
            for shape in fixtures::corpus() {
                let sample = sample_surface(&shape, 256);
                let mask = vec![true; shape.parts().len()];
                let clear = functional_space_clear(m.as_ref(), &ShapeView::new(&shape, &sample, &mask), &shape);
                let blocked = shape.id() == "chair_obstructed" && m.category() == "chair";
                assert_eq!(clear, !blocked, "{} under {}", shape.id(), m.category());
            }
        }
    }
}
