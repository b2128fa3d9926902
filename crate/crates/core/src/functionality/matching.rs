use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::model::{normalize_score, CategoryModel};
use super::sampling::{mask_of, sample_surface, ShapeView, SurfaceSample};
use super::space::functional_space_clear;
use super::stability::check_stability;
use crate::constants::{BEAM_WIDTH, DEFAULT_SAMPLE_COUNT, MULTI_FUNCTION_THRESHOLD};
use crate::error::{Error, Result};
use crate::shape::{PartId, RelationGraph, Shape};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialMatchResult {
    pub category: String,
    pub best_subset: BTreeSet<PartId>,
    pub raw_score: f64,
    pub normalized_score: f64,
    /// Distinct subsets scored during the search.
    pub evaluated: usize,
}

/// Validity checks of one subset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubsetEval {
    pub raw: f64,
    pub connected: bool,
    pub stable: bool,
    pub space_clear: bool,
}

impl SubsetEval {
    pub fn valid(&self) -> bool {
        self.connected && self.stable && self.space_clear
    }
}

/// Scores part subsets of one shape under one model, caching by mask.
pub struct SubsetEvaluator<'a> {
    shape: &'a Shape,
    model: &'a dyn CategoryModel,
    sample: SurfaceSample,
    graph: RelationGraph,
    /// Graph node index of each part, in part order.
    node_of: Vec<usize>,
    cache: HashMap<Vec<bool>, SubsetEval>,
}

impl<'a> SubsetEvaluator<'a> {
    pub fn new(shape: &'a Shape, model: &'a dyn CategoryModel) -> SubsetEvaluator<'a> {
        let graph = shape.relation_graph();
        let node_of = shape
            .parts()
            .iter()
            .map(|p| graph.index_of(p.id()).expect("graph covers every part"))
            .collect();
        SubsetEvaluator {
            shape,
            model,
            sample: sample_surface(shape, DEFAULT_SAMPLE_COUNT),
            graph,
            node_of,
            cache: HashMap::new(),
        }
    }

    pub fn evaluate(&mut self, mask: &[bool]) -> SubsetEval {
        if let Some(e) = self.cache.get(mask) {
            return *e;
        }
        let view = ShapeView::new(self.shape, &self.sample, mask);
        let mut node_mask = vec![false; mask.len()];
        for (i, &m) in mask.iter().enumerate() {
            node_mask[self.node_of[i]] = m;
        }
        let eval = SubsetEval {
            raw: self.model.raw_score(&view),
            connected: self.graph.mask_connected(&node_mask),
            stable: check_stability(&view),
            space_clear: functional_space_clear(self.model, &view, self.shape),
        };
        self.cache.insert(mask.to_vec(), eval);
        eval
    }

    pub fn evaluated(&self) -> usize {
        self.cache.len()
    }

    fn ids(&self, mask: &[bool]) -> BTreeSet<PartId> {
        self.shape
            .parts()
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(p, _)| p.id().clone())
            .collect()
    }

    fn result(&self, best: Option<(f64, BTreeSet<PartId>)>) -> PartialMatchResult {
        let (raw, subset) = best.unwrap_or((0.0, BTreeSet::new()));
        let normalized = if subset.is_empty() {
            0.0
        } else {
            normalize_score(self.model.distributions(), raw)
        };
        PartialMatchResult {
            category: self.model.category().to_owned(),
            best_subset: subset,
            raw_score: raw,
            normalized_score: normalized,
            evaluated: self.evaluated(),
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    mask: Vec<bool>,
    ids: BTreeSet<PartId>,
    eval: SubsetEval,
    parent_raw: f64,
}

/// Higher raw score first, then the smaller id set.
fn better(a: &Node, b: &Node) -> std::cmp::Ordering {
    b.eval.raw.total_cmp(&a.eval.raw).then_with(|| a.ids.cmp(&b.ids))
}

fn keep_best(best: &mut Option<(f64, BTreeSet<PartId>)>, node: &Node) {
    if !node.eval.valid() {
        return;
    }
    let wins = match best {
        None => true,
        Some((raw, ids)) => node.eval.raw > *raw || (node.eval.raw == *raw && node.ids < *ids),
    };
    if wins {
        *best = Some((node.eval.raw, node.ids.clone()));
    }
}

/// Reverse beam search from the whole shape towards the subset with the
/// highest raw score that is connected, stable and functional-space clear.
///
/// The whole shape and all of its single-part removals are expanded. Below
/// that, each level expands the `beam_width` best nodes that are connected
/// and clear (stability may still fail there) plus the best fully valid
/// node. The search stops once no child beats the parent it came from.
pub fn partial_match(shape: &Shape, model: &dyn CategoryModel, beam_width: usize) -> PartialMatchResult {
    let mut ev = SubsetEvaluator::new(shape, model);
    let full = vec![true; shape.parts().len()];
    let root = Node {
        ids: ev.ids(&full),
        eval: ev.evaluate(&full),
        mask: full,
        parent_raw: f64::NEG_INFINITY,
    };
    let mut best = None;
    keep_best(&mut best, &root);
    let mut frontier = vec![root];
    let mut level = 0;
    loop {
        let mut children: BTreeMap<Vec<bool>, Node> = BTreeMap::new();
        for node in &frontier {
            if node.mask.iter().filter(|&&m| m).count() < 2 {
                continue;
            }
            for i in (0..node.mask.len()).filter(|&i| node.mask[i]) {
                let mut mask = node.mask.clone();
                mask[i] = false;
                if let Some(c) = children.get_mut(&mask) {
                    c.parent_raw = c.parent_raw.max(node.eval.raw);
                    continue;
                }
                let eval = ev.evaluate(&mask);
                let child = Node {
                    ids: ev.ids(&mask),
                    mask: mask.clone(),
                    eval,
                    parent_raw: node.eval.raw,
                };
                children.insert(mask, child);
            }
        }
        if children.is_empty() {
            break;
        }
        let mut children: Vec<Node> = children.into_values().collect();
        children.sort_by(better);
        for c in &children {
            keep_best(&mut best, c);
        }
        level += 1;
        if level >= 2 && !children.iter().any(|c| c.eval.raw > c.parent_raw) {
            break;
        }
        frontier = if level == 1 {
            children
        } else {
            let mut next: Vec<Node> = children
                .iter()
                .filter(|c| c.eval.connected && c.eval.space_clear)
                .take(beam_width)
                .cloned()
                .collect();
            if let Some(stable) = children.iter().find(|c| c.eval.valid()) {
                if !next.iter().any(|n| n.mask == stable.mask) {
                    next.push(stable.clone());
                }
            }
            next
        };
        if frontier.is_empty() {
            break;
        }
    }
    ev.result(best)
}

pub fn partial_match_default(shape: &Shape, model: &dyn CategoryModel) -> PartialMatchResult {
    partial_match(shape, model, BEAM_WIDTH)
}

/// Best of the whole shape and the parts inherited from each parent, per
/// model, each subject to the same validity checks. Results are in model
/// order; `evaluated` counts the three candidates even when they coincide.
pub fn simplified_matches(offspring: &Shape, models: &[Arc<dyn CategoryModel>]) -> Result<Vec<PartialMatchResult>> {
    let prov = offspring
        .provenance()
        .ok_or_else(|| Error::MissingProvenance(offspring.id().to_owned()))?;
    let candidates: Vec<Vec<bool>> = [
        offspring
            .parts()
            .iter()
            .map(|p| p.id().clone())
            .collect::<BTreeSet<_>>(),
        prov.from_a.iter().cloned().collect(),
        prov.from_b.iter().cloned().collect(),
    ]
    .iter()
    .map(|ids| mask_of(offspring, ids))
    .collect();
    Ok(models
        .iter()
        .map(|model| {
            let mut ev = SubsetEvaluator::new(offspring, model.as_ref());
            let mut best = None;
            for mask in &candidates {
                let node = Node {
                    ids: ev.ids(mask),
                    eval: ev.evaluate(mask),
                    mask: mask.clone(),
                    parent_raw: f64::NEG_INFINITY,
                };
                keep_best(&mut best, &node);
            }
            PartialMatchResult {
                evaluated: candidates.len(),
                ..ev.result(best)
            }
        })
        .collect())
}

/// Highest normalized score of [`simplified_matches`].
pub fn simplified_partial_match(offspring: &Shape, models: &[Arc<dyn CategoryModel>]) -> Result<f64> {
    if models.is_empty() {
        return Err(Error::NoApplicableModel(offspring.id().to_owned()));
    }
    Ok(max_normalized(&simplified_matches(offspring, models)?))
}

/// Models for the shape's categories; a shape without categories is
/// matched against every model.
pub fn applicable_models(shape: &Shape, models: &[Arc<dyn CategoryModel>]) -> Vec<Arc<dyn CategoryModel>> {
    models
        .iter()
        .filter(|m| shape.categories().is_empty() || shape.categories().contains(m.category()))
        .cloned()
        .collect()
}

pub fn match_all(shape: &Shape, models: &[Arc<dyn CategoryModel>]) -> Vec<PartialMatchResult> {
    models
        .iter()
        .map(|m| partial_match_default(shape, m.as_ref()))
        .collect()
}

fn max_normalized(results: &[PartialMatchResult]) -> f64 {
    results.iter().map(|r| r.normalized_score).fold(0.0, f64::max)
}

/// Highest partial-match score over the models applicable to the shape.
pub fn plausibility_score(shape: &Shape, models: &[Arc<dyn CategoryModel>]) -> Result<f64> {
    let applicable = applicable_models(shape, models);
    if applicable.is_empty() {
        return Err(Error::NoApplicableModel(shape.id().to_owned()));
    }
    Ok(max_normalized(&match_all(shape, &applicable)))
}

/// Number of results with normalized score strictly above `theta`.
pub fn count_above(results: &[PartialMatchResult], theta: f64) -> usize {
    results.iter().filter(|r| r.normalized_score > theta).count()
}

pub fn multi_functionality_score(shape: &Shape, models: &[Arc<dyn CategoryModel>], theta: f64) -> usize {
    count_above(&match_all(shape, models), theta)
}

pub fn multi_functionality_default(shape: &Shape, models: &[Arc<dyn CategoryModel>]) -> usize {
    multi_functionality_score(shape, models, MULTI_FUNCTION_THRESHOLD)
}
