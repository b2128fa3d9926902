use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use super::{PartId, Shape};
use crate::error::{Error, Result};

/// Part adjacency induced by shared contact points. Nodes are kept sorted so
/// the graph does not depend on the order parts appear in the input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationGraph {
    nodes: Vec<PartId>,
    edges: BTreeSet<(PartId, PartId)>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

impl RelationGraph {
    pub fn from_shape(shape: &Shape) -> RelationGraph {
        let nodes = shape.parts().iter().map(|p| p.id().clone());
        let edges = shape.contacts().iter().map(|c| c.key());
        RelationGraph::new(nodes, edges)
    }

    /// Builds a graph from arbitrary node and edge lists; self-loops are dropped.
    pub fn new(
        nodes: impl IntoIterator<Item = PartId>,
        edges: impl IntoIterator<Item = (PartId, PartId)>,
    ) -> RelationGraph {
        let nodes: Vec<PartId> = nodes.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let edges: BTreeSet<(PartId, PartId)> = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        let index: BTreeMap<&PartId, usize> = nodes.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (a, b) in &edges {
            let (i, j) = (index[a], index[b]);
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        RelationGraph {
            nodes,
            edges,
            adjacency,
        }
    }

    pub fn nodes(&self) -> &[PartId] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(PartId, PartId)> {
        &self.edges
    }

    pub fn index_of(&self, id: &PartId) -> Option<usize> {
        self.nodes.binary_search(id).ok()
    }

    pub fn has_edge(&self, a: &PartId, b: &PartId) -> bool {
        let key = if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        self.edges.contains(&key)
    }

    pub fn neighbors(&self, id: &PartId) -> impl Iterator<Item = &PartId> {
        let adj = self.index_of(id).map(|i| self.adjacency[i].as_slice()).unwrap_or(&[]);
        adj.iter().map(|&j| &self.nodes[j])
    }

    /// Whether the subgraph induced by `subset` is connected. Empty subsets
    /// are not connected; singletons are.
    pub fn is_connected<'a, I>(&self, subset: I) -> Result<bool>
    where
        I: IntoIterator<Item = &'a PartId>,
    {
        let mut mask = vec![false; self.nodes.len()];
        for id in subset {
            let i = self.index_of(id).ok_or_else(|| Error::UnknownPartId(id.clone()))?;
            mask[i] = true;
        }
        Ok(self.mask_connected(&mask))
    }

    /// Connectivity over a node mask indexed like [`RelationGraph::nodes`].
    pub fn mask_connected(&self, mask: &[bool]) -> bool {
        let Some(start) = mask.iter().position(|&m| m) else {
            return false;
        };
        let mut seen = vec![false; mask.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut reached = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &self.adjacency[i] {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    reached += 1;
                    queue.push_back(j);
                }
            }
        }
        reached == mask.iter().filter(|&&m| m).count()
    }

    /// Connected components of the induced subgraph, each sorted.
    pub fn components(&self, subset: &BTreeSet<PartId>) -> Vec<BTreeSet<PartId>> {
        let mut remaining: BTreeSet<&PartId> = subset.iter().collect();
        let mut out = Vec::new();
        while let Some(&start) = remaining.iter().next() {
            remaining.remove(start);
            let mut comp = BTreeSet::from([start.clone()]);
            let mut queue = VecDeque::from([start]);
            while let Some(id) = queue.pop_front() {
                for n in self.neighbors(id) {
                    if remaining.remove(n) {
                        comp.insert(n.clone());
                        queue.push_back(n);
                    }
                }
            }
            out.push(comp);
        }
        out
    }
}
