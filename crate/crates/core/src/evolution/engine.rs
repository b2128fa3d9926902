use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::descriptor::{descriptor, distance_matrix};
use super::selection::{farthest_point_sampling, keep_count, rank, RankKey, Ranking};
use crate::constants::{
    DEFAULT_MAX_GROUPS, DEFAULT_PAIR_OFFSPRING_CAP, DEFAULT_TOP_K, DIVERSITY_KEEP_FRACTION, MULTI_FUNCTION_THRESHOLD,
};
use crate::crossover::{exchange, insert, replace_group};
use crate::error::{Error, Result};
use crate::functionality::{count_above, match_all, simplified_matches, CategoryModel, PartialMatchResult};
use crate::groups::{enumerate_part_groups, PartGroup};
use crate::shape::{Label, PartId, Provenance, Shape};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    #[default]
    Full,
    Simplified,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DescriptorKind {
    #[default]
    #[serde(rename = "reduced-lfd")]
    ReducedLfd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Labels every offspring must carry.
    #[serde(default)]
    pub labels: BTreeSet<Label>,
    pub generations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_keep")]
    pub diversity_keep_fraction: f64,
    #[serde(default)]
    pub ranking: Ranking,
    #[serde(default)]
    pub scoring: ScoringMode,
    #[serde(default)]
    pub descriptor: DescriptorKind,
    #[serde(default = "default_max_groups")]
    pub max_groups: usize,
    /// Most offspring kept per ordered parent pair.
    #[serde(default = "default_pair_cap")]
    pub pair_offspring_cap: usize,
    /// Parents picked by the headless selector.
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

fn default_keep() -> f64 {
    DIVERSITY_KEEP_FRACTION
}

fn default_max_groups() -> usize {
    DEFAULT_MAX_GROUPS
}

fn default_pair_cap() -> usize {
    DEFAULT_PAIR_OFFSPRING_CAP
}

fn default_top_k() -> usize {
    DEFAULT_TOP_K
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            labels: BTreeSet::new(),
            generations: 1,
            seed: 0,
            diversity_keep_fraction: DIVERSITY_KEEP_FRACTION,
            ranking: Ranking::default(),
            scoring: ScoringMode::default(),
            descriptor: DescriptorKind::default(),
            max_groups: DEFAULT_MAX_GROUPS,
            pair_offspring_cap: DEFAULT_PAIR_OFFSPRING_CAP,
            top_k: DEFAULT_TOP_K,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if self.generations < 1 {
            return bad("generations must be at least 1");
        }
        if !(self.diversity_keep_fraction > 0.0 && self.diversity_keep_fraction <= 1.0) {
            return bad("diversity_keep_fraction must lie in (0, 1]");
        }
        if self.max_groups < 1 || self.pair_offspring_cap < 1 || self.top_k < 1 {
            return bad("max_groups, pair_offspring_cap and top_k must be positive");
        }
        Ok(())
    }
}

/// Scores and lineage of one shape in a generation listing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeEntry {
    pub id: String,
    pub plausibility: f64,
    pub multi_functionality: usize,
    pub categories: Vec<String>,
    pub labels: Vec<Label>,
    /// One partial match per model, in model order.
    pub scores: Vec<PartialMatchResult>,
    pub provenance: Option<Provenance>,
}

/// Serializable listing of a generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationManifest {
    pub index: usize,
    /// Offspring produced before diversity selection.
    pub produced: usize,
    pub labels: Vec<Label>,
    /// Entries in ranked order.
    pub shapes: Vec<ShapeEntry>,
    pub selected: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generation {
    pub index: usize,
    pub produced: usize,
    pub labels: BTreeSet<Label>,
    /// Ranked shapes, with `entries` parallel to them.
    pub shapes: Vec<Shape>,
    pub entries: Vec<ShapeEntry>,
    pub selected: Vec<String>,
}

impl Generation {
    pub fn manifest(&self) -> GenerationManifest {
        GenerationManifest {
            index: self.index,
            produced: self.produced,
            labels: self.labels.iter().cloned().collect(),
            shapes: self.entries.clone(),
            selected: self.selected.clone(),
        }
    }

    pub fn shape(&self, id: &str) -> Option<&Shape> {
        self.shapes.iter().find(|s| s.id() == id)
    }

    /// Shapes named by `ids`, in that order.
    pub fn pick(&self, ids: &[String]) -> Result<Vec<Shape>> {
        ids.iter()
            .map(|id| self.shape(id).cloned().ok_or_else(|| Error::UnknownShapeId(id.clone())))
            .collect()
    }
}

/// Chooses the parents of the next generation from a ranked generation.
pub type Selector<'a> = dyn FnMut(&Generation) -> Vec<String> + 'a;

/// The `k` best-ranked shapes.
pub fn top_k_selector(k: usize) -> impl FnMut(&Generation) -> Vec<String> {
    move |g| g.shapes.iter().take(k).map(|s| s.id().to_owned()).collect()
}

fn missing(required: &BTreeSet<Label>, shape: &Shape) -> BTreeSet<Label> {
    let have = shape.labels();
    required.difference(&have).cloned().collect()
}

fn pair_rng(seed: u64, generation: usize, a: usize, b: usize) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    for (k, v) in [seed, generation as u64, a as u64, b as u64].into_iter().enumerate() {
        bytes[k * 8..(k + 1) * 8].copy_from_slice(&v.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

/// Keeps at most `cap` items, drawn uniformly without replacement and
/// returned in their original order.
fn subsample<T>(items: Vec<T>, cap: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    if items.len() <= cap {
        return items;
    }
    let mut keep = index::sample(rng, items.len(), cap).into_vec();
    keep.sort_unstable();
    let mut keep = keep.into_iter().peekable();
    items
        .into_iter()
        .enumerate()
        .filter_map(|(i, x)| {
            (keep.peek() == Some(&i)).then(|| {
                keep.next();
                x
            })
        })
        .collect()
}

/// Recomputes the inherited part lists after a chain of operations: parts
/// named after the first parent come from it, the rest from donors.
fn lineage(mut prov: Provenance, shape: &Shape) -> Provenance {
    let prefix = format!("{}/", prov.parents[0]);
    let (a, b): (Vec<PartId>, Vec<PartId>) = shape
        .parts()
        .iter()
        .map(|p| p.id().clone())
        .partition(|id| id.as_str().starts_with(&prefix));
    prov.from_a = a;
    prov.from_b = b;
    prov
}

pub struct Evolver {
    config: EvolutionConfig,
    models: Vec<Arc<dyn CategoryModel>>,
}

impl Evolver {
    pub fn new(config: EvolutionConfig, models: Vec<Arc<dyn CategoryModel>>) -> Result<Evolver> {
        config.validate()?;
        if models.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one functionality model is required".into(),
            ));
        }
        Ok(Evolver { config, models })
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    pub fn models(&self) -> &[Arc<dyn CategoryModel>] {
        &self.models
    }

    /// Replaces the constraint labels, as when the user changes them
    /// between generations.
    pub fn set_labels(&mut self, labels: BTreeSet<Label>) {
        self.config.labels = labels;
    }

    pub fn score(&self, shape: &Shape) -> ShapeEntry {
        let scores = match (self.config.scoring, shape.provenance()) {
            (ScoringMode::Simplified, Some(_)) => {
                simplified_matches(shape, &self.models).expect("provenance is present")
            }
            _ => match_all(shape, &self.models),
        };
        let plausibility = scores
            .iter()
            .filter(|r| shape.categories().is_empty() || shape.categories().contains(&r.category))
            .map(|r| r.normalized_score)
            .fold(0.0, f64::max);
        ShapeEntry {
            id: shape.id().to_owned(),
            plausibility,
            multi_functionality: count_above(&scores, MULTI_FUNCTION_THRESHOLD),
            categories: shape.categories().iter().cloned().collect(),
            labels: shape.labels().into_iter().collect(),
            scores,
            provenance: shape.provenance().cloned(),
        }
    }

    fn ranked(&self, index: usize, produced: usize, shapes: Vec<Shape>) -> Generation {
        let entries: Vec<ShapeEntry> = shapes.par_iter().map(|s| self.score(s)).collect();
        let keys: Vec<RankKey> = entries
            .iter()
            .map(|e| RankKey {
                id: &e.id,
                plausibility: e.plausibility,
                multi_functionality: e.multi_functionality,
            })
            .collect();
        let order = rank(&keys, self.config.ranking);
        Generation {
            index,
            produced,
            labels: self.config.labels.clone(),
            shapes: order.iter().map(|&i| shapes[i].clone()).collect(),
            entries: order.iter().map(|&i| entries[i].clone()).collect(),
            selected: Vec::new(),
        }
    }

    /// The input population scored and ranked as generation 0, with every
    /// shape selected.
    pub fn initial_generation(&self, population: Vec<Shape>) -> Result<Generation> {
        if population.len() < 2 {
            return Err(Error::InvalidConfig(
                "the initial population needs at least two shapes".into(),
            ));
        }
        let ids: BTreeSet<&str> = population.iter().map(|s| s.id()).collect();
        if ids.len() != population.len() {
            return Err(Error::InvalidConfig("shape ids in a population must be unique".into()));
        }
        let n = population.len();
        let mut g = self.ranked(0, n, population);
        g.selected = g.shapes.iter().map(|s| s.id().to_owned()).collect();
        Ok(g)
    }

    /// Breeds generation `index` from `parents`: crossovers over every
    /// ordered parent pair, constraint audit, diversity selection, scoring
    /// and ranking. `selected` is left empty.
    pub fn step(&self, parents: &[Shape], index: usize) -> Result<Generation> {
        if parents.len() < 2 {
            return Err(Error::InvalidConfig("a generation needs at least two parents".into()));
        }
        let groups: Vec<Vec<PartGroup>> = parents
            .par_iter()
            .map(|p| {
                enumerate_part_groups(p, self.config.max_groups)
                    .into_iter()
                    .filter(|g| !g.is_null())
                    .collect()
            })
            .collect();
        let pool: Vec<(&Shape, &PartGroup)> = parents
            .iter()
            .zip(&groups)
            .flat_map(|(s, gs)| gs.iter().map(move |g| (s, g)))
            .collect();
        let pairs: Vec<(usize, usize)> = (0..parents.len())
            .flat_map(|a| (0..parents.len()).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        let bred: Vec<Vec<Shape>> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let mut rng = pair_rng(self.config.seed, index, a, b);
                self.breed_pair(parents, &groups, &pool, a, b, &mut rng)
            })
            .collect();

        let mut seen = BTreeSet::new();
        let mut offspring = Vec::new();
        for shape in bred.into_iter().flatten() {
            if !missing(&self.config.labels, &shape).is_empty() {
                continue;
            }
            let key: BTreeSet<PartId> = shape.parts().iter().map(|p| p.id().clone()).collect();
            if seen.insert(key) {
                let id = format!("g{index}_{:04}", offspring.len());
                offspring.push(shape.with_id(id));
            }
        }
        if offspring.is_empty() {
            return Err(Error::EmptyGeneration(index));
        }
        let produced = offspring.len();

        let descriptors: Vec<_> = offspring.par_iter().map(descriptor).collect();
        let ids: Vec<String> = offspring.iter().map(|s| s.id().to_owned()).collect();
        let keep = keep_count(produced, self.config.diversity_keep_fraction);
        let chosen = farthest_point_sampling(&distance_matrix(&descriptors), &ids, keep);
        let survivors: Vec<Shape> = chosen.into_iter().map(|i| offspring[i].clone()).collect();
        Ok(self.ranked(index, produced, survivors))
    }

    fn breed_pair(
        &self,
        parents: &[Shape],
        groups: &[Vec<PartGroup>],
        pool: &[(&Shape, &PartGroup)],
        a: usize,
        b: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Shape> {
        let (sa, sb) = (&parents[a], &parents[b]);
        let required = &self.config.labels;
        let cap = self.config.pair_offspring_cap;
        let lacking = missing(required, sa);
        let mut out = Vec::new();
        if lacking.is_empty() {
            let combos: Vec<(&PartGroup, &PartGroup)> = groups[a]
                .iter()
                .filter(|g| g.labels.is_disjoint(required))
                .flat_map(|ga| groups[b].iter().map(move |gb| (ga, gb)))
                .collect();
            for (ga, gb) in subsample(combos, cap.div_ceil(2), rng) {
                if let Ok((o1, o2)) = exchange(sa, ga, sb, gb) {
                    out.push(o1);
                    out.push(o2);
                }
            }
            out.truncate(cap);
        } else {
            let carriers: Vec<&PartGroup> = groups[b].iter().filter(|g| !g.labels.is_disjoint(&lacking)).collect();
            for gb in subsample(carriers, cap, rng) {
                let id = format!("{}+{}", sa.id(), sb.id());
                let Some(first) = self.add_group(sa, gb, sb, &id, rng) else {
                    continue;
                };
                let prov = first.provenance().cloned().expect("offspring carry provenance");
                if let Some(done) = self.insert_missing(first, pool, rng) {
                    let prov = lineage(prov, &done);
                    out.push(done.with_provenance(prov));
                }
            }
        }
        out
    }

    /// `host` gaining `group` from `donor`: by insertion, or else by
    /// exchange with a random host group that carries no constrained label.
    /// Fails if the result lost a constrained label the host had.
    fn add_group(
        &self,
        host: &Shape,
        group: &PartGroup,
        donor: &Shape,
        id: &str,
        rng: &mut ChaCha8Rng,
    ) -> Option<Shape> {
        let required = &self.config.labels;
        let host_groups: Vec<PartGroup> = enumerate_part_groups(host, self.config.max_groups)
            .into_iter()
            .filter(|g| !g.is_null())
            .collect();
        let result = insert(group, donor, host, &host_groups, id).ok().or_else(|| {
            let free: Vec<&PartGroup> = host_groups.iter().filter(|g| g.labels.is_disjoint(required)).collect();
            let target = free.get(rng.random_range(0..free.len().max(1)))?;
            replace_group(host, target, donor, group, id).ok()
        })?;
        let kept = required
            .intersection(&host.labels())
            .all(|l| result.labels().contains(l));
        kept.then_some(result)
    }

    /// Adds groups carrying each still-missing constrained label, drawn
    /// from `pool` in seeded random order. `None` if some label cannot be
    /// added.
    pub fn insert_missing(
        &self,
        mut candidate: Shape,
        pool: &[(&Shape, &PartGroup)],
        rng: &mut ChaCha8Rng,
    ) -> Option<Shape> {
        loop {
            let lacking = missing(&self.config.labels, &candidate);
            let Some(label) = lacking.first() else {
                return Some(candidate);
            };
            let mut carriers: Vec<&(&Shape, &PartGroup)> =
                pool.iter().filter(|(_, g)| g.labels.contains(label)).collect();
            carriers.shuffle(rng);
            let host_id = candidate.id().to_owned();
            let prefix = format!("{host_id}/");
            let next = carriers.into_iter().find_map(|(donor, g)| {
                if donor.id() == host_id {
                    return None;
                }
                let grown = self.add_group(&candidate, g, donor, &host_id, rng)?;
                let grown = grown
                    .map_part_ids(|id| PartId::from(id.as_str().strip_prefix(&prefix).unwrap_or(id.as_str())))
                    .ok()?;
                grown.labels().contains(label).then_some(grown)
            })?;
            candidate = next;
        }
    }

    /// Runs `generations` steps from `population`, letting `selector` pick
    /// the parents after each one. Generation 0 is not included.
    pub fn evolve(&self, population: Vec<Shape>, selector: &mut Selector) -> Result<Vec<Generation>> {
        let g0 = self.initial_generation(population)?;
        let mut parents = g0.shapes;
        let mut out = Vec::with_capacity(self.config.generations);
        for index in 1..=self.config.generations {
            let mut g = self.step(&parents, index)?;
            g.selected = selector(&g);
            parents = g.pick(&g.selected)?;
            out.push(g);
        }
        Ok(out)
    }
}
