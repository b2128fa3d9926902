//! Sessions persisted as directories: `session.json` next to the
//! `gen_<i>/` folders written by the evolution output module.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Component, Path, PathBuf};
use std::sync::Mutex;

use fame_core::evolution::{
    generation_dir, read_generation, read_manifest, write_generation, EvolutionConfig, Evolver, Generation,
};
use fame_core::functionality::{ensure_labeled, ModelSet};
use fame_core::shape::io::load_population;
use fame_core::{fixtures, Label, Shape};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::ServiceError;

type Result<T> = std::result::Result<T, ServiceError>;

pub const SESSION_FILE: &str = "session.json";

/// Dataset name that resolves to the built-in four-shape population.
pub const FIXTURE_DATASET: &str = "fixtures";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionStatus {
    AwaitingSelection,
    Evolving,
    Done,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub index: usize,
    pub produced: usize,
    pub size: usize,
    pub labels: Vec<Label>,
    /// Parents picked from this generation, once the session moved on.
    pub selected: Vec<String>,
    pub top: Option<String>,
}

impl GenerationSummary {
    fn of(g: &Generation) -> GenerationSummary {
        GenerationSummary {
            index: g.index,
            produced: g.produced,
            size: g.shapes.len(),
            labels: g.labels.iter().cloned().collect(),
            selected: g.selected.clone(),
            top: g.shapes.first().map(|s| s.id().to_owned()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub dataset: String,
    pub config: EvolutionConfig,
    pub status: SessionStatus,
    pub generations: Vec<GenerationSummary>,
    /// Labels present in the input population; the only valid constraints.
    pub available_labels: Vec<Label>,
    #[serde(default)]
    pub error: Option<String>,
}

/// Work accepted by [`SessionStore::begin_advance`].
#[derive(Clone, Debug)]
pub struct AdvanceJob {
    pub session_id: String,
    pub selected: Vec<String>,
    pub config: EvolutionConfig,
    pub index: usize,
}

pub struct SessionStore {
    root: PathBuf,
    datasets: PathBuf,
    models: ModelSet,
    /// Serializes status transitions; readers never take it.
    transitions: Mutex<()>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(ServiceError::internal)?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text).map_err(ServiceError::internal)?;
    fs::rename(&tmp, path).map_err(ServiceError::internal)
}

impl SessionStore {
    /// Opens (creating if needed) the session root. Sessions left
    /// `Evolving` by a previous process lost their running step and are
    /// reopened for selection.
    pub fn open(root: impl Into<PathBuf>, datasets: impl Into<PathBuf>, models: ModelSet) -> Result<SessionStore> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(ServiceError::internal)?;
        let store = SessionStore {
            root,
            datasets: datasets.into(),
            models,
            transitions: Mutex::new(()),
        };
        for entry in fs::read_dir(&store.root).map_err(ServiceError::internal)? {
            let dir = entry.map_err(ServiceError::internal)?.path();
            let Some(id) = dir.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let Ok(mut state) = store.get(id) else { continue };
            if state.status == SessionStatus::Evolving {
                state.status = SessionStatus::Error;
                state.error = Some("the server stopped while this generation was evolving".into());
                store.save(&state)?;
            }
        }
        Ok(store)
    }

    fn session_dir(&self, id: &str) -> Result<PathBuf> {
        let uuid = Uuid::parse_str(id).map_err(|_| ServiceError::UnknownSession(id.to_owned()))?;
        let dir = self.root.join(uuid.to_string());
        if !dir.join(SESSION_FILE).is_file() {
            return Err(ServiceError::UnknownSession(id.to_owned()));
        }
        Ok(dir)
    }

    fn save(&self, state: &SessionState) -> Result<()> {
        write_json(&self.root.join(&state.session_id).join(SESSION_FILE), state)
    }

    fn load_dataset(&self, dataset: &str) -> Result<Vec<Shape>> {
        if dataset == FIXTURE_DATASET {
            return Ok(fixtures::population());
        }
        let rel = Path::new(dataset);
        if dataset.is_empty() || !rel.components().all(|c| matches!(c, Component::Normal(_))) {
            return Err(ServiceError::InvalidRequest(format!(
                "dataset must be `{FIXTURE_DATASET}` or a directory name under the dataset root"
            )));
        }
        load_population(self.datasets.join(rel)).map_err(|e| ServiceError::DatasetInvalid {
            dataset: dataset.to_owned(),
            detail: e.to_string(),
        })
    }

    pub fn create(&self, dataset: &str, config: EvolutionConfig) -> Result<SessionState> {
        let evolver = Evolver::new(config.clone(), self.models.clone())
            .map_err(|e| ServiceError::InvalidRequest(e.to_string()))?;
        let population: Vec<Shape> = self
            .load_dataset(dataset)?
            .into_iter()
            .map(|s| ensure_labeled(s, &self.models))
            .collect();
        let available: BTreeSet<Label> = population.iter().flat_map(|s| s.labels()).collect();
        if let Some(missing) = config.labels.difference(&available).next() {
            return Err(ServiceError::InvalidRequest(format!(
                "label `{missing}` does not occur in the dataset"
            )));
        }
        let g0 = evolver
            .initial_generation(population)
            .map_err(|e| ServiceError::DatasetInvalid {
                dataset: dataset.to_owned(),
                detail: e.to_string(),
            })?;

        let session_id = Uuid::new_v4().to_string();
        let dir = self.root.join(&session_id);
        write_generation(&g0, &dir).map_err(ServiceError::internal)?;
        let state = SessionState {
            session_id,
            dataset: dataset.to_owned(),
            config,
            status: SessionStatus::AwaitingSelection,
            generations: vec![GenerationSummary::of(&g0)],
            available_labels: available.into_iter().collect(),
            error: None,
        };
        self.save(&state)?;
        Ok(state)
    }

    pub fn get(&self, id: &str) -> Result<SessionState> {
        let path = self.session_dir(id)?.join(SESSION_FILE);
        let text = fs::read_to_string(&path).map_err(ServiceError::internal)?;
        serde_json::from_str(&text).map_err(ServiceError::internal)
    }

    /// A committed generation, shapes in ranked order.
    pub fn generation(&self, id: &str, index: usize) -> Result<Generation> {
        let state = self.get(id)?;
        if index >= state.generations.len() {
            return Err(ServiceError::UnknownGeneration(index.to_string()));
        }
        read_generation(&self.session_dir(id)?, index).map_err(ServiceError::internal)
    }

    /// Validates an advance request and moves the session to `Evolving`.
    /// Only one advance per session can be in flight.
    pub fn begin_advance(&self, id: &str, selected: Vec<String>, labels: Option<Vec<Label>>) -> Result<AdvanceJob> {
        let _guard = self.transitions.lock().expect("transition lock poisoned");
        let mut state = self.get(id)?;
        if !matches!(state.status, SessionStatus::AwaitingSelection | SessionStatus::Error) {
            return Err(ServiceError::WrongStatus(state.status));
        }
        let latest = state.generations.len() - 1;
        let manifest =
            read_manifest(&generation_dir(&self.session_dir(id)?, latest)).map_err(ServiceError::internal)?;
        let known: BTreeSet<&str> = manifest.shapes.iter().map(|e| e.id.as_str()).collect();
        if let Some(unknown) = selected.iter().find(|s| !known.contains(s.as_str())) {
            return Err(ServiceError::UnknownShapeId(unknown.clone()));
        }
        let unique: BTreeSet<&String> = selected.iter().collect();
        if unique.len() != selected.len() || unique.len() < 2 {
            return Err(ServiceError::InvalidRequest(
                "select at least two distinct shapes".into(),
            ));
        }
        if let Some(labels) = labels {
            let labels: BTreeSet<Label> = labels.into_iter().collect();
            if let Some(l) = labels.iter().find(|l| !state.available_labels.contains(l)) {
                return Err(ServiceError::InvalidRequest(format!(
                    "label `{l}` does not occur in the dataset"
                )));
            }
            state.config.labels = labels;
        }
        state.status = SessionStatus::Evolving;
        state.error = None;
        self.save(&state)?;
        Ok(AdvanceJob {
            session_id: state.session_id,
            selected,
            config: state.config,
            index: latest + 1,
        })
    }

    /// Breeds and commits the next generation. Blocking; failures are
    /// recorded in the session rather than returned.
    pub fn run_advance(&self, job: AdvanceJob) -> Result<SessionState> {
        let outcome = self.breed(&job);
        let _guard = self.transitions.lock().expect("transition lock poisoned");
        let mut state = self.get(&job.session_id)?;
        match outcome {
            Ok(g) => {
                state.generations[job.index - 1].selected = job.selected.clone();
                state.generations.push(GenerationSummary::of(&g));
                state.status = if job.index >= state.config.generations {
                    SessionStatus::Done
                } else {
                    SessionStatus::AwaitingSelection
                };
                tracing::info!(session = %job.session_id, generation = job.index, size = g.shapes.len(), "generation committed");
            }
            Err(e) => {
                tracing::warn!(session = %job.session_id, error = %e, "advance failed");
                state.status = SessionStatus::Error;
                state.error = Some(e.to_string());
            }
        }
        self.save(&state)?;
        Ok(state)
    }

    fn breed(&self, job: &AdvanceJob) -> std::result::Result<Generation, String> {
        let dir = self.session_dir(&job.session_id).map_err(|e| e.to_string())?;
        let previous = read_generation(&dir, job.index - 1).map_err(|e| e.to_string())?;
        let parents = previous.pick(&job.selected).map_err(|e| e.to_string())?;
        let evolver = Evolver::new(job.config.clone(), self.models.clone()).map_err(|e| e.to_string())?;
        let g = evolver.step(&parents, job.index).map_err(|e| e.to_string())?;
        write_generation(&g, &dir).map_err(|e| e.to_string())?;
        let manifest_dir = generation_dir(&dir, job.index - 1);
        let mut manifest = read_manifest(&manifest_dir).map_err(|e| e.to_string())?;
        manifest.selected = job.selected.clone();
        write_json(&manifest_dir.join("manifest.json"), &manifest).map_err(|e| e.to_string())?;
        Ok(g)
    }

    /// OBJ path of a shape reference `<session>:<generation>:<shape id>`.
    pub fn shape_path(&self, shape_ref: &str) -> Result<PathBuf> {
        let unknown = || ServiceError::UnknownShapeId(shape_ref.to_owned());
        let mut it = shape_ref.splitn(3, ':');
        let (Some(session), Some(index), Some(shape)) = (it.next(), it.next(), it.next()) else {
            return Err(unknown());
        };
        let index: usize = index.parse().map_err(|_| unknown())?;
        let state = self.get(session)?;
        if index >= state.generations.len() {
            return Err(ServiceError::UnknownGeneration(index.to_string()));
        }
        let dir = generation_dir(&self.session_dir(session)?, index);
        let manifest = read_manifest(&dir).map_err(ServiceError::internal)?;
        if !manifest.shapes.iter().any(|e| e.id == shape) {
            return Err(unknown());
        }
        Ok(dir.join(format!("{shape}.obj")))
    }
}

pub fn shape_ref(session: &str, index: usize, shape: &str) -> String {
    format!("{session}:{index}:{shape}")
}
