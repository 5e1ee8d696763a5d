//! JSON file forms for maps, models and environments.
//!
//! Relative paths inside a file are resolved against that file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::active::{Environment, EventAlphabet, Policy};
use crate::error::{Error, Result};
use crate::feature_map::{load_fsm_map, FeatureMap, MapFile};
use crate::source::{FsmxSource, Hmm};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::input(format!("{what} must be a non-empty rectangular table")));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn resolve(base: Option<&Path>, rel: &str) -> PathBuf {
    match base {
        Some(dir) => dir.join(rel),
        None => PathBuf::from(rel),
    }
}

/// Loads a map and insists on a memory bound.
pub fn bounded_map(file: &MapFile) -> Result<FeatureMap> {
    let (map, bound) = load_fsm_map(file)?;
    if !bound.bounded {
        return Err(Error::input(format!("map {} is not bounded-memory", map.id())));
    }
    Ok(map)
}

/// A maps file is a JSON array of map objects.
pub fn read_maps(path: &Path) -> Result<Vec<FeatureMap>> {
    let files: Vec<MapFile> = read_json(path)?;
    if files.is_empty() {
        return Err(Error::input(format!("{}: no maps", path.display())));
    }
    files.iter().map(bounded_map).collect()
}

pub fn maps_to_json(maps: &[FeatureMap]) -> Result<String> {
    to_json_pretty(&maps.iter().map(MapFile::from).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmFile {
    #[serde(rename = "T")]
    pub transition: Vec<Vec<f64>>,
    #[serde(rename = "E")]
    pub emission: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
}

impl HmmFile {
    pub fn build(&self) -> Result<Hmm> {
        Hmm::new(matrix(&self.transition, "T")?, matrix(&self.emission, "E")?, self.initial.clone())
    }
}

impl From<&Hmm> for HmmFile {
    fn from(h: &Hmm) -> Self {
        HmmFile {
            transition: rows(h.transition()),
            emission: rows(h.emission()),
            initial: h.initial().to_vec(),
        }
    }
}

/// `{map | map_ref, emit}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_ref: Option<String>,
    pub emit: Vec<Vec<f64>>,
}

impl SourceFile {
    pub fn build(&self, base: Option<&Path>) -> Result<FsmxSource> {
        let map = match (&self.map, &self.map_ref) {
            (Some(m), None) => bounded_map(m)?,
            (None, Some(r)) => bounded_map(&read_json(&resolve(base, r))?)?,
            _ => return Err(Error::input("source needs exactly one of `map` and `map_ref`")),
        };
        FsmxSource::new(map, matrix(&self.emit, "emit")?)
    }
}

impl From<&FsmxSource> for SourceFile {
    fn from(s: &FsmxSource) -> Self {
        SourceFile {
            map: Some(MapFile::from(s.map())),
            map_ref: None,
            emit: rows(s.emit()),
        }
    }
}

pub fn read_source(path: &Path) -> Result<FsmxSource> {
    read_json::<SourceFile>(path)?.build(path.parent())
}

/// Either model form, told apart by its fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelFile {
    Hmm(HmmFile),
    Source(SourceFile),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Hmm(Hmm),
    Source(FsmxSource),
}

pub fn read_model(path: &Path) -> Result<Model> {
    match read_json::<ModelFile>(path)? {
        ModelFile::Hmm(h) => Ok(Model::Hmm(h.build()?)),
        ModelFile::Source(s) => Ok(Model::Source(s.build(path.parent())?)),
    }
}

/// `emissions[state][action]` is a distribution over `o * |R| + r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentFile {
    pub actions: usize,
    pub observations: usize,
    pub rewards: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_map: Option<MapFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_map_ref: Option<String>,
    pub emissions: Vec<Vec<Vec<f64>>>,
}

impl EnvironmentFile {
    pub fn build(&self, base: Option<&Path>) -> Result<Environment> {
        let events = EventAlphabet::new(self.actions, self.observations, self.rewards)?;
        let map = match (&self.event_map, &self.event_map_ref) {
            (Some(m), None) => bounded_map(m)?,
            (None, Some(r)) => bounded_map(&read_json(&resolve(base, r))?)?,
            _ => return Err(Error::input("environment needs exactly one of `event_map` and `event_map_ref`")),
        };
        if self.emissions.len() != map.state_count() || self.emissions.iter().any(|s| s.len() != self.actions) {
            return Err(Error::input(format!(
                "emissions must be {} states x {} actions",
                map.state_count(),
                self.actions
            )));
        }
        Environment::new(events, map, self.emissions.iter().flatten().cloned().collect())
    }
}

impl From<&Environment> for EnvironmentFile {
    fn from(env: &Environment) -> Self {
        let ev = env.events();
        EnvironmentFile {
            actions: ev.actions,
            observations: ev.observations,
            rewards: ev.rewards,
            event_map: Some(MapFile::from(env.event_map())),
            event_map_ref: None,
            emissions: env.emissions().chunks(ev.actions).map(<[Vec<f64>]>::to_vec).collect(),
        }
    }
}

pub fn read_environment(path: &Path) -> Result<Environment> {
    read_json::<EnvironmentFile>(path)?.build(path.parent())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub table: Vec<Vec<f64>>,
}

impl PolicyFile {
    pub fn build(&self) -> Result<Policy> {
        Policy::new(matrix(&self.table, "policy table")?)
    }
}
