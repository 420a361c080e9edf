//! Model Hub: the registry of API-backed models the builder and executor
//! draw from.
//!
//! Entries persist as one JSON document each under the hub directory; the
//! in-memory index is rebuilt from those documents on [`ModelHub::open`].
//! Writes are serialized behind the index's write lock and only become
//! visible after the document is on disk.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DataKind, NodeKind};
use crate::rules::{LanguagePair, LanguageSupport, ModelCatalog, ModelSupport};
use crate::store::{self, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Api,
    Repository,
}

/// How to call a model's API.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestTemplate {
    pub method: String,
    pub path: String,
    pub payload_field: String,
    pub response_field: String,
}

impl Default for RequestTemplate {
    fn default() -> Self {
        Self {
            method: "POST".to_string(),
            path: "/infer".to_string(),
            payload_field: "data".to_string(),
            response_field: "data".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ModelEntryDoc")]
pub struct ModelEntry {
    /// Assigned by [`ModelHub::register_model`].
    pub id: String,
    pub name: String,
    pub version: String,
    pub task: NodeKind,
    pub supported_pairs: Vec<LanguageSupport>,
    pub backend: Backend,
    pub endpoint: Option<String>,
    pub request_template: RequestTemplate,
    pub input_kind: DataKind,
    pub output_kind: DataKind,
}

/// Wire form of [`ModelEntry`]: the port kinds may be omitted and are then
/// derived from the task.
#[derive(Deserialize)]
struct ModelEntryDoc {
    #[serde(default)]
    id: String,
    name: String,
    version: String,
    task: NodeKind,
    supported_pairs: Vec<LanguageSupport>,
    backend: Backend,
    #[serde(default)]
    endpoint: Option<String>,
    #[serde(default)]
    request_template: RequestTemplate,
    #[serde(default)]
    input_kind: Option<DataKind>,
    #[serde(default)]
    output_kind: Option<DataKind>,
}

impl TryFrom<ModelEntryDoc> for ModelEntry {
    type Error = String;

    fn try_from(doc: ModelEntryDoc) -> Result<Self, Self::Error> {
        let (input, output) = match (doc.task.model_ports(), doc.input_kind, doc.output_kind) {
            (Some((i, o)), None, None) => (i, o),
            (_, Some(i), Some(o)) => (i, o),
            (Some((i, o)), i2, o2) => (i2.unwrap_or(i), o2.unwrap_or(o)),
            (None, _, _) => return Err(format!("task `{}` is not a model task", doc.task)),
        };
        Ok(ModelEntry {
            id: doc.id,
            name: doc.name,
            version: doc.version,
            task: doc.task,
            supported_pairs: doc.supported_pairs,
            backend: doc.backend,
            endpoint: doc.endpoint,
            request_template: doc.request_template,
            input_kind: input,
            output_kind: output,
        })
    }
}

impl ModelEntry {
    /// API-backed entry with the default request template.
    pub fn api(
        name: impl Into<String>,
        version: impl Into<String>,
        task: NodeKind,
        supported_pairs: Vec<LanguageSupport>,
        endpoint: impl Into<String>,
    ) -> Self {
        let (input_kind, output_kind) = task.model_ports().unwrap_or((DataKind::Text, DataKind::Text));
        Self {
            id: String::new(),
            name: name.into(),
            version: version.into(),
            task,
            supported_pairs,
            backend: Backend::Api,
            endpoint: Some(endpoint.into()),
            request_template: RequestTemplate::default(),
            input_kind,
            output_kind,
        }
    }

    /// Every invariant the entry breaks; empty when valid.
    pub fn problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.name.is_empty() {
            problems.push("name is empty".to_string());
        }
        if self.version.is_empty() {
            problems.push("version is empty".to_string());
        }
        match self.task.model_ports() {
            None => problems.push(format!("task `{}` is not a model task", self.task)),
            Some((i, o)) => {
                if (self.input_kind, self.output_kind) != (i, o) {
                    problems.push(format!(
                        "port kinds {}->{} do not match task `{}` ({i}->{o})",
                        self.input_kind, self.output_kind, self.task
                    ));
                }
            }
        }
        if self.backend == Backend::Api && self.endpoint.as_deref().is_none_or(str::is_empty) {
            problems.push("api-backed entry has no endpoint".to_string());
        }
        if self.supported_pairs.is_empty() {
            problems.push("supported_pairs is empty".to_string());
        }
        for support in &self.supported_pairs {
            match (self.task, support) {
                (NodeKind::Mt, LanguageSupport::Pair(pair)) if pair.is_valid() => {}
                (NodeKind::Mt, _) => problems.push(format!("mt entry needs non-empty language pairs, got {support:?}")),
                (_, LanguageSupport::Single(lang)) if !lang.is_empty() => {}
                _ => problems.push(format!(
                    "{} entry needs non-empty language tags, got {support:?}",
                    self.task
                )),
            }
        }
        let t = &self.request_template;
        if [&t.method, &t.path, &t.payload_field, &t.response_field]
            .iter()
            .any(|f| f.is_empty())
        {
            problems.push("request_template has an empty field".to_string());
        }
        if t.method != "POST" {
            problems.push(format!("request_template method `{}` is not POST", t.method));
        }
        problems
    }

    pub fn supports_pair(&self, pair: &LanguagePair) -> bool {
        self.supported_pairs
            .iter()
            .any(|s| matches!(s, LanguageSupport::Pair(p) if p == pair))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFilter {
    pub task: Option<NodeKind>,
    pub pair: Option<LanguagePair>,
}

impl ModelFilter {
    pub fn matches(&self, entry: &ModelEntry) -> bool {
        self.task.is_none_or(|t| entry.task == t) && self.pair.as_ref().is_none_or(|p| entry.supports_pair(p))
    }
}

#[derive(Debug, Error)]
pub enum HubError {
    #[error("model {name}@{version} is already registered")]
    DuplicateNameVersion { name: String, version: String },
    #[error("invalid model entry: {}", .0.join("; "))]
    InvalidEntry(Vec<String>),
    #[error("model `{0}` not found")]
    NotFound(String),
    #[error(transparent)]
    Storage(#[from] StoreError),
}

impl HubError {
    pub fn code(&self) -> &'static str {
        match self {
            HubError::DuplicateNameVersion { .. } => "duplicate-name-version",
            HubError::InvalidEntry(_) => "invalid-entry",
            HubError::NotFound(_) => "not-found",
            HubError::Storage(_) => "storage-failure",
        }
    }
}

#[derive(Debug, Default)]
pub struct ModelHub {
    dir: Option<PathBuf>,
    entries: RwLock<BTreeMap<String, ModelEntry>>,
}

impl ModelHub {
    /// Hub without persistence.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) a hub directory and indexes its entries.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, HubError> {
        let dir = dir.as_ref().to_path_buf();
        store::ensure_dir(&dir)?;
        let entries = store::read_json_dir::<ModelEntry>(&dir)?
            .into_iter()
            .map(|e| (e.id.clone(), e))
            .collect();
        Ok(Self {
            dir: Some(dir),
            entries: RwLock::new(entries),
        })
    }

    pub fn register_model(&self, mut entry: ModelEntry) -> Result<String, HubError> {
        let problems = entry.problems();
        if !problems.is_empty() {
            return Err(HubError::InvalidEntry(problems));
        }
        let mut entries = self.entries.write().expect("hub lock poisoned");
        if entries
            .values()
            .any(|e| e.name == entry.name && e.version == entry.version)
        {
            return Err(HubError::DuplicateNameVersion {
                name: entry.name,
                version: entry.version,
            });
        }
        entry.id = uuid::Uuid::new_v4().simple().to_string();
        if let Some(dir) = &self.dir {
            store::write_json_atomic(dir, &entry.id, &entry)?;
        }
        let id = entry.id.clone();
        entries.insert(id.clone(), entry);
        Ok(id)
    }

    pub fn get_model(&self, id: &str) -> Result<ModelEntry, HubError> {
        self.entries
            .read()
            .expect("hub lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| HubError::NotFound(id.to_string()))
    }

    /// Entries matching every field of `filter`, ordered by (name, version).
    pub fn list_models(&self, filter: &ModelFilter) -> Vec<ModelEntry> {
        let mut found: Vec<ModelEntry> = self
            .entries
            .read()
            .expect("hub lock poisoned")
            .values()
            .filter(|e| filter.matches(e))
            .cloned()
            .collect();
        found.sort_by(|a, b| (&a.name, &a.version).cmp(&(&b.name, &b.version)));
        found
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("hub lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> HashSet<String> {
        self.entries
            .read()
            .expect("hub lock poisoned")
            .keys()
            .cloned()
            .collect()
    }
}

impl ModelCatalog for ModelHub {
    fn model_support(&self, model_ref: &str) -> Option<ModelSupport> {
        let entries = self.entries.read().expect("hub lock poisoned");
        entries.get(model_ref).map(|e| ModelSupport {
            task: e.task,
            languages: e.supported_pairs.clone(),
        })
    }
}
