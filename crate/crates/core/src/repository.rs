//! Pipeline Repository: saved pipelines and their generated endpoints,
//! which the Inference Zoo lists.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Duration, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{validate_pipeline, PipelineGraph, ValidationReport};
use crate::rules::RuleSet;
use crate::store::{self, StoreError};

const ENDPOINT_ID_LEN: usize = 12;
const ENDPOINT_ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SavedPipeline {
    pub pipeline: PipelineGraph,
    pub endpoint_id: String,
    pub created_at: DateTime<Utc>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub endpoint_id: String,
    pub name: String,
    pub description: String,
    pub created_at: DateTime<Utc>,
    pub node_count: usize,
}

impl From<&SavedPipeline> for PipelineSummary {
    fn from(saved: &SavedPipeline) -> Self {
        Self {
            endpoint_id: saved.endpoint_id.clone(),
            name: saved.pipeline.name.clone(),
            description: saved.description.clone(),
            created_at: saved.created_at,
            node_count: saved.pipeline.nodes().len(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RepositoryError {
    #[error("pipeline is invalid ({} violation(s))", .0.violations.len())]
    InvalidPipeline(ValidationReport),
    #[error("pipeline endpoint `{0}` not found")]
    NotFound(String),
    #[error(transparent)]
    Storage(#[from] StoreError),
}

impl RepositoryError {
    pub fn code(&self) -> &'static str {
        match self {
            RepositoryError::InvalidPipeline(_) => "invalid-pipeline",
            RepositoryError::NotFound(_) => "not-found",
            RepositoryError::Storage(_) => "storage-failure",
        }
    }
}

/// Generates a 12-character lowercase alphanumeric endpoint token.
pub fn generate_endpoint_id() -> String {
    let mut rng = rand::rng();
    (0..ENDPOINT_ID_LEN)
        .map(|_| ENDPOINT_ALPHABET[rng.random_range(0..ENDPOINT_ALPHABET.len())] as char)
        .collect()
}

#[derive(Debug, Default)]
pub struct PipelineRepository {
    dir: Option<PathBuf>,
    records: RwLock<BTreeMap<String, Arc<SavedPipeline>>>,
    // Serializes saves so the created_at clock and id allocation stay consistent.
    save_lock: Mutex<Option<DateTime<Utc>>>,
}

impl PipelineRepository {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(dir: impl AsRef<Path>) -> Result<Self, RepositoryError> {
        let dir = dir.as_ref().to_path_buf();
        store::ensure_dir(&dir)?;
        let records: BTreeMap<_, _> = store::read_json_dir::<SavedPipeline>(&dir)?
            .into_iter()
            .map(|r| (r.endpoint_id.clone(), Arc::new(r)))
            .collect();
        let latest = records.values().map(|r| r.created_at).max();
        Ok(Self {
            dir: Some(dir),
            records: RwLock::new(records),
            save_lock: Mutex::new(latest),
        })
    }

    /// Validates and stores `pipeline`, returning its new endpoint id.
    pub fn save_pipeline(
        &self,
        pipeline: PipelineGraph,
        description: impl Into<String>,
        rules: &RuleSet,
    ) -> Result<String, RepositoryError> {
        let report = validate_pipeline(&pipeline, rules);
        if !report.ok {
            return Err(RepositoryError::InvalidPipeline(report));
        }

        let mut last = self.save_lock.lock().expect("repository lock poisoned");
        let mut created_at = Utc::now();
        if let Some(prev) = *last {
            // Strictly increasing timestamps keep newest-first listing total.
            if created_at <= prev {
                created_at = prev + Duration::microseconds(1);
            }
        }
        let endpoint_id = loop {
            let candidate = generate_endpoint_id();
            if !self
                .records
                .read()
                .expect("repository lock poisoned")
                .contains_key(&candidate)
            {
                break candidate;
            }
        };
        let record = SavedPipeline {
            pipeline,
            endpoint_id: endpoint_id.clone(),
            created_at,
            description: description.into(),
        };
        if let Some(dir) = &self.dir {
            store::write_json_atomic(dir, &endpoint_id, &record)?;
        }
        self.records
            .write()
            .expect("repository lock poisoned")
            .insert(endpoint_id.clone(), Arc::new(record));
        *last = Some(created_at);
        Ok(endpoint_id)
    }

    pub fn load_pipeline(&self, endpoint_id: &str) -> Result<Arc<SavedPipeline>, RepositoryError> {
        self.records
            .read()
            .expect("repository lock poisoned")
            .get(endpoint_id)
            .cloned()
            .ok_or_else(|| RepositoryError::NotFound(endpoint_id.to_string()))
    }

    /// Summaries of every saved pipeline, newest first.
    pub fn list_pipelines(&self) -> Vec<PipelineSummary> {
        let mut summaries: Vec<PipelineSummary> = self
            .records
            .read()
            .expect("repository lock poisoned")
            .values()
            .map(|r| PipelineSummary::from(r.as_ref()))
            .collect();
        summaries.sort_by(|a, b| {
            b.created_at
                .cmp(&a.created_at)
                .then_with(|| a.endpoint_id.cmp(&b.endpoint_id))
        });
        summaries
    }
}
