use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::DataKind;

/// Data moving along an edge. Text travels as UTF-8; audio and images as
/// base64 plus a format tag such as `wav` or `png`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payload {
    pub kind: DataKind,
    pub data: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PayloadError {
    #[error("{kind} payload is not valid base64: {reason}")]
    BadBase64 { kind: DataKind, reason: String },
    #[error("{0} payload has no format tag")]
    MissingFormat(DataKind),
}

impl Payload {
    pub fn text(data: impl Into<String>) -> Self {
        Self {
            kind: DataKind::Text,
            data: data.into(),
            format: None,
            metadata: BTreeMap::new(),
        }
    }

    /// Audio or image payload from raw bytes.
    pub fn binary(kind: DataKind, bytes: &[u8], format: impl Into<String>) -> Self {
        Self {
            kind,
            data: STANDARD.encode(bytes),
            format: Some(format.into()),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    /// Decoded bytes: UTF-8 for text, base64-decoded otherwise.
    pub fn bytes(&self) -> Result<Vec<u8>, PayloadError> {
        match self.kind {
            DataKind::Text => Ok(self.data.as_bytes().to_vec()),
            kind => STANDARD.decode(&self.data).map_err(|e| PayloadError::BadBase64 {
                kind,
                reason: e.to_string(),
            }),
        }
    }

    pub fn check(&self) -> Result<(), PayloadError> {
        if self.kind != DataKind::Text && self.format.as_deref().is_none_or(str::is_empty) {
            return Err(PayloadError::MissingFormat(self.kind));
        }
        self.bytes().map(|_| ())
    }
}

pub(crate) fn default_format(kind: DataKind) -> Option<&'static str> {
    match kind {
        DataKind::Text => None,
        DataKind::Audio => Some("wav"),
        DataKind::Image => Some("png"),
    }
}
