use serde::{Deserialize, Serialize};

use super::payload::Payload;
use super::ExecError;
use crate::graph::{DataKind, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    TextCleanup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterSpec {
    pub transform: Transform,
}

impl AdapterSpec {
    pub fn new(transform: Transform) -> Self {
        Self { transform }
    }

    pub fn from_node(node: &Node) -> Option<Self> {
        let transform = match node.properties.get("transform")?.as_str() {
            "identity" => Transform::Identity,
            "text_cleanup" => Transform::TextCleanup,
            _ => return None,
        };
        Some(Self { transform })
    }

    /// Accepted input kind; `None` means any.
    pub fn in_kind(&self) -> Option<DataKind> {
        match self.transform {
            Transform::Identity => None,
            Transform::TextCleanup => Some(DataKind::Text),
        }
    }

    pub fn out_kind(&self, input: DataKind) -> DataKind {
        match self.transform {
            Transform::Identity => input,
            Transform::TextCleanup => DataKind::Text,
        }
    }
}

// Zero-width and BOM characters that survive `char::is_control`.
fn is_invisible_format(c: char) -> bool {
    matches!(c, '\u{00AD}' | '\u{200B}'..='\u{200F}' | '\u{2060}'..='\u{2064}' | '\u{FEFF}')
}

/// Drops control and invisible format characters (whitespace controls
/// count as whitespace), collapses whitespace runs to one space and trims.
pub fn clean_text(input: &str) -> String {
    let mut out = String::with_capacity(input.len());
    let mut pending_space = false;
    for c in input.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else if c.is_control() || is_invisible_format(c) {
            continue;
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

pub fn apply_adapter(spec: &AdapterSpec, payload: Payload) -> Result<Payload, ExecError> {
    if let Some(expected) = spec.in_kind() {
        if payload.kind != expected {
            return Err(ExecError::KindMismatch {
                expected,
                actual: payload.kind,
            });
        }
    }
    match spec.transform {
        Transform::Identity => Ok(payload),
        Transform::TextCleanup => Ok(Payload {
            data: clean_text(&payload.data),
            ..payload
        }),
    }
}
