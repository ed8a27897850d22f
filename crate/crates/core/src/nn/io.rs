//! Self-describing JSON model documents.
//!
//! ```text
//! { "format": "dr-model", "schema_version": 1, "kind": "fnn",
//!   "architecture": "fnn[32,32]", "model": { ...parameters, frame... } }
//! ```
//! Matrices are stored as `{rows, cols, data}` with `data` in row-major order.

use std::path::Path;

use serde_json::{json, Value};

use super::{Model, ModelKind};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;
const FORMAT_TAG: &str = "dr-model";

pub fn model_to_json(model: &Model) -> String {
    let payload = match model {
        Model::Linear(m) => serde_json::to_value(m),
        Model::Fnn(m) => serde_json::to_value(m),
        Model::Rnn(m) => serde_json::to_value(m),
        Model::Lstm(m) => serde_json::to_value(m),
    }
    .expect("model parameters serialize");
    let doc = json!({
        "format": FORMAT_TAG,
        "schema_version": SCHEMA_VERSION,
        "kind": model.kind(),
        "architecture": model.architecture(),
        "model": payload,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("json value serializes");
    text.push('\n');
    text
}

pub fn model_from_json(text: &str) -> Result<Model> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| Error::Schema(format!("not a valid JSON document: {e}")))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::Schema("top level must be an object".into()))?;
    match obj.get("format").and_then(Value::as_str) {
        Some(FORMAT_TAG) => {}
        other => {
            return Err(Error::Schema(format!(
                "field 'format' must be \"{FORMAT_TAG}\", got {other:?}"
            )))
        }
    }
    let version = obj
        .get("schema_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Schema("missing integer field 'schema_version'".into()))?;
    if version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: version,
            expected: SCHEMA_VERSION,
        });
    }
    let kind_str = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Schema("missing string field 'kind'".into()))?;
    let kind: ModelKind = kind_str
        .parse()
        .map_err(|_| Error::Schema(format!("unknown model kind '{kind_str}'")))?;
    let payload = obj
        .get("model")
        .cloned()
        .ok_or_else(|| Error::Schema("missing object field 'model'".into()))?;
    let mismatch = |e: serde_json::Error| Error::KindMismatch {
        kind: kind.to_string(),
        detail: e.to_string(),
    };
    let model = match kind {
        ModelKind::Linear => Model::Linear(serde_json::from_value(payload).map_err(mismatch)?),
        ModelKind::Fnn => Model::Fnn(serde_json::from_value(payload).map_err(mismatch)?),
        ModelKind::Rnn => Model::Rnn(serde_json::from_value(payload).map_err(mismatch)?),
        ModelKind::Lstm => Model::Lstm(serde_json::from_value(payload).map_err(mismatch)?),
    };
    model.check()?;
    if let Some(arch) = obj.get("architecture").and_then(Value::as_str) {
        if arch != model.architecture() {
            return Err(Error::DimensionInconsistency(format!(
                "declared architecture {arch} but parameters describe {}",
                model.architecture()
            )));
        }
    }
    Ok(model)
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    crate::pipeline::write_atomic(path.as_ref(), model_to_json(model).as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}
