//! Logit files: `{"image_id": str, "subset": str, "logits": [floats]}`.

use std::fs;
use std::path::Path;

use ing_core::{LogitRecord, PartSet};
use serde::{Deserialize, Serialize};

use crate::error::{ProtocolError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogitFile {
    pub image_id: String,
    pub subset: String,
    pub logits: Vec<f64>,
}

pub fn parse_logits(text: &str, path: &Path, class_count: usize) -> Result<LogitRecord> {
    let file: LogitFile =
        serde_json::from_str(text).map_err(|e| ProtocolError::invalid(path, format!("invalid logits JSON: {e}")))?;
    let subset = PartSet::parse_key(&file.subset).map_err(|e| ProtocolError::core(path, e))?;
    LogitRecord::new(file.image_id, subset, file.logits, class_count).map_err(|e| ProtocolError::core(path, e))
}

pub fn read_logits(path: &Path, class_count: usize) -> Result<LogitRecord> {
    let text = fs::read_to_string(path).map_err(|e| ProtocolError::io(path, e))?;
    parse_logits(&text, path, class_count)
}

pub fn write_logits(path: &Path, record: &LogitRecord) -> Result<()> {
    let file = LogitFile {
        image_id: record.image_id().to_owned(),
        subset: record.variant().key(),
        logits: record.logits().to_vec(),
    };
    let text = serde_json::to_string(&file).map_err(|e| ProtocolError::invalid(path, e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| ProtocolError::io(path, e))
}
