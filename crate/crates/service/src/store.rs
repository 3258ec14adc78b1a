//! On-disk layout of a service store:
//!
//! ```text
//! <root>/datasets/<id>/dataset.json   registration record
//! <root>/datasets/<id>/data.txt       transactions as uploaded
//! <root>/datasets/<id>/patterns.txt   pattern file, when one was uploaded
//! <root>/sessions/<id>.json           session record with its full state
//! ```
//!
//! Every write goes to a temporary file that is synced and renamed over the
//! target, so a crash leaves either the old or the new document.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use ipd_core::model::PatternKind;
use ipd_core::session::{SessionConfig, SessionState};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};

/// How the patterns of a registered dataset are obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum PatternSource {
    /// Closed itemsets mined on load.
    Mined { min_support: usize },
    /// `patterns.txt` in the dataset directory.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub dataset_id: String,
    pub name: String,
    pub kind: PatternKind,
    /// Items that encode the class inside each itemset transaction.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub label_items: Vec<String>,
    pub patterns: PatternSource,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub format: String,
    pub session_id: String,
    pub dataset_id: String,
    pub config: SessionConfig,
    pub state: SessionState,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

pub const SESSION_FORMAT: &str = "ipd-session/1";

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> ApiResult<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("datasets"))?;
        fs::create_dir_all(root.join("sessions"))?;
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dataset_dir(&self, id: &str) -> PathBuf {
        self.root.join("datasets").join(id)
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.json"))
    }

    pub fn save_dataset(
        &self,
        record: &DatasetRecord,
        data: &str,
        patterns: Option<&str>,
    ) -> ApiResult<()> {
        let dir = self.dataset_dir(&record.dataset_id);
        fs::create_dir_all(&dir)?;
        write_atomic(&dir.join("data.txt"), data.as_bytes())?;
        if let Some(text) = patterns {
            write_atomic(&dir.join("patterns.txt"), text.as_bytes())?;
        }
        // the record goes last: a dataset without one is incomplete and ignored
        write_json(&dir.join("dataset.json"), record)
    }

    pub fn load_dataset(&self, id: &str) -> ApiResult<(DatasetRecord, String, Option<String>)> {
        if !valid_id(id) {
            return Err(ApiError::not_found("dataset", id));
        }
        let dir = self.dataset_dir(id);
        let record: DatasetRecord = read_json(&dir.join("dataset.json")).map_err(|e| match e {
            ApiError::Io(err) if err.kind() == std::io::ErrorKind::NotFound => {
                ApiError::not_found("dataset", id)
            }
            other => other,
        })?;
        let data = fs::read_to_string(dir.join("data.txt"))?;
        let patterns = match record.patterns {
            PatternSource::File => Some(fs::read_to_string(dir.join("patterns.txt"))?),
            PatternSource::Mined { .. } => None,
        };
        Ok((record, data, patterns))
    }

    pub fn save_session(&self, record: &SessionRecord) -> ApiResult<()> {
        write_json(&self.session_path(&record.session_id), record)
    }

    pub fn load_session(&self, id: &str) -> ApiResult<SessionRecord> {
        if !valid_id(id) {
            return Err(ApiError::not_found("session", id));
        }
        let path = self.session_path(id);
        if !path.exists() {
            return Err(ApiError::not_found("session", id));
        }
        let record: SessionRecord = read_json(&path)?;
        if record.format != SESSION_FORMAT {
            return Err(ApiError::Corrupt(format!(
                "{} has format {:?}",
                path.display(),
                record.format
            )));
        }
        Ok(record)
    }
}

/// Ids are generated as UUIDs; anything else cannot name a stored file.
fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> ApiResult<()> {
    let bytes = serde_json::to_vec_pretty(value)?;
    write_atomic(path, &bytes)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> ApiResult<T> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| ApiError::Corrupt(format!("{}: {e}", path.display())))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> ApiResult<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    if let Some(dir) = path.parent() {
        // directory fsync makes the rename itself durable; not supported everywhere
        if let Ok(d) = File::open(dir) {
            let _ = d.sync_all();
        }
    }
    Ok(())
}
