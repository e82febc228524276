//! Line-delimited artifacts: the Pareto-front file and the fit audit table.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use slimtune::tuner::ObjectiveVector;

use crate::error::CliError;

/// One member of the front file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRecord {
    pub config: Map<String, Json>,
    pub size_bytes: u64,
    pub size_mb: f64,
    pub gflops: f64,
    pub effectiveness: f64,
    pub effectiveness_variance: f64,
}

impl FrontRecord {
    pub fn objectives(&self) -> ObjectiveVector {
        ObjectiveVector::new(self.size_mb, self.gflops, self.effectiveness)
    }
}

/// Smallest first; ties by GFLOPs, then higher effectiveness.
pub fn sort_front(records: &mut [FrontRecord]) {
    records.sort_by(|a, b| {
        a.size_mb
            .total_cmp(&b.size_mb)
            .then(a.gflops.total_cmp(&b.gflops))
            .then(b.effectiveness.total_cmp(&a.effectiveness))
            .then_with(|| Json::Object(a.config.clone()).to_string().cmp(&Json::Object(b.config.clone()).to_string()))
    });
}

pub fn to_jsonl<T: Serialize>(rows: &[T]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

pub fn read_front(path: &Path) -> Result<Vec<FrontRecord>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::Parse(format!("{}:{}: {e}", path.display(), n + 1)))
        })
        .collect()
}

/// `front.jsonl` + `log.jsonl` -> `front.log.jsonl`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
