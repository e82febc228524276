use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value as Json};

use super::OracleError;
use crate::space::Configuration;

pub const TIMEOUT_ENV: &str = "SLIMTUNE_ORACLE_TIMEOUT_SECS";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(24 * 3600);

const POLL: Duration = Duration::from_millis(20);

/// Evaluator behind a file-based protocol.
///
/// The command runs as `sh -c '<command> "$1" "$2"'` with the request path
/// and the response path. Requests are JSON lines
/// `{"id": n, "space_checksum": "..", "config": {..13 fields..}}`;
/// the evaluator writes one `{"id": n, "effectiveness": x}` line per request.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalOracle {
    command: String,
    timeout: Duration,
    space_checksum: String,
}

impl ExternalOracle {
    /// Timeout comes from the environment when set, otherwise 24 hours.
    pub fn new(command: impl Into<String>, space_checksum: impl Into<String>) -> Self {
        let timeout = std::env::var(TIMEOUT_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|s| s.is_finite() && *s > 0.0)
            .map(Duration::from_secs_f64)
            .unwrap_or(DEFAULT_TIMEOUT);
        Self {
            command: command.into(),
            timeout,
            space_checksum: space_checksum.into(),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// Sends every configuration in one request. Values come back clamped.
    pub fn evaluate_batch(&self, configs: &[Configuration]) -> Result<Vec<f64>, OracleError> {
        if configs.is_empty() {
            return Ok(Vec::new());
        }
        let dir = tempfile::tempdir().map_err(|e| OracleError::Io(e.to_string()))?;
        let request = dir.path().join("request.jsonl");
        let response = dir.path().join("response.jsonl");

        let mut body = Vec::new();
        for (id, c) in configs.iter().enumerate() {
            let line = json!({
                "id": id,
                "space_checksum": self.space_checksum,
                "config": Json::Object(c.to_json()),
            });
            writeln!(body, "{line}").expect("write to memory");
        }
        fs::write(&request, body).map_err(|e| OracleError::Io(e.to_string()))?;

        let stderr_log = dir.path().join("stderr.log");
        self.run(&request, &response, &stderr_log)?;

        let text = fs::read_to_string(&response)
            .map_err(|e| OracleError::MalformedResponse(format!("no response file: {e}")))?;
        parse_response(&text, configs.len())
    }

    fn run(&self, request: &Path, response: &Path, stderr_log: &Path) -> Result<(), OracleError> {
        let log = fs::File::create(stderr_log).map_err(|e| OracleError::Io(e.to_string()))?;
        let script = format!("{} \"$1\" \"$2\"", self.command);
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(script)
            .arg("sh")
            .arg(request)
            .arg(response)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::from(log))
            .spawn()
            .map_err(|e| OracleError::Spawn(e.to_string()))?;

        let start = Instant::now();
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if start.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(OracleError::Timeout(self.timeout));
                }
                Ok(None) => thread::sleep(POLL),
                Err(e) => return Err(OracleError::Io(e.to_string())),
            }
        };
        if !status.success() {
            let stderr = fs::read_to_string(stderr_log).unwrap_or_default();
            return Err(OracleError::ProcessFailed {
                status: status.code(),
                stderr: stderr.trim().to_string(),
            });
        }
        Ok(())
    }
}

fn parse_response(text: &str, expected: usize) -> Result<Vec<f64>, OracleError> {
    let mut by_id: HashMap<usize, f64> = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |why: &str| OracleError::MalformedResponse(format!("line {}: {why}", n + 1));
        let rec: Json = serde_json::from_str(line).map_err(|e| bad(&e.to_string()))?;
        let id = rec
            .get("id")
            .and_then(Json::as_u64)
            .ok_or_else(|| bad("missing integer `id`"))? as usize;
        let e = rec
            .get("effectiveness")
            .and_then(Json::as_f64)
            .ok_or_else(|| bad("missing numeric `effectiveness`"))?;
        if !e.is_finite() {
            return Err(bad("effectiveness is not finite"));
        }
        if id >= expected {
            return Err(OracleError::UnknownId(id));
        }
        if by_id.insert(id, e.clamp(0.0, 1.0)).is_some() {
            return Err(OracleError::DuplicateId(id));
        }
    }
    if by_id.len() != expected {
        let missing: Vec<usize> = (0..expected).filter(|i| !by_id.contains_key(i)).collect();
        return Err(OracleError::PartialResponse {
            expected,
            missing,
        });
    }
    Ok((0..expected).map(|i| by_id[&i]).collect())
}
