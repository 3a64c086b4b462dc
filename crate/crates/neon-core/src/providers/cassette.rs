//! Record/replay of completions as JSON-lines of `{prompt_hash, response}`.
//!
//! Recording wraps a live client and appends every successful completion;
//! replay serves completions from a recorded file without any network.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{fnv1a64, CompletionParams, LlmClient, ProviderError};

#[derive(Debug, Serialize, Deserialize)]
struct CassetteRow {
    prompt_hash: String,
    response: String,
}

fn hash_key(prompt: &str) -> (u64, String) {
    let h = fnv1a64(prompt);
    (h, format!("{h:016x}"))
}

pub struct CassetteRecorder<C> {
    inner: C,
    file: Mutex<File>,
}

impl<C: LlmClient> CassetteRecorder<C> {
    pub fn create(inner: C, path: impl AsRef<Path>) -> std::io::Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        Ok(Self {
            inner,
            file: Mutex::new(file),
        })
    }
}

impl<C: LlmClient> LlmClient for CassetteRecorder<C> {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, ProviderError> {
        let response = self.inner.complete(prompt, params)?;
        let (_, key) = hash_key(prompt);
        let row = CassetteRow {
            prompt_hash: key,
            response: response.clone(),
        };
        let line = serde_json::to_string(&row)
            .map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
        let mut file = self.file.lock().expect("cassette lock");
        writeln!(file, "{line}").map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(response)
    }

    fn model_id(&self) -> &str {
        self.inner.model_id()
    }
}

pub struct CassetteReplay {
    responses: BTreeMap<u64, String>,
}

impl CassetteReplay {
    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut responses = BTreeMap::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: CassetteRow = serde_json::from_str(&line)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            let hash = u64::from_str_radix(&row.prompt_hash, 16)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            // Last write wins when a prompt was recorded twice.
            responses.insert(hash, row.response);
        }
        Ok(Self { responses })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl LlmClient for CassetteReplay {
    fn complete(&self, prompt: &str, _params: &CompletionParams) -> Result<String, ProviderError> {
        let (hash, _) = hash_key(prompt);
        self.responses
            .get(&hash)
            .cloned()
            .ok_or(ProviderError::CassetteMiss(hash))
    }

    fn model_id(&self) -> &str {
        "cassette-replay"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::mock::ScriptedLlm;

    #[test]
    fn record_then_replay_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cassette.jsonl");
        let mut scripted = ScriptedLlm::new();
        scripted.insert("ping", "pong");
        let recorder = CassetteRecorder::create(scripted, &path).unwrap();
        let p = CompletionParams::default();
        assert_eq!(recorder.complete("ping", &p).unwrap(), "pong");

        let replay = CassetteReplay::load(&path).unwrap();
        assert_eq!(replay.len(), 1);
        assert_eq!(replay.complete("ping", &p).unwrap(), "pong");
        assert!(matches!(
            replay.complete("unseen", &p),
            Err(ProviderError::CassetteMiss(_))
        ));
    }
}
