//! Chat backends: live HTTP, transcript replay, recording, and scripted.

use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Name and JSON schema of the document the model must answer with.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseFormat {
    pub name: &'static str,
    pub schema: Json,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("no recorded response left for request {0}")]
    NoRecordedResponse(String),
    #[error("{0}")]
    Http(String),
    #[error("{0}")]
    BadResponse(String),
}

impl From<BackendError> for Error {
    fn from(e: BackendError) -> Self {
        Error::BackendUnavailable(e.to_string())
    }
}

pub trait ChatBackend: Send + Sync {
    fn send(&self, messages: &[ChatMessage], format: &ResponseFormat) -> Result<String, BackendError>;

    /// Short identity string, e.g. `live:gpt-4o-mini` or `replay`.
    fn fingerprint(&self) -> String;
}

/// Hex SHA-256 over the canonical JSON of messages plus response format.
/// Replay keys responses by this value.
pub fn request_digest(messages: &[ChatMessage], format: &ResponseFormat) -> String {
    let doc = json!({
        "messages": messages,
        "response_format": { "name": format.name, "schema": format.schema },
    });
    let bytes = serde_json::to_vec(&doc).expect("json values serialize");
    hex::encode(Sha256::digest(bytes))
}

pub const TRANSCRIPT_FORMAT: &str = "kgmap-transcript/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub digest: String,
    /// Response format name, for readers of the file; not part of the key.
    pub format: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub format: String,
    pub records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn new(records: Vec<TranscriptRecord>) -> Self {
        Self {
            format: TRANSCRIPT_FORMAT.into(),
            records,
        }
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let t: Transcript = serde_json::from_str(&text)
            .map_err(|e| Error::ConfigInvalid(format!("transcript {}: {e}", path.display())))?;
        if t.format != TRANSCRIPT_FORMAT {
            return Err(Error::ConfigInvalid(format!(
                "transcript {} has format {}, expected {TRANSCRIPT_FORMAT}",
                path.display(),
                t.format
            )));
        }
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        let mut text = serde_json::to_string_pretty(self).expect("transcript serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::TranscriptWriteFailed(format!("{}: {e}", path.display())))
    }
}

/// Answers from a transcript. Each digest has its own queue, consumed in
/// recorded order.
pub struct ReplayBackend {
    queues: Mutex<HashMap<String, VecDeque<String>>>,
}

impl ReplayBackend {
    pub fn new(transcript: Transcript) -> Self {
        let mut queues: HashMap<String, VecDeque<String>> = HashMap::new();
        for r in transcript.records {
            queues.entry(r.digest).or_default().push_back(r.response);
        }
        Self {
            queues: Mutex::new(queues),
        }
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Ok(Self::new(Transcript::load(path)?))
    }
}

impl ChatBackend for ReplayBackend {
    fn send(&self, messages: &[ChatMessage], format: &ResponseFormat) -> Result<String, BackendError> {
        let digest = request_digest(messages, format);
        let mut queues = self.queues.lock().expect("replay lock");
        queues
            .get_mut(&digest)
            .and_then(VecDeque::pop_front)
            .ok_or(BackendError::NoRecordedResponse(digest))
    }

    fn fingerprint(&self) -> String {
        "replay".into()
    }
}

/// Passes requests to another backend and keeps every exchange.
pub struct RecordingBackend<B> {
    inner: B,
    records: Mutex<Vec<TranscriptRecord>>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            records: Mutex::new(Vec::new()),
        }
    }

    /// Records sorted by digest. Concurrent callers arrive in any order;
    /// the sort is stable, so repeats of one request keep their order.
    pub fn transcript(&self) -> Transcript {
        let mut records = self.records.lock().expect("recording lock").clone();
        records.sort_by(|a, b| a.digest.cmp(&b.digest));
        Transcript::new(records)
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn send(&self, messages: &[ChatMessage], format: &ResponseFormat) -> Result<String, BackendError> {
        let response = self.inner.send(messages, format)?;
        self.records.lock().expect("recording lock").push(TranscriptRecord {
            digest: request_digest(messages, format),
            format: format.name.into(),
            response: response.clone(),
        });
        Ok(response)
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }
}

pub const LIVE_ATTEMPTS: u32 = 3;
pub const LIVE_BACKOFF: Duration = Duration::from_millis(500);

/// A chat-completions compatible HTTP endpoint.
pub struct LiveBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    token: Option<String>,
}

impl LiveBackend {
    /// `api_key_env` names the environment variable holding the token.
    pub fn new(endpoint: &str, model: &str, api_key_env: Option<&str>, timeout: Duration) -> Result<Self, Error> {
        let token = match api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| Error::ConfigInvalid(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::BackendUnavailable(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: endpoint.into(),
            model: model.into(),
            token,
        })
    }

    fn body(&self, messages: &[ChatMessage], format: &ResponseFormat) -> Json {
        json!({
            "model": self.model,
            "temperature": 0,
            "messages": messages,
            "response_format": {
                "type": "json_schema",
                "json_schema": { "name": format.name, "schema": format.schema },
            },
        })
    }
}

fn completion_text(doc: &Json) -> Result<String, BackendError> {
    doc.pointer("/choices/0/message/content")
        .and_then(Json::as_str)
        .map(String::from)
        .ok_or_else(|| BackendError::BadResponse("response has no choices[0].message.content".into()))
}

impl ChatBackend for LiveBackend {
    fn send(&self, messages: &[ChatMessage], format: &ResponseFormat) -> Result<String, BackendError> {
        let body = self.body(messages, format);
        let mut last = String::new();
        for attempt in 0..LIVE_ATTEMPTS {
            if attempt > 0 {
                std::thread::sleep(LIVE_BACKOFF * 2u32.pow(attempt - 1));
            }
            let mut req = self.client.post(&self.endpoint).json(&body);
            if let Some(t) = &self.token {
                req = req.bearer_auth(t);
            }
            match req.send() {
                Ok(resp) if resp.status().is_success() => {
                    let doc: Json = resp.json().map_err(|e| BackendError::BadResponse(e.to_string()))?;
                    return completion_text(&doc);
                }
                Ok(resp) if resp.status().is_server_error() || resp.status().as_u16() == 429 => {
                    last = format!("HTTP {}", resp.status());
                }
                Ok(resp) => return Err(BackendError::Http(format!("HTTP {}", resp.status()))),
                Err(e) => last = e.to_string(),
            }
            log::warn!("chat request failed (attempt {}): {last}", attempt + 1);
        }
        Err(BackendError::Http(format!(
            "chat endpoint failed after {LIVE_ATTEMPTS} attempts: {last}"
        )))
    }

    fn fingerprint(&self) -> String {
        format!("live:{}", self.model)
    }
}

type Responder = dyn Fn(&[ChatMessage], &ResponseFormat) -> Option<String> + Send + Sync;

/// Test double: answers from a fixed list in order, or from a function.
pub struct ScriptedBackend {
    responses: Mutex<VecDeque<String>>,
    responder: Option<Box<Responder>>,
    requests: Mutex<Vec<Vec<ChatMessage>>>,
}

impl ScriptedBackend {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            responses: Mutex::new(responses.into_iter().map(Into::into).collect()),
            responder: None,
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn from_fn(f: impl Fn(&[ChatMessage], &ResponseFormat) -> Option<String> + Send + Sync + 'static) -> Self {
        Self {
            responses: Mutex::new(VecDeque::new()),
            responder: Some(Box::new(f)),
            requests: Mutex::new(Vec::new()),
        }
    }

    /// Every conversation sent so far.
    pub fn requests(&self) -> Vec<Vec<ChatMessage>> {
        self.requests.lock().expect("scripted lock").clone()
    }
}

impl ChatBackend for ScriptedBackend {
    fn send(&self, messages: &[ChatMessage], format: &ResponseFormat) -> Result<String, BackendError> {
        self.requests.lock().expect("scripted lock").push(messages.to_vec());
        let answer = match &self.responder {
            Some(f) => f(messages, format),
            None => self.responses.lock().expect("scripted lock").pop_front(),
        };
        answer.ok_or_else(|| BackendError::NoRecordedResponse(request_digest(messages, format)))
    }

    fn fingerprint(&self) -> String {
        "scripted".into()
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for &T {
    fn send(&self, messages: &[ChatMessage], format: &ResponseFormat) -> Result<String, BackendError> {
        (**self).send(messages, format)
    }

    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for Box<T> {
    fn send(&self, messages: &[ChatMessage], format: &ResponseFormat) -> Result<String, BackendError> {
        (**self).send(messages, format)
    }

    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}
