//! Text embedding backends: the offline hashing baseline and a remote
//! embeddings endpoint.

use std::time::Duration;

use kgmap_core::embed::{hash_embed, EmbeddingVector, BASELINE_SCHEME, DEFAULT_BASELINE_DIMS, MIN_BASELINE_DIMS};
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const REMOTE_ATTEMPTS: u32 = 3;
pub const REMOTE_BACKOFF: Duration = Duration::from_millis(500);
pub const DEFAULT_REMOTE_CONCURRENCY: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase", deny_unknown_fields)]
pub enum EmbedderConfig {
    Baseline {
        #[serde(default = "default_dims")]
        dims: usize,
    },
    Remote {
        endpoint: String,
        model: String,
        /// Name of the environment variable holding the bearer token.
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_concurrency")]
        concurrency: usize,
    },
}

fn default_dims() -> usize {
    DEFAULT_BASELINE_DIMS
}

fn default_concurrency() -> usize {
    DEFAULT_REMOTE_CONCURRENCY
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig::Baseline {
            dims: DEFAULT_BASELINE_DIMS,
        }
    }
}

impl EmbedderConfig {
    pub fn validate(&self) -> Result<(), Error> {
        match self {
            EmbedderConfig::Baseline { dims } if *dims < MIN_BASELINE_DIMS => Err(Error::ConfigInvalid(format!(
                "embedder dims must be at least {MIN_BASELINE_DIMS}, got {dims}"
            ))),
            EmbedderConfig::Remote { concurrency: 0, .. } => {
                Err(Error::ConfigInvalid("embedder concurrency must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Identifies the embedding function; stored in index headers.
    pub fn fingerprint(&self) -> String {
        match self {
            EmbedderConfig::Baseline { dims } => format!("baseline:{BASELINE_SCHEME}:{dims}"),
            EmbedderConfig::Remote { endpoint, model, .. } => format!("remote:{model}@{endpoint}"),
        }
    }
}

pub struct Embedder {
    config: EmbedderConfig,
    client: Option<reqwest::blocking::Client>,
    token: Option<String>,
}

#[derive(Serialize)]
struct EmbeddingsRequest<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbeddingsResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    #[serde(default)]
    index: Option<usize>,
    embedding: Vec<f64>,
}

impl Embedder {
    pub fn new(config: EmbedderConfig) -> Result<Self, Error> {
        config.validate()?;
        let (client, token) = match &config {
            EmbedderConfig::Baseline { .. } => (None, None),
            EmbedderConfig::Remote { api_key_env, .. } => {
                let token = match api_key_env {
                    Some(var) => Some(
                        std::env::var(var)
                            .map_err(|_| Error::ConfigInvalid(format!("environment variable {var} is not set")))?,
                    ),
                    None => None,
                };
                let client = reqwest::blocking::Client::builder()
                    .timeout(Duration::from_secs(60))
                    .build()
                    .map_err(|e| Error::RemoteUnavailable(e.to_string()))?;
                (Some(client), token)
            }
        };
        Ok(Self { config, client, token })
    }

    pub fn baseline(dims: usize) -> Result<Self, Error> {
        Self::new(EmbedderConfig::Baseline { dims })
    }

    pub fn config(&self) -> &EmbedderConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> String {
        self.config.fingerprint()
    }

    pub fn embed(&self, text: &str) -> Result<EmbeddingVector, Error> {
        let mut out = self.embed_batch(&[text])?;
        Ok(out.pop().expect("one input, one vector"))
    }

    /// Embeds texts in order. Remote batches are split into chunks sent by up
    /// to `concurrency` threads.
    pub fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, Error> {
        match &self.config {
            EmbedderConfig::Baseline { dims } => texts
                .iter()
                .map(|t| hash_embed(t, *dims).map_err(|e| Error::ConfigInvalid(e.to_string())))
                .collect(),
            EmbedderConfig::Remote { concurrency, .. } => {
                const CHUNK: usize = 64;
                let chunks: Vec<&[&str]> = texts.chunks(CHUNK).collect();
                let mut results: Vec<Option<Result<Vec<EmbeddingVector>, Error>>> =
                    (0..chunks.len()).map(|_| None).collect();
                for wave in (0..chunks.len()).collect::<Vec<_>>().chunks(*concurrency) {
                    std::thread::scope(|s| {
                        let handles: Vec<_> = wave
                            .iter()
                            .map(|&i| {
                                let chunk = chunks[i];
                                (i, s.spawn(move || self.remote_chunk(chunk)))
                            })
                            .collect();
                        for (i, h) in handles {
                            results[i] =
                                Some(h.join().unwrap_or_else(|_| {
                                    Err(Error::RemoteUnavailable("embedding worker panicked".into()))
                                }));
                        }
                    });
                }
                let mut out = Vec::with_capacity(texts.len());
                for r in results {
                    out.extend(r.expect("every chunk ran")?);
                }
                Ok(out)
            }
        }
    }

    fn remote_chunk(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, Error> {
        let EmbedderConfig::Remote { endpoint, model, .. } = &self.config else {
            unreachable!("remote_chunk on baseline embedder")
        };
        let client = self.client.as_ref().expect("remote embedder has a client");
        let body = EmbeddingsRequest { model, input: texts };
        let mut last_error = String::new();
        for attempt in 0..REMOTE_ATTEMPTS {
            if attempt > 0 {
                std::thread::sleep(REMOTE_BACKOFF * 2u32.pow(attempt - 1));
            }
            let mut req = client.post(endpoint).json(&body);
            if let Some(token) = &self.token {
                req = req.bearer_auth(token);
            }
            let resp = match req.send().and_then(|r| r.error_for_status()) {
                Ok(r) => r,
                Err(e) => {
                    last_error = e.to_string();
                    log::warn!("embeddings request failed (attempt {}): {last_error}", attempt + 1);
                    continue;
                }
            };
            let parsed: EmbeddingsResponse = match resp.json() {
                Ok(p) => p,
                Err(e) => {
                    last_error = format!("unreadable embeddings response: {e}");
                    continue;
                }
            };
            return order_embeddings(parsed, texts.len());
        }
        Err(Error::RemoteUnavailable(format!(
            "embeddings endpoint failed after {REMOTE_ATTEMPTS} attempts: {last_error}"
        )))
    }
}

fn order_embeddings(resp: EmbeddingsResponse, expected: usize) -> Result<Vec<EmbeddingVector>, Error> {
    if resp.data.len() != expected {
        return Err(Error::RemoteUnavailable(format!(
            "embeddings endpoint returned {} vectors for {expected} inputs",
            resp.data.len()
        )));
    }
    let mut slots: Vec<Option<EmbeddingVector>> = vec![None; expected];
    for (pos, item) in resp.data.into_iter().enumerate() {
        let i = item.index.unwrap_or(pos);
        if i >= expected || slots[i].is_some() {
            return Err(Error::RemoteUnavailable(format!("bad embedding index {i}")));
        }
        slots[i] = Some(EmbeddingVector::normalized(&item.embedding));
    }
    let out: Vec<EmbeddingVector> = slots.into_iter().map(|s| s.expect("all slots filled")).collect();
    if out.windows(2).any(|w| w[0].dims() != w[1].dims()) {
        return Err(Error::RemoteUnavailable("embeddings have differing lengths".into()));
    }
    Ok(out)
}
