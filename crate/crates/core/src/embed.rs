//! Dense text embeddings: the feature-hashing baseline and cosine similarity.
//!
//! The baseline embedder is a bag of hashed features:
//!
//! 1. lowercase the text and split it on every non-alphanumeric character;
//! 2. each token contributes the feature `w:<token>`, and each character
//!    trigram of a token (tokens of three or more characters) contributes
//!    `t:<trigram>`;
//! 3. every feature is hashed with 64-bit FNV-1a over its UTF-8 bytes; the
//!    hash selects slot `h % dims` and a sign, `+1` when bit 63 is clear and
//!    `-1` otherwise;
//! 4. the accumulated vector is L2-normalised.
//!
//! Text without any feature yields the all-zero vector, which is the only
//! vector allowed to violate the unit-norm invariant.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

/// Smallest dimensionality accepted by the baseline embedder.
pub const MIN_BASELINE_DIMS: usize = 16;
/// Default dimensionality of the baseline embedder.
pub const DEFAULT_BASELINE_DIMS: usize = 512;
/// Identifies the feature and hash scheme; part of every index fingerprint.
pub const BASELINE_SCHEME: &str = "fnv1a64-w1t3-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EmbedError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("baseline dims must be at least {MIN_BASELINE_DIMS}, got {0}")]
    DimsTooSmall(usize),
}

/// A unit-length (or all-zero) vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    /// Wraps values as-is. Callers are responsible for normalisation; use
    /// [`EmbeddingVector::normalized`] for raw scores.
    pub fn from_values(values: Vec<f32>) -> Self {
        Self { values }
    }

    /// L2-normalises `raw`. An all-zero input stays all-zero.
    pub fn normalized(raw: &[f64]) -> Self {
        let norm = libm::sqrt(raw.iter().map(|x| x * x).sum::<f64>());
        let values = if norm == 0.0 {
            vec![0.0; raw.len()]
        } else {
            raw.iter().map(|x| (x / norm) as f32).collect()
        };
        Self { values }
    }

    pub fn zeros(dims: usize) -> Self {
        Self {
            values: vec![0.0; dims],
        }
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    /// The zero vector produced for featureless text.
    pub fn is_degenerate(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }
}

pub(crate) fn norm(values: &[f32]) -> f64 {
    libm::sqrt(values.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>())
}

pub(crate) fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| f64::from(a) * f64::from(b)).sum()
}

/// Cosine similarity, `0.0` when either vector has zero norm.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EmbedError> {
    if u.dims() != v.dims() {
        return Err(EmbedError::DimensionMismatch {
            left: u.dims(),
            right: v.dims(),
        });
    }
    Ok(cosine_with_norms(
        &u.values,
        norm(&u.values),
        &v.values,
        norm(&v.values),
    ))
}

pub(crate) fn cosine_with_norms(u: &[f32], nu: f64, v: &[f32], nv: f64) -> f64 {
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    // + 0.0 turns -0.0 into 0.0 so equal scores tie under total ordering
    dot(u, v) / (nu * nv) + 0.0
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Lowercased alphanumeric tokens of `text`.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Word and trigram features of `text`, in token order.
pub fn features(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for token in tokens(text) {
        let mut word = String::with_capacity(token.len() + 2);
        word.push_str("w:");
        word.push_str(&token);
        out.push(word);
        let chars: Vec<char> = token.chars().collect();
        for tri in chars.windows(3) {
            let mut f = String::from("t:");
            f.extend(tri);
            out.push(f);
        }
    }
    out
}

/// Deterministic feature-hashing embedding of `text` into `dims` slots.
pub fn hash_embed(text: &str, dims: usize) -> Result<EmbeddingVector, EmbedError> {
    if dims < MIN_BASELINE_DIMS {
        return Err(EmbedError::DimsTooSmall(dims));
    }
    let mut acc = vec![0.0f64; dims];
    for feature in features(text) {
        let h = fnv1a64(feature.as_bytes());
        let slot = (h % dims as u64) as usize;
        if h >> 63 == 0 {
            acc[slot] += 1.0;
        } else {
            acc[slot] -= 1.0;
        }
    }
    Ok(EmbeddingVector::normalized(&acc))
}
