//! Self-reported agent confidence and its aggregation.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Confidence {
    Low,
    Medium,
    High,
}

impl Confidence {
    pub const ALL: [Confidence; 3] = [Confidence::High, Confidence::Medium, Confidence::Low];

    /// LOW=0, MEDIUM=1, HIGH=2.
    pub fn score(self) -> u32 {
        match self {
            Confidence::Low => 0,
            Confidence::Medium => 1,
            Confidence::High => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::Low => "LOW",
            Confidence::Medium => "MEDIUM",
            Confidence::High => "HIGH",
        }
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("unknown confidence class")]
pub struct ParseConfidenceError;

impl FromStr for Confidence {
    type Err = ParseConfidenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            s if s.eq_ignore_ascii_case("high") => Ok(Confidence::High),
            s if s.eq_ignore_ascii_case("medium") => Ok(Confidence::Medium),
            s if s.eq_ignore_ascii_case("low") => Ok(Confidence::Low),
            _ => Err(ParseConfidenceError),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cannot aggregate an empty confidence list")]
pub struct EmptyInput;

/// Averages confidence classes: with LOW=0, MEDIUM=1, HIGH=2 and mean `m`,
/// the result is HIGH for `m >= 1.5`, MEDIUM for `0.5 <= m < 1.5`, LOW below.
///
/// The comparison runs in integers (`2·sum` against `3n` and `n`), so there is
/// no rounding at the thresholds.
pub fn aggregate(items: &[Confidence]) -> Result<Confidence, EmptyInput> {
    if items.is_empty() {
        return Err(EmptyInput);
    }
    let n = items.len() as u64;
    let twice_sum: u64 = items.iter().map(|c| 2 * u64::from(c.score())).sum();
    Ok(if twice_sum >= 3 * n {
        Confidence::High
    } else if twice_sum >= n {
        Confidence::Medium
    } else {
        Confidence::Low
    })
}
