//! Bin distributions and the expected number of relevant training instances.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};

/// Custom weights may miss a unit sum by this much before being rejected.
pub const CUSTOM_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Uniform,
    Zipf,
    Custom,
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistributionKind::Uniform => "uniform",
            DistributionKind::Zipf => "zipf",
            DistributionKind::Custom => "custom",
        })
    }
}

/// A probability vector over bins, indexed by frequency rank for Zipf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinDistribution {
    kind: DistributionKind,
    weights: Vec<f64>,
}

impl BinDistribution {
    pub fn uniform(num_bins: usize) -> Result<Self> {
        if num_bins == 0 {
            return Err(validation("num_bins must be at least 1"));
        }
        Ok(BinDistribution {
            kind: DistributionKind::Uniform,
            weights: vec![1.0 / num_bins as f64; num_bins],
        })
    }

    /// Rank-`n` bin (1-based) gets weight `(1/n) / H_B`.
    pub fn zipf(num_bins: usize) -> Result<Self> {
        if num_bins == 0 {
            return Err(validation("num_bins must be at least 1"));
        }
        // Smallest terms first.
        let harmonic: f64 = (1..=num_bins).rev().map(|n| 1.0 / n as f64).sum();
        let weights = (1..=num_bins)
            .map(|n| 1.0 / (n as f64 * harmonic))
            .collect();
        Ok(BinDistribution {
            kind: DistributionKind::Zipf,
            weights,
        })
    }

    /// Arbitrary non-negative weights summing to one within
    /// [`CUSTOM_SUM_TOLERANCE`]; they are renormalised exactly.
    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(validation("a distribution needs at least one bin"));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(validation(format!(
                "weight {i} is {w}; weights must be finite and >= 0"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > CUSTOM_SUM_TOLERANCE {
            return Err(validation(format!(
                "weights sum to {total}; must be within {CUSTOM_SUM_TOLERANCE} of 1"
            )));
        }
        Ok(BinDistribution {
            kind: DistributionKind::Custom,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Parses one weight per line. Blank lines and `#` comments are skipped;
    /// errors carry the 1-based line number.
    pub fn parse_weights(text: &str, source: &str) -> Result<Self> {
        let mut weights = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::WeightFile {
                path: source.to_string(),
                line: idx + 1,
                message,
            };
            let w: f64 = line
                .parse()
                .map_err(|_| bad(format!("cannot parse {line:?} as a weight")))?;
            if !w.is_finite() || w < 0.0 {
                return Err(bad(format!("weight {w} must be finite and >= 0")));
            }
            weights.push(w);
        }
        Self::custom(weights)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse_weights(&text, &path.display().to_string())
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_bins(&self) -> usize {
        self.weights.len()
    }

    /// `sum_b Pr(b)^2`: chance two independent draws share a bin.
    pub fn collision_prob(&self) -> f64 {
        match self.kind {
            DistributionKind::Uniform => 1.0 / self.weights.len() as f64,
            _ => self.summed_collision_prob(),
        }
    }

    /// `sum_b Pr(b)^2` by direct summation, whatever the kind.
    pub fn summed_collision_prob(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    /// Expected number of the `m` training instances sharing a bin with a
    /// random test instance: `m * sum_b Pr(b)^2`.
    pub fn expected_relevant_instances(&self, m: u64) -> f64 {
        m as f64 * self.collision_prob()
    }
}

/// Closed-form approximation `1.6 m / ln(0.56 |B|)^2` for the Zipf case,
/// kept alongside the exact sum for comparison.
pub fn zipf_relevant_approx(m: u64, num_bins: u64) -> Result<f64> {
    let arg = 0.56 * num_bins as f64;
    if arg <= 1.0 {
        return Err(domain(format!(
            "0.56 * num_bins must exceed 1 for the approximation, got {arg}"
        )));
    }
    Ok(1.6 * m as f64 / arg.ln().powi(2))
}
