//! Mergeable perplexity statistics.
//!
//! [`PplStats`] is a Welford/Chan accumulator over `(ppl, n_tokens)` pairs.
//! Variance is the population variance (`m2 / weight`), the convention used
//! everywhere in this crate. Two accumulators combine with the parallel-merge
//! formula, and a sub-population can be subtracted again, which lets the
//! selector score candidates without rebuilding statistics.

use alloc::vec::Vec;

use crate::corpus::Document;
use crate::math;
use crate::{Error, Result};

/// How each document contributes to the mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WeightingMode {
    /// Every document has weight one.
    #[default]
    PerDocument,
    /// Documents are weighted by their token count.
    TokenWeighted,
}

impl WeightingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PerDocument => "per_document",
            Self::TokenWeighted => "token_weighted",
        }
    }
}

/// Count, token weight, mean and sum of squared deviations of a perplexity
/// distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PplStats {
    count: u64,
    tokens: f64,
    mean: f64,
    m2: f64,
    mode: WeightingMode,
}

impl PplStats {
    pub fn empty(mode: WeightingMode) -> Self {
        Self {
            count: 0,
            tokens: 0.0,
            mean: 0.0,
            m2: 0.0,
            mode,
        }
    }

    pub fn from_documents<'a, I>(docs: I, mode: WeightingMode) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Document>,
    {
        let mut stats = Self::empty(mode);
        for doc in docs {
            stats.push(doc.ppl, doc.n_tokens);
        }
        if stats.is_empty() {
            return Err(Error::EmptyStats);
        }
        Ok(stats)
    }

    /// Welford update with one observation.
    pub fn push(&mut self, ppl: f64, n_tokens: u64) {
        let w = match self.mode {
            WeightingMode::PerDocument => 1.0,
            WeightingMode::TokenWeighted => n_tokens as f64,
        };
        let prior = self.effective_weight();
        let total = prior + w;
        self.count += 1;
        self.tokens += n_tokens as f64;
        if total <= 0.0 {
            return;
        }
        if prior <= 0.0 {
            self.mean = ppl;
            self.m2 = 0.0;
            return;
        }
        let delta = ppl - self.mean;
        self.mean += delta * w / total;
        self.m2 += w * delta * (ppl - self.mean);
    }

    /// Parallel merge of two disjoint populations.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.mode != other.mode {
            return Err(Error::ModeMismatch);
        }
        if other.is_empty() {
            return Ok(*self);
        }
        if self.is_empty() {
            return Ok(*other);
        }
        let (wa, wb) = (self.effective_weight(), other.effective_weight());
        let w = wa + wb;
        let delta = other.mean - self.mean;
        Ok(Self {
            count: self.count + other.count,
            tokens: self.tokens + other.tokens,
            mean: self.mean + delta * (wb / w),
            m2: self.m2 + other.m2 + delta * delta * (wa * wb / w),
            mode: self.mode,
        })
    }

    /// Inverse of [`merge`](Self::merge): removes the sub-population `other`.
    ///
    /// Fails when `other` cannot be a subset of `self`: it is larger, or the
    /// remaining sum of squares comes out negative beyond rounding.
    pub fn remove(&self, other: &Self) -> Result<Self> {
        if self.mode != other.mode {
            return Err(Error::ModeMismatch);
        }
        if other.is_empty() {
            return Ok(*self);
        }
        if other.count > self.count {
            return Err(Error::InvalidRemoval("operand has more documents"));
        }
        let (wc, wb) = (self.effective_weight(), other.effective_weight());
        if other.count == self.count {
            let slack = 1e-9 * (self.m2 + other.m2 + self.mean * self.mean * wc).max(1e-300);
            if (wc - wb).abs() > 1e-9 * wc || (self.m2 - other.m2).abs() > slack {
                return Err(Error::InvalidRemoval("operand is not a sub-population"));
            }
            return Ok(Self::empty(self.mode));
        }
        let wa = wc - wb;
        if wa <= 1e-12 * wc {
            return Err(Error::InvalidRemoval("operand carries more weight"));
        }
        let mean = (wc * self.mean - wb * other.mean) / wa;
        let delta = other.mean - mean;
        let mut m2 = self.m2 - other.m2 - delta * delta * (wa * wb / wc);
        if m2 < 0.0 {
            let scale = self.m2 + other.m2 + self.mean * self.mean * wc;
            if m2 < -1e-9 * scale.max(1e-300) {
                return Err(Error::InvalidRemoval("negative sum of squares"));
            }
            m2 = 0.0;
        }
        Ok(Self {
            count: self.count - other.count,
            tokens: (self.tokens - other.tokens).max(0.0),
            mean,
            m2,
            mode: self.mode,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Total tokens of the summarized documents.
    pub fn weight(&self) -> f64 {
        self.tokens
    }

    pub fn mode(&self) -> WeightingMode {
        self.mode
    }

    /// Sum of squared (weighted) deviations from the mean.
    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn mean(&self) -> Result<f64> {
        self.non_empty().map(|s| s.mean)
    }

    /// Population variance.
    pub fn variance(&self) -> Result<f64> {
        let s = self.non_empty()?;
        Ok((s.m2 / s.effective_weight()).max(0.0))
    }

    pub fn std(&self) -> Result<f64> {
        self.variance().map(math::sqrt)
    }

    fn non_empty(&self) -> Result<&Self> {
        if self.is_empty() || self.effective_weight() <= 0.0 {
            Err(Error::EmptyStats)
        } else {
            Ok(self)
        }
    }

    fn effective_weight(&self) -> f64 {
        match self.mode {
            WeightingMode::PerDocument => self.count as f64,
            WeightingMode::TokenWeighted => self.tokens,
        }
    }
}

/// One bin of a log-spaced histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// Histogram of positive values with `bins` log-spaced bins spanning
/// `[min, max]`. The last bin is closed on the right.
pub fn log_histogram(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::InvalidResolution(bins));
    }
    if values.is_empty() {
        return Err(Error::EmptyStats);
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &v in values {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidInput("histogram values must be positive"));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let (llo, lhi) = (math::ln(lo), math::ln(hi));
    let span = lhi - llo;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            lo: if b == 0 {
                lo
            } else {
                math::exp(llo + span * b as f64 / bins as f64)
            },
            hi: if b + 1 == bins {
                hi
            } else {
                math::exp(llo + span * (b + 1) as f64 / bins as f64)
            },
            count: 0,
        })
        .collect();
    for &v in values {
        let b = if span > 0.0 {
            let pos = (math::ln(v) - llo) / span * bins as f64;
            (pos as usize).min(bins - 1)
        } else {
            0
        };
        out[b].count += 1;
    }
    Ok(out)
}
