//! Distance-to-optimum selection (DOS) and baseline samplers.
//!
//! A subset `S` of chunks is scored by
//!
//! ```text
//! J(S) = w_mu * (mu(S) - mu_hat)^2 + w_sigma * (var(S) - var_hat)^2
//! ```
//!
//! where `mu(S)` and `var(S)` are pooled over the documents of every chunk in
//! `S`. The greedy selector seeds with the chunk whose perplexity is closest to
//! `mu_hat` and then repeatedly adds the budget-feasible chunk giving the
//! lowest `J`, until nothing else fits. Ties always go to the smaller chunk id.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Chunk, Corpus};
use crate::stats::{PplStats, WeightingMode};
use crate::{Error, Result};

/// Target statistics and weights of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DosTarget {
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    pub w_mu: f64,
    pub w_sigma: f64,
}

impl DosTarget {
    pub fn new(mu_hat: f64, sigma2_hat: f64) -> Result<Self> {
        Self::with_weights(mu_hat, sigma2_hat, 1.0, 1.0)
    }

    /// Target from the landscape optimum, whose `sigma` is a standard
    /// deviation.
    pub fn from_std(mu_hat: f64, sigma_hat: f64) -> Result<Self> {
        Self::new(mu_hat, sigma_hat * sigma_hat)
    }

    /// Weights `1/mu_hat^2` and `1/sigma2_hat^2`, so both terms of `J` are
    /// squared relative errors.
    pub fn relative(mu_hat: f64, sigma2_hat: f64) -> Result<Self> {
        Self::with_weights(
            mu_hat,
            sigma2_hat,
            1.0 / (mu_hat * mu_hat),
            1.0 / (sigma2_hat * sigma2_hat),
        )
    }

    pub fn with_weights(mu_hat: f64, sigma2_hat: f64, w_mu: f64, w_sigma: f64) -> Result<Self> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(mu_hat) || !pos(sigma2_hat) {
            return Err(Error::InvalidTarget(
                "mu_hat and sigma2_hat must be positive",
            ));
        }
        if !pos(w_mu) || !pos(w_sigma) {
            return Err(Error::InvalidTarget("weights must be positive"));
        }
        Ok(Self {
            mu_hat,
            sigma2_hat,
            w_mu,
            w_sigma,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum Method {
    Dos,
    Rs,
    Lps,
    Hps,
    Brute,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dos => "DOS",
            Self::Rs => "RS",
            Self::Lps => "LPS",
            Self::Hps => "HPS",
            Self::Brute => "BRUTE",
        }
    }
}

impl core::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DOS" => Ok(Self::Dos),
            "RS" => Ok(Self::Rs),
            "LPS" => Ok(Self::Lps),
            "HPS" => Ok(Self::Hps),
            "BRUTE" => Ok(Self::Brute),
            _ => Err(Error::InvalidTarget("unknown selection method")),
        }
    }
}

/// State of the subset after one chunk was added.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryStep {
    pub step: usize,
    pub chunk_id: String,
    pub mu_s: f64,
    pub sigma2_s: f64,
    pub tokens_so_far: u64,
    #[cfg_attr(feature = "serde", serde(rename = "J"))]
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SelectionManifest {
    pub method: Method,
    pub selected: Vec<String>,
    pub trajectory: Vec<TrajectoryStep>,
    #[cfg_attr(feature = "serde", serde(rename = "final_J"))]
    pub final_j: f64,
    pub t_budget: u64,
    pub target: DosTarget,
}

impl SelectionManifest {
    pub fn tokens(&self) -> u64 {
        self.trajectory.last().map_or(0, |s| s.tokens_so_far)
    }

    /// Final subset `(mean, variance)`.
    pub fn final_stats(&self) -> Option<(f64, f64)> {
        self.trajectory.last().map(|s| (s.mu_s, s.sigma2_s))
    }

    /// Document ids of the selected chunks, in selection order.
    pub fn document_ids<'a>(&self, chunks: &'a [Chunk]) -> Result<Vec<&'a str>> {
        let mut out = Vec::new();
        for id in &self.selected {
            let chunk = chunks
                .iter()
                .find(|c| &c.chunk_id == id)
                .ok_or_else(|| Error::UnknownDocument(id.clone()))?;
            out.extend(chunk.doc_ids.iter().map(String::as_str));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SelectOptions {
    pub mode: WeightingMode,
    /// Stop the greedy loop once the best candidate's `J` exceeds the current
    /// `J` by this factor. Off by default: selection runs to budget exhaustion.
    pub early_stop_factor: Option<f64>,
}

pub fn objective_j(stats: &PplStats, target: &DosTarget) -> Result<f64> {
    let dm = stats.mean()? - target.mu_hat;
    let dv = stats.variance()? - target.sigma2_hat;
    Ok(target.w_mu * dm * dm + target.w_sigma * dv * dv)
}

/// Chunks with their pooled document statistics precomputed.
struct Pool<'a> {
    chunks: &'a [Chunk],
    stats: Vec<PplStats>,
    mode: WeightingMode,
}

impl<'a> Pool<'a> {
    fn new(chunks: &'a [Chunk], corpus: &Corpus, mode: WeightingMode) -> Result<Self> {
        if chunks.is_empty() {
            return Err(Error::EmptyChunks);
        }
        let stats = chunks
            .iter()
            .map(|c| corpus.chunk_stats(c, mode))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            chunks,
            stats,
            mode,
        })
    }
}

/// Records the subset state as chunks are appended.
struct Recorder<'a> {
    target: &'a DosTarget,
    stats: PplStats,
    tokens: u64,
    selected: Vec<String>,
    trajectory: Vec<TrajectoryStep>,
}

impl<'a> Recorder<'a> {
    fn new(target: &'a DosTarget, mode: WeightingMode) -> Self {
        Self {
            target,
            stats: PplStats::empty(mode),
            tokens: 0,
            selected: Vec::new(),
            trajectory: Vec::new(),
        }
    }

    fn add(&mut self, chunk: &Chunk, stats: &PplStats) -> Result<()> {
        self.stats = self.stats.merge(stats)?;
        self.tokens += chunk.n_tokens;
        self.selected.push(chunk.chunk_id.clone());
        self.trajectory.push(TrajectoryStep {
            step: self.trajectory.len(),
            chunk_id: chunk.chunk_id.clone(),
            mu_s: self.stats.mean()?,
            sigma2_s: self.stats.variance()?,
            tokens_so_far: self.tokens,
            j: objective_j(&self.stats, self.target)?,
        });
        Ok(())
    }

    fn finish(self, method: Method, t_budget: u64) -> SelectionManifest {
        let final_j = self.trajectory.last().map_or(f64::INFINITY, |s| s.j);
        SelectionManifest {
            method,
            selected: self.selected,
            trajectory: self.trajectory,
            final_j,
            t_budget,
            target: *self.target,
        }
    }
}

/// `(value, chunk_id)` ordering used for every argmin.
fn better(a: (f64, &str), b: (f64, &str)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Equal => a.1 < b.1,
        Ordering::Greater => false,
    }
}

/// Budgeted greedy distance-to-optimum selection.
pub fn greedy_select(
    chunks: &[Chunk],
    corpus: &Corpus,
    target: &DosTarget,
    t_budget: u64,
    opts: &SelectOptions,
) -> Result<SelectionManifest> {
    let pool = Pool::new(chunks, corpus, opts.mode)?;
    let mut used = alloc::vec![false; chunks.len()];
    let mut rec = Recorder::new(target, pool.mode);

    let mut seed: Option<usize> = None;
    for (i, c) in chunks.iter().enumerate() {
        if c.n_tokens > t_budget {
            continue;
        }
        let key = ((c.chunk_ppl - target.mu_hat).abs(), c.chunk_id.as_str());
        if seed.is_none_or(|s| {
            better(
                key,
                (
                    (chunks[s].chunk_ppl - target.mu_hat).abs(),
                    &chunks[s].chunk_id,
                ),
            )
        }) {
            seed = Some(i);
        }
    }
    let seed = seed.ok_or(Error::NoChunkFitsBudget)?;
    used[seed] = true;
    rec.add(&chunks[seed], &pool.stats[seed])?;

    loop {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in chunks.iter().enumerate() {
            if used[i] || rec.tokens + c.n_tokens > t_budget {
                continue;
            }
            let j = objective_j(&rec.stats.merge(&pool.stats[i])?, target)?;
            if best.is_none_or(|(b, bj)| better((j, &c.chunk_id), (bj, &chunks[b].chunk_id))) {
                best = Some((i, j));
            }
        }
        let Some((i, j)) = best else { break };
        if let Some(factor) = opts.early_stop_factor {
            let current = rec.trajectory.last().map_or(f64::INFINITY, |s| s.j);
            if j > current * factor {
                break;
            }
        }
        used[i] = true;
        rec.add(&chunks[i], &pool.stats[i])?;
    }
    Ok(rec.finish(Method::Dos, t_budget))
}

/// Largest chunk count accepted by [`brute_force_select`].
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Exact minimizer of `J` over all non-empty budget-feasible subsets. Ties go
/// to the lexicographically smallest sorted list of chunk ids. The manifest
/// lists the chosen chunks in ascending id order.
pub fn brute_force_select(
    chunks: &[Chunk],
    corpus: &Corpus,
    target: &DosTarget,
    t_budget: u64,
    opts: &SelectOptions,
) -> Result<SelectionManifest> {
    if chunks.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyChunks {
            max: BRUTE_FORCE_LIMIT,
            got: chunks.len(),
        });
    }
    let pool = Pool::new(chunks, corpus, opts.mode)?;
    // visiting chunks in id order makes the enumeration order match the tie rule
    let mut order: Vec<usize> = (0..chunks.len()).collect();
    order.sort_by(|&a, &b| chunks[a].chunk_id.cmp(&chunks[b].chunk_id));

    let mut search = Exhaustive {
        pool: &pool,
        order: &order,
        target,
        t_budget,
        best: None,
        current: Vec::new(),
    };
    search.visit(0, PplStats::empty(pool.mode), 0)?;
    let (_, best) = search.best.ok_or(Error::NoChunkFitsBudget)?;

    let mut rec = Recorder::new(target, pool.mode);
    for i in best {
        rec.add(&chunks[i], &pool.stats[i])?;
    }
    Ok(rec.finish(Method::Brute, t_budget))
}

struct Exhaustive<'a> {
    pool: &'a Pool<'a>,
    order: &'a [usize],
    target: &'a DosTarget,
    t_budget: u64,
    best: Option<(f64, Vec<usize>)>,
    current: Vec<usize>,
}

impl Exhaustive<'_> {
    /// Depth-first over subsets of `order[from..]` extending `current`.
    fn visit(&mut self, from: usize, stats: PplStats, tokens: u64) -> Result<()> {
        for k in from..self.order.len() {
            let i = self.order[k];
            let t = tokens + self.pool.chunks[i].n_tokens;
            if t > self.t_budget {
                continue;
            }
            let next = stats.merge(&self.pool.stats[i])?;
            self.current.push(i);
            let j = objective_j(&next, self.target)?;
            let improves = match &self.best {
                None => true,
                Some((bj, ids)) => match j.total_cmp(bj) {
                    Ordering::Less => true,
                    Ordering::Equal => self.ids_less(&self.current, ids),
                    Ordering::Greater => false,
                },
            };
            if improves {
                self.best = Some((j, self.current.clone()));
            }
            self.visit(k + 1, next, t)?;
            self.current.pop();
        }
        Ok(())
    }

    fn ids_less(&self, a: &[usize], b: &[usize]) -> bool {
        let ids = |v: &[usize]| -> Vec<&str> {
            v.iter()
                .map(|&i| self.pool.chunks[i].chunk_id.as_str())
                .collect()
        };
        ids(a) < ids(b)
    }
}

/// Random (RS), low-perplexity-first (LPS) and high-perplexity-first (HPS)
/// samplers. Chunks are taken in order and skipped when they no longer fit.
/// LPS only considers chunks with `chunk_ppl < cutoff`, HPS only those above
/// it; the cutoff defaults to the target's `mu_hat`. `J` is still recorded
/// against `target` for comparison.
#[allow(clippy::too_many_arguments)]
pub fn baseline_select(
    chunks: &[Chunk],
    corpus: &Corpus,
    method: Method,
    t_budget: u64,
    seed: u64,
    ppl_cutoff: Option<f64>,
    target: &DosTarget,
    opts: &SelectOptions,
) -> Result<SelectionManifest> {
    let pool = Pool::new(chunks, corpus, opts.mode)?;
    let cutoff = ppl_cutoff.unwrap_or(target.mu_hat);
    let by_ppl = |a: &usize, b: &usize| {
        chunks[*a]
            .chunk_ppl
            .total_cmp(&chunks[*b].chunk_ppl)
            .then_with(|| chunks[*a].chunk_id.cmp(&chunks[*b].chunk_id))
    };
    let order: Vec<usize> = match method {
        Method::Rs => {
            let mut order: Vec<usize> = (0..chunks.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            order
        }
        Method::Lps => {
            let mut order: Vec<usize> = (0..chunks.len())
                .filter(|&i| chunks[i].chunk_ppl < cutoff)
                .collect();
            order.sort_by(by_ppl);
            order
        }
        Method::Hps => {
            let mut order: Vec<usize> = (0..chunks.len())
                .filter(|&i| chunks[i].chunk_ppl > cutoff)
                .collect();
            order.sort_by(|a, b| by_ppl(b, a));
            order
        }
        Method::Dos | Method::Brute => return Err(Error::UnsupportedMethod(method.as_str())),
    };
    if order.is_empty() {
        return Err(Error::NoEligibleChunk);
    }
    let mut rec = Recorder::new(target, pool.mode);
    for i in order {
        if rec.tokens + chunks[i].n_tokens <= t_budget {
            rec.add(&chunks[i], &pool.stats[i])?;
        }
    }
    if rec.selected.is_empty() {
        return Err(Error::NoChunkFitsBudget);
    }
    Ok(rec.finish(method, t_budget))
}
