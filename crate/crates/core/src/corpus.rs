//! Perplexity-annotated documents, corpora and random chunking.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::stats::{PplStats, WeightingMode};
use crate::{Error, Result};

/// One scored document. `ppl` is the document perplexity under the reference model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Document {
    pub id: String,
    pub n_tokens: u64,
    pub ppl: f64,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub source: Option<String>,
    /// Carried through untouched; never inspected.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub text: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, n_tokens: u64, ppl: f64) -> Self {
        Self {
            id: id.into(),
            n_tokens,
            ppl,
            source: None,
            text: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let reason = if self.id.is_empty() {
            "empty id"
        } else if self.n_tokens == 0 {
            "n_tokens must be at least 1"
        } else if !self.ppl.is_finite() || self.ppl <= 0.0 {
            "ppl must be positive and finite"
        } else {
            return Ok(());
        };
        Err(Error::InvalidDocument {
            id: self.id.clone(),
            reason,
        })
    }
}

/// An immutable, validated collection of documents with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    total_tokens: u64,
    index: BTreeMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, rejecting any invalid or duplicate document.
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut builder = CorpusBuilder::strict();
        for doc in documents {
            builder.push(doc)?;
        }
        builder.finish()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.index.get(id).map(|&i| &self.documents[i])
    }

    pub fn stats(&self, mode: WeightingMode) -> PplStats {
        let mut stats = PplStats::empty(mode);
        for doc in &self.documents {
            stats.push(doc.ppl, doc.n_tokens);
        }
        stats
    }

    /// Pooled document-level statistics of the given chunk.
    pub fn chunk_stats(&self, chunk: &Chunk, mode: WeightingMode) -> Result<PplStats> {
        let mut stats = PplStats::empty(mode);
        for id in &chunk.doc_ids {
            let doc = self
                .get(id)
                .ok_or_else(|| Error::UnknownDocument(id.clone()))?;
            stats.push(doc.ppl, doc.n_tokens);
        }
        Ok(stats)
    }
}

/// Incremental corpus construction.
///
/// In strict mode the first invalid or duplicate record is an error. In lenient
/// mode such records are dropped and counted.
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    strict: bool,
    documents: Vec<Document>,
    index: BTreeMap<String, usize>,
    total_tokens: u64,
    skipped: usize,
}

impl CorpusBuilder {
    pub fn strict() -> Self {
        Self {
            strict: true,
            ..Self::default()
        }
    }

    pub fn lenient() -> Self {
        Self::default()
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    /// Adds a document. Returns `Ok(false)` when a lenient builder skipped it.
    pub fn push(&mut self, doc: Document) -> Result<bool> {
        let check = doc.validate().and_then(|()| {
            if self.index.contains_key(&doc.id) {
                Err(Error::DuplicateId(doc.id.clone()))
            } else {
                Ok(())
            }
        });
        match check {
            Ok(()) => {
                self.total_tokens += doc.n_tokens;
                self.index.insert(doc.id.clone(), self.documents.len());
                self.documents.push(doc);
                Ok(true)
            }
            Err(e) if self.strict => Err(e),
            Err(_) => {
                self.skipped += 1;
                Ok(false)
            }
        }
    }

    /// Counts a record that could not even be decoded.
    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn finish(self) -> Result<Corpus> {
        if self.documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Corpus {
            documents: self.documents,
            total_tokens: self.total_tokens,
            index: self.index,
        })
    }
}

/// A group of documents; the atomic unit of selection.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Chunk {
    pub chunk_id: String,
    pub doc_ids: Vec<String>,
    pub n_tokens: u64,
    /// Token-weighted mean of member document perplexities.
    pub chunk_ppl: f64,
}

impl Chunk {
    pub fn from_documents<'a, I>(chunk_id: impl Into<String>, docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Document>,
    {
        let mut doc_ids = Vec::new();
        let mut n_tokens = 0u64;
        let mut weighted = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for doc in docs {
            doc.validate()?;
            doc_ids.push(doc.id.clone());
            n_tokens += doc.n_tokens;
            weighted += doc.n_tokens as f64 * doc.ppl;
            lo = lo.min(doc.ppl);
            hi = hi.max(doc.ppl);
        }
        if doc_ids.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        // rounding can push the weighted mean a few ulps outside the member range
        let chunk_ppl = (weighted / n_tokens as f64).clamp(lo, hi);
        Ok(Self {
            chunk_id: chunk_id.into(),
            doc_ids,
            n_tokens,
            chunk_ppl,
        })
    }
}

/// Randomly permutes the documents with `seed` and deals them into `n_chunks`
/// groups whose sizes differ by at most one.
pub fn chunk_corpus(corpus: &Corpus, n_chunks: usize, seed: u64) -> Result<Vec<Chunk>> {
    let n_docs = corpus.len();
    if n_chunks == 0 || n_chunks > n_docs {
        return Err(Error::InvalidChunkCount { n_chunks, n_docs });
    }
    let mut order: Vec<usize> = (0..n_docs).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let width = digits(n_chunks - 1).max(5);
    let base = n_docs / n_chunks;
    let extra = n_docs % n_chunks;
    let mut chunks = Vec::with_capacity(n_chunks);
    let mut start = 0;
    for j in 0..n_chunks {
        let size = base + usize::from(j < extra);
        let members = order[start..start + size]
            .iter()
            .map(|&i| &corpus.documents[i]);
        chunks.push(Chunk::from_documents(format!("c{j:0width$}"), members)?);
        start += size;
    }
    Ok(chunks)
}

fn digits(mut n: usize) -> usize {
    let mut d = 1;
    while n >= 10 {
        n /= 10;
        d += 1;
    }
    d
}
