//! Readers and writers for corpora, chunk manifests and observations.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use pplaw_core::{Chunk, Corpus, CorpusBuilder, Document, Observation};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// A corpus together with the number of records lenient ingestion dropped.
#[derive(Debug)]
pub struct Ingest {
    pub corpus: Corpus,
    pub skipped: usize,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Reads Corpus JSONL. Blank lines are ignored. In strict mode the first bad
/// record fails with its file and line; otherwise bad records are counted.
pub fn read_corpus(path: &Path, strict: bool) -> Result<Ingest> {
    let mut builder = if strict {
        CorpusBuilder::strict()
    } else {
        CorpusBuilder::lenient()
    };
    for (i, line) in open(path)?.lines().enumerate() {
        let line =
            line.with_context(|| format!("{}:{}: unreadable line", path.display(), i + 1))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = match serde_json::from_str(&line) {
            Ok(doc) => doc,
            Err(e) if strict => bail!("{}:{}: malformed record: {e}", path.display(), i + 1),
            Err(_) => {
                builder.skip();
                continue;
            }
        };
        builder
            .push(doc)
            .map_err(|e| anyhow!("{}:{}: {e}", path.display(), i + 1))?;
    }
    let skipped = builder.skipped();
    let corpus = builder
        .finish()
        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok(Ingest { corpus, skipped })
}

/// One JSON value per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line =
            line.with_context(|| format!("{}:{}: unreadable line", path.display(), i + 1))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: malformed record", path.display(), i + 1))?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    write_jsonl(path, corpus.documents())
}

pub fn write_chunks(path: &Path, chunks: &[Chunk]) -> Result<()> {
    write_jsonl(path, chunks)
}

pub fn read_chunks(path: &Path) -> Result<Vec<Chunk>> {
    read_jsonl(path)
}

/// Reads observations from CSV (header required) or, for `.jsonl` files,
/// JSON lines with the same field names. Every row is validated.
pub fn read_observations(path: &Path) -> Result<Vec<Observation>> {
    let obs: Vec<Observation> = if path.extension().is_some_and(|e| e == "jsonl") {
        read_jsonl(path)?
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(open(path)?);
        let headers = reader.headers()?.clone();
        for need in ["mu", "sigma", "d_tokens", "test_loss"] {
            if !headers.iter().any(|h| h == need) {
                bail!("{}: missing column `{need}`", path.display());
            }
        }
        let mut out = Vec::new();
        for (i, row) in reader.deserialize().enumerate() {
            // header is line 1
            let o: Observation =
                row.with_context(|| format!("{}:{}: malformed row", path.display(), i + 2))?;
            out.push(o);
        }
        out
    };
    for (i, o) in obs.iter().enumerate() {
        o.validate()
            .map_err(|e| anyhow!("{}: record {}: {e}", path.display(), i + 1))?;
    }
    Ok(obs)
}

pub fn write_observations(path: &Path, obs: &[Observation]) -> Result<()> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        return write_jsonl(path, obs);
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["mu", "sigma", "d_tokens", "test_loss", "tag"])?;
    for o in obs {
        w.write_record([
            o.mu.to_string(),
            o.sigma.to_string(),
            o.d_tokens.to_string(),
            o.test_loss.to_string(),
            o.tag.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?)
        .with_context(|| format!("{}: malformed JSON", path.display()))
}

/// One id per line.
pub fn write_lines<S: AsRef<str>>(path: &Path, lines: &[S]) -> Result<()> {
    let mut w = create(path)?;
    for l in lines {
        writeln!(w, "{}", l.as_ref())?;
    }
    w.flush()?;
    Ok(())
}
