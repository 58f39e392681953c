//! Single-pass sample sources.
//!
//! A [`SampleStream`] hands out each sample exactly once and has no rewind.
//! A second pass over the same data is only possible by asking the stream's
//! [`StreamSource`] for a fresh, evaluation-only stream, which the trainers
//! refuse.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::model::SpikedModel;
use crate::rng::{self, SeededRng};

pub trait SampleStream {
    /// Ambient dimension `p` of every sample.
    fn dim(&self) -> usize;

    /// The next sample, or `None` once the stream is exhausted. The slice is
    /// only valid until the following call.
    fn next_sample(&mut self) -> Option<&[f64]>;

    /// Samples handed out so far.
    fn consumed(&self) -> usize;

    /// Evaluation streams are second passes; trainers reject them.
    fn is_evaluation(&self) -> bool {
        false
    }

    /// Descriptor for reopening the same data, when the source allows it.
    fn source(&self) -> Option<StreamSource> {
        None
    }
}

impl<S: SampleStream + ?Sized> SampleStream for Box<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn next_sample(&mut self) -> Option<&[f64]> {
        (**self).next_sample()
    }
    fn consumed(&self) -> usize {
        (**self).consumed()
    }
    fn is_evaluation(&self) -> bool {
        (**self).is_evaluation()
    }
    fn source(&self) -> Option<StreamSource> {
        (**self).source()
    }
}

/// Which axis of a corpus supplies the samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// One sample per document, of dimension `W` (vocabulary size).
    DocsAsSamples,
    /// One sample per word, of dimension `D` (document count).
    WordsAsSamples,
}

/// Re-openable data description.
#[derive(Clone, Debug)]
pub enum StreamSource {
    Model {
        model: Arc<SpikedModel>,
        n: usize,
        seed: u64,
    },
    Corpus {
        corpus: Arc<BagOfWordsCorpus>,
        orientation: Orientation,
        normalize: bool,
    },
}

impl StreamSource {
    pub fn open(&self) -> Box<dyn SampleStream> {
        self.open_flagged(false)
    }

    pub fn open_for_evaluation(&self) -> Box<dyn SampleStream> {
        self.open_flagged(true)
    }

    fn open_flagged(&self, evaluation: bool) -> Box<dyn SampleStream> {
        match self {
            StreamSource::Model { model, n, seed } => {
                let mut s = ModelStream::new(Arc::clone(model), *n, *seed);
                s.evaluation = evaluation;
                Box::new(s)
            }
            StreamSource::Corpus {
                corpus,
                orientation,
                normalize,
            } => {
                let mut s = CorpusStream::new(Arc::clone(corpus), *orientation);
                s.normalize = *normalize;
                s.evaluation = evaluation;
                Box::new(s)
            }
        }
    }
}

/// A fresh pass over the data behind `stream`, flagged evaluation-only.
pub fn reopen_for_evaluation(stream: &dyn SampleStream) -> Result<Box<dyn SampleStream>> {
    stream
        .source()
        .map(|s| s.open_for_evaluation())
        .ok_or(Error::NotReopenable)
}

/// `n` draws from a [`SpikedModel`], reproducible from `seed`.
pub struct ModelStream {
    model: Arc<SpikedModel>,
    n: usize,
    seed: u64,
    rng: SeededRng,
    consumed: usize,
    sample: Vec<f64>,
    latent: Vec<f64>,
    evaluation: bool,
}

impl ModelStream {
    pub fn new(model: Arc<SpikedModel>, n: usize, seed: u64) -> Self {
        let p = model.dim();
        let r = model.rank();
        ModelStream {
            model,
            n,
            seed,
            rng: rng::seeded(seed),
            consumed: 0,
            sample: vec![0.0; p],
            latent: vec![0.0; r],
            evaluation: false,
        }
    }

    pub fn remaining(&self) -> usize {
        self.n - self.consumed
    }
}

pub fn stream_from_model(model: Arc<SpikedModel>, n: usize, seed: u64) -> ModelStream {
    ModelStream::new(model, n, seed)
}

impl SampleStream for ModelStream {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn next_sample(&mut self) -> Option<&[f64]> {
        if self.consumed >= self.n {
            return None;
        }
        self.model
            .draw_sample_into(&mut self.rng, &mut self.sample, &mut self.latent);
        self.consumed += 1;
        Some(&self.sample)
    }

    fn consumed(&self) -> usize {
        self.consumed
    }

    fn is_evaluation(&self) -> bool {
        self.evaluation
    }

    fn source(&self) -> Option<StreamSource> {
        Some(StreamSource::Model {
            model: Arc::clone(&self.model),
            n: self.n,
            seed: self.seed,
        })
    }
}

/// One-shot stream over samples held in memory. Cannot be reopened.
pub struct InMemoryStream {
    dim: usize,
    samples: std::vec::IntoIter<Vec<f64>>,
    current: Vec<f64>,
    consumed: usize,
    evaluation: bool,
}

impl InMemoryStream {
    pub fn new(samples: Vec<Vec<f64>>) -> Result<Self> {
        let dim = samples.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::EmptyStream);
        }
        if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("samples must be finite".into()));
        }
        Ok(InMemoryStream {
            dim,
            samples: samples.into_iter(),
            current: Vec::new(),
            consumed: 0,
            evaluation: false,
        })
    }

    /// An in-memory stream marked as an evaluation pass.
    pub fn for_evaluation(samples: Vec<Vec<f64>>) -> Result<Self> {
        let mut s = InMemoryStream::new(samples)?;
        s.evaluation = true;
        Ok(s)
    }
}

impl SampleStream for InMemoryStream {
    fn dim(&self) -> usize {
        self.dim
    }

    fn next_sample(&mut self) -> Option<&[f64]> {
        self.current = self.samples.next()?;
        self.consumed += 1;
        Some(&self.current)
    }

    fn consumed(&self) -> usize {
        self.consumed
    }

    fn is_evaluation(&self) -> bool {
        self.evaluation
    }
}

/// One `(doc, word, count)` entry with 1-based ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triple {
    pub doc: u32,
    pub word: u32,
    pub count: u32,
}

/// UCI bag-of-words "docword" corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct BagOfWordsCorpus {
    docs: usize,
    vocab: usize,
    triples: Vec<Triple>,
}

impl BagOfWordsCorpus {
    pub fn new(docs: usize, vocab: usize, triples: Vec<Triple>) -> Result<Self> {
        if docs == 0 || vocab == 0 {
            return Err(Error::CorpusValidation(format!(
                "document and vocabulary counts must be positive, got D={docs}, W={vocab}"
            )));
        }
        for (i, t) in triples.iter().enumerate() {
            check_triple(t, docs, vocab)
                .map_err(|m| Error::CorpusValidation(format!("triple {}: {m}", i + 1)))?;
        }
        Ok(BagOfWordsCorpus {
            docs,
            vocab,
            triples,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.docs
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    pub fn nonzero_count(&self) -> usize {
        self.triples.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Sample count and dimension under `orientation`.
    pub fn shape(&self, orientation: Orientation) -> (usize, usize) {
        match orientation {
            Orientation::DocsAsSamples => (self.docs, self.vocab),
            Orientation::WordsAsSamples => (self.vocab, self.docs),
        }
    }

    /// Parses docword text. `path` only decorates error messages.
    pub fn from_reader<R: BufRead>(reader: R, path: Option<&Path>) -> Result<Self> {
        let path_buf = path.map(Path::to_path_buf);
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path_buf.clone(),
            line,
            message,
        };

        let mut header = [0usize; 3];
        let mut header_seen = 0;
        let mut triples = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| Error::Io {
                path: path_buf.clone().unwrap_or_default(),
                source,
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if header_seen < 3 {
                header[header_seen] = trimmed.parse().map_err(|_| {
                    parse_err(
                        line_no,
                        format!("expected a header integer, got {trimmed:?}"),
                    )
                })?;
                header_seen += 1;
                if header_seen == 3 {
                    triples.reserve(header[2].min(1 << 24));
                }
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let mut next = |name: &str| -> Result<u32> {
                let tok = fields
                    .next()
                    .ok_or_else(|| parse_err(line_no, format!("missing {name}")))?;
                tok.parse()
                    .map_err(|_| parse_err(line_no, format!("{name} {tok:?} is not an integer")))
            };
            let t = Triple {
                doc: next("doc id")?,
                word: next("word id")?,
                count: next("count")?,
            };
            if fields.next().is_some() {
                return Err(parse_err(line_no, "expected exactly three fields".into()));
            }
            check_triple(&t, header[0], header[1])
                .map_err(|m| Error::CorpusValidation(format!("line {line_no}: {m}")))?;
            triples.push(t);
        }
        if header_seen < 3 {
            return Err(parse_err(header_seen + 1, "truncated header".into()));
        }
        if triples.len() != header[2] {
            return Err(Error::CorpusValidation(format!(
                "header declares NNZ={} but {} triples were read",
                header[2],
                triples.len()
            )));
        }
        BagOfWordsCorpus::new(header[0], header[1], triples)
    }

    /// Writes the corpus back out in docword format.
    pub fn write_docword<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.docs)?;
        writeln!(w, "{}", self.vocab)?;
        writeln!(w, "{}", self.triples.len())?;
        for t in &self.triples {
            writeln!(w, "{} {} {}", t.doc, t.word, t.count)?;
        }
        Ok(())
    }
}

fn check_triple(t: &Triple, docs: usize, vocab: usize) -> std::result::Result<(), String> {
    if t.doc == 0 || t.doc as usize > docs {
        return Err(format!("doc id {} outside 1..={docs}", t.doc));
    }
    if t.word == 0 || t.word as usize > vocab {
        return Err(format!("word id {} outside 1..={vocab}", t.word));
    }
    if t.count == 0 {
        return Err("count must be at least 1".into());
    }
    Ok(())
}

/// Reads a docword file; names ending in `.gz` are decompressed.
pub fn parse_bag_of_words(path: impl AsRef<Path>) -> Result<BagOfWordsCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    BagOfWordsCorpus::from_reader(BufReader::new(reader), Some(path))
}

/// Triples bucketed by sample id (CSR layout), built in one pre-pass.
struct SampleIndex {
    offsets: Vec<usize>,
    coords: Vec<u32>,
    counts: Vec<f64>,
}

impl SampleIndex {
    fn build(corpus: &BagOfWordsCorpus, orientation: Orientation) -> Self {
        let (n, _) = corpus.shape(orientation);
        let key = |t: &Triple| match orientation {
            Orientation::DocsAsSamples => (t.doc - 1, t.word - 1),
            Orientation::WordsAsSamples => (t.word - 1, t.doc - 1),
        };
        let mut offsets = vec![0usize; n + 1];
        for t in &corpus.triples {
            offsets[key(t).0 as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let nnz = corpus.triples.len();
        let mut cursor = offsets.clone();
        let mut coords = vec![0u32; nnz];
        let mut counts = vec![0.0; nnz];
        for t in &corpus.triples {
            let (s, c) = key(t);
            let slot = &mut cursor[s as usize];
            coords[*slot] = c;
            counts[*slot] = f64::from(t.count);
            *slot += 1;
        }
        // Repeated (doc, word) pairs are merged so every coordinate appears
        // once per sample.
        let mut merged_offsets = Vec::with_capacity(n + 1);
        merged_offsets.push(0);
        let mut merged_coords = Vec::with_capacity(nnz);
        let mut merged_counts = Vec::with_capacity(nnz);
        let mut row: Vec<(u32, f64)> = Vec::new();
        for s in 0..n {
            row.clear();
            row.extend((offsets[s]..offsets[s + 1]).map(|e| (coords[e], counts[e])));
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in &row {
                if merged_coords.len() > merged_offsets[s] && merged_coords.last() == Some(&c) {
                    *merged_counts.last_mut().expect("nonempty") += v;
                } else {
                    merged_coords.push(c);
                    merged_counts.push(v);
                }
            }
            merged_offsets.push(merged_coords.len());
        }
        SampleIndex {
            offsets: merged_offsets,
            coords: merged_coords,
            counts: merged_counts,
        }
    }

    fn entries(&self, sample: usize) -> std::ops::Range<usize> {
        self.offsets[sample]..self.offsets[sample + 1]
    }
}

/// Densifies one corpus row at a time; only the previous row's nonzeros are
/// cleared between samples.
pub struct CorpusStream {
    corpus: Arc<BagOfWordsCorpus>,
    orientation: Orientation,
    index: SampleIndex,
    n: usize,
    dim: usize,
    next: usize,
    buffer: Vec<f64>,
    normalize: bool,
    evaluation: bool,
}

impl CorpusStream {
    pub fn new(corpus: Arc<BagOfWordsCorpus>, orientation: Orientation) -> Self {
        let (n, dim) = corpus.shape(orientation);
        let index = SampleIndex::build(&corpus, orientation);
        CorpusStream {
            corpus,
            orientation,
            index,
            n,
            dim,
            next: 0,
            buffer: vec![0.0; dim],
            normalize: false,
            evaluation: false,
        }
    }

    /// Scale every sample to unit ℓ₂ norm (all-zero samples stay zero).
    pub fn with_normalization(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }
}

pub fn stream_from_corpus(corpus: Arc<BagOfWordsCorpus>, orientation: Orientation) -> CorpusStream {
    CorpusStream::new(corpus, orientation)
}

impl SampleStream for CorpusStream {
    fn dim(&self) -> usize {
        self.dim
    }

    fn next_sample(&mut self) -> Option<&[f64]> {
        if self.next >= self.n {
            return None;
        }
        if self.next > 0 {
            for e in self.index.entries(self.next - 1) {
                self.buffer[self.index.coords[e] as usize] = 0.0;
            }
        }
        let range = self.index.entries(self.next);
        for e in range.clone() {
            self.buffer[self.index.coords[e] as usize] = self.index.counts[e];
        }
        if self.normalize {
            let scale = range
                .clone()
                .map(|e| self.index.counts[e] * self.index.counts[e])
                .sum::<f64>()
                .sqrt();
            if scale > 0.0 {
                for e in range {
                    self.buffer[self.index.coords[e] as usize] /= scale;
                }
            }
        }
        self.next += 1;
        Some(&self.buffer)
    }

    fn consumed(&self) -> usize {
        self.next
    }

    fn is_evaluation(&self) -> bool {
        self.evaluation
    }

    fn source(&self) -> Option<StreamSource> {
        Some(StreamSource::Corpus {
            corpus: Arc::clone(&self.corpus),
            orientation: self.orientation,
            normalize: self.normalize,
        })
    }
}

impl std::fmt::Debug for CorpusStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CorpusStream")
            .field("orientation", &self.orientation)
            .field("n", &self.n)
            .field("dim", &self.dim)
            .field("consumed", &self.next)
            .finish()
    }
}
