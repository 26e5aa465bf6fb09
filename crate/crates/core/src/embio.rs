//! Word2vec-text embedding tables: loading, preprocessing, vocabulary
//! intersection and saving.
//!
//! The text format is an optional `n d` header line followed by one line
//! per word: `token v1 v2 ... vd`, fields separated by ASCII spaces. Tokens
//! are UTF-8 and may not contain whitespace.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVectorView};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbioError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("empty embedding file")]
    Empty,
    #[error("line {line}: invalid UTF-8")]
    InvalidUtf8 { line: usize },
    #[error("line {line}: expected {expected} vector entries, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse {value:?} as a float")]
    BadFloat { line: usize, value: String },
    #[error("line {line}: non-finite vector entry {value:?}")]
    NonFinite { line: usize, value: String },
    #[error("line {line}: token {token:?} contains whitespace")]
    BadToken { line: usize, token: String },
    #[error("header declares {declared} words but the file holds {found}")]
    HeaderMismatch { declared: usize, found: usize },
    #[error("header declares dimension 0")]
    ZeroDimension,
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("dimension mismatch between tables: {0} vs {1}")]
    TableDimMismatch(usize, usize),
    #[error("empty intersection: the two vocabularies share no words")]
    EmptyIntersection,
}

/// An ordered vocabulary with one `dim`-dimensional column vector per word.
#[derive(Clone)]
pub struct EmbeddingTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: DMatrix<f64>,
}

impl EmbeddingTable {
    /// Builds a table; `vectors` is `dim × words.len()`.
    pub fn new(words: Vec<String>, vectors: DMatrix<f64>) -> Result<Self, EmbioError> {
        if words.is_empty() || vectors.nrows() == 0 {
            return Err(EmbioError::InvalidTable(
                "a table needs at least one word and one dimension".into(),
            ));
        }
        if vectors.ncols() != words.len() {
            return Err(EmbioError::InvalidTable(format!(
                "{} words but {} vector columns",
                words.len(),
                vectors.ncols()
            )));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(EmbioError::InvalidTable("non-finite vector entry".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(EmbioError::InvalidTable(format!("invalid token {w:?}")));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(EmbioError::InvalidTable(format!("duplicate token {w:?}")));
            }
        }
        Ok(EmbeddingTable {
            words,
            index,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// The `dim × len` matrix; column `i` belongs to `words()[i]`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<DVectorView<'_, f64>> {
        self.index_of(word).map(|i| self.vectors.column(i))
    }

    /// Keeps the listed words, in the listed order. Every word must exist.
    fn select(&self, words: &[String]) -> EmbeddingTable {
        let cols: Vec<usize> = words.iter().map(|w| self.index[w.as_str()]).collect();
        let vectors = self.vectors.select_columns(cols.iter());
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        EmbeddingTable {
            words: words.to_vec(),
            index,
            vectors,
        }
    }

    fn with_vectors(&self, vectors: DMatrix<f64>) -> EmbeddingTable {
        EmbeddingTable {
            words: self.words.clone(),
            index: self.index.clone(),
            vectors,
        }
    }
}

impl PartialEq for EmbeddingTable {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words && self.vectors == other.vectors
    }
}

impl fmt::Debug for EmbeddingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingTable")
            .field("len", &self.len())
            .field("dim", &self.dim())
            .finish()
    }
}

/// Counters reported while reading a table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    /// Lines whose token had already been seen; the first occurrence wins.
    pub duplicates: usize,
    pub had_header: bool,
}

/// Reads word2vec text from `reader`, keeping at most `max_words` distinct words.
pub fn read_embeddings<R: BufRead>(
    mut reader: R,
    max_words: Option<usize>,
) -> Result<(EmbeddingTable, LoadStats), EmbioError> {
    let limit = max_words.unwrap_or(usize::MAX);
    let mut stats = LoadStats::default();
    let mut header: Option<(usize, usize)> = None;
    let mut dim: Option<usize> = None;
    let mut words: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut data: Vec<f64> = Vec::new();
    let mut data_lines = 0usize;
    let mut truncated = false;
    let mut first = true;

    let mut buf = Vec::new();
    let mut lineno = 0usize;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        lineno += 1;
        let line = std::str::from_utf8(&buf)
            .map_err(|_| EmbioError::InvalidUtf8 { line: lineno })?
            .trim_end_matches(['\n', '\r']);
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let Some(token) = fields.next() else {
            continue;
        };
        let rest: Vec<&str> = fields.collect();

        if std::mem::take(&mut first) && rest.len() == 1 {
            if let (Ok(n), Ok(d)) = (token.parse::<usize>(), rest[0].parse::<usize>()) {
                if d == 0 {
                    return Err(EmbioError::ZeroDimension);
                }
                header = Some((n, d));
                dim = Some(d);
                stats.had_header = true;
                continue;
            }
        }

        if words.len() >= limit {
            truncated = true;
            break;
        }
        data_lines += 1;
        if token.chars().any(char::is_whitespace) {
            return Err(EmbioError::BadToken {
                line: lineno,
                token: token.to_string(),
            });
        }
        let expected = *dim.get_or_insert(rest.len());
        if rest.len() != expected || expected == 0 {
            return Err(EmbioError::DimensionMismatch {
                line: lineno,
                expected,
                found: rest.len(),
            });
        }
        let mut parsed = Vec::with_capacity(expected);
        for raw in &rest {
            let v: f64 = raw.parse().map_err(|_| EmbioError::BadFloat {
                line: lineno,
                value: raw.to_string(),
            })?;
            if !v.is_finite() {
                return Err(EmbioError::NonFinite {
                    line: lineno,
                    value: raw.to_string(),
                });
            }
            parsed.push(v);
        }
        match index.entry(token.to_string()) {
            Entry::Occupied(_) => stats.duplicates += 1,
            Entry::Vacant(slot) => {
                slot.insert(words.len());
                words.push(token.to_string());
                data.extend_from_slice(&parsed);
            }
        }
    }

    if let Some((declared, _)) = header {
        let consistent = if truncated {
            data_lines <= declared
        } else {
            data_lines == declared
        };
        if !consistent {
            return Err(EmbioError::HeaderMismatch {
                declared,
                found: data_lines,
            });
        }
    }
    if words.is_empty() {
        return Err(EmbioError::Empty);
    }
    if stats.duplicates > 0 {
        log::warn!(
            "{} duplicate token line(s) ignored; kept first occurrences",
            stats.duplicates
        );
    }
    let d = dim.unwrap_or(0);
    let vectors = DMatrix::from_vec(d, words.len(), data);
    Ok((
        EmbeddingTable {
            words,
            index,
            vectors,
        },
        stats,
    ))
}

/// Parses an in-memory word2vec text buffer.
pub fn parse_embeddings(
    bytes: &[u8],
    max_words: Option<usize>,
) -> Result<(EmbeddingTable, LoadStats), EmbioError> {
    read_embeddings(bytes, max_words)
}

pub fn load_embeddings(
    path: impl AsRef<Path>,
    max_words: Option<usize>,
) -> Result<EmbeddingTable, EmbioError> {
    let file = File::open(path)?;
    read_embeddings(BufReader::with_capacity(1 << 20, file), max_words).map(|(t, _)| t)
}

/// Formats a float so that parsing it back yields the same bits.
pub(crate) fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_embeddings<W: Write>(
    t: &EmbeddingTable,
    mut out: W,
    with_header: bool,
) -> io::Result<()> {
    if with_header {
        writeln!(out, "{} {}", t.len(), t.dim())?;
    }
    let mut line = String::new();
    for (i, w) in t.words.iter().enumerate() {
        line.clear();
        line.push_str(w);
        for v in t.vectors.column(i).iter() {
            line.push(' ');
            line.push_str(&fmt_float(*v));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

pub fn save_embeddings(
    t: &EmbeddingTable,
    path: impl AsRef<Path>,
    with_header: bool,
) -> Result<(), EmbioError> {
    let file = File::create(path)?;
    write_embeddings(t, BufWriter::new(file), with_header)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreprocessOptions {
    pub unit_normalize: bool,
    pub mean_center: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            unit_normalize: true,
            mean_center: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PreprocessStats {
    /// Zero columns that could not be normalized and were left as-is.
    pub zero_columns: usize,
}

/// Mean-centers (per dimension), then unit-normalizes (per word), as requested.
pub fn preprocess(t: &EmbeddingTable, opts: PreprocessOptions) -> (EmbeddingTable, PreprocessStats) {
    let mut v = t.vectors.clone();
    let mut stats = PreprocessStats::default();
    if opts.mean_center {
        let mean = v.column_mean();
        for mut col in v.column_iter_mut() {
            col -= &mean;
        }
    }
    if opts.unit_normalize {
        for mut col in v.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            } else {
                stats.zero_columns += 1;
            }
        }
        if stats.zero_columns > 0 {
            log::warn!("{} zero vector(s) left unnormalized", stats.zero_columns);
        }
    }
    (t.with_vectors(v), stats)
}

/// Two tables restricted to their shared vocabulary, in the same word order.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    x: EmbeddingTable,
    z: EmbeddingTable,
}

impl AlignedPair {
    pub fn new(x: EmbeddingTable, z: EmbeddingTable) -> Result<Self, EmbioError> {
        if x.dim() != z.dim() {
            return Err(EmbioError::TableDimMismatch(x.dim(), z.dim()));
        }
        if x.words != z.words {
            return Err(EmbioError::InvalidTable(
                "paired tables must list the same words in the same order".into(),
            ));
        }
        Ok(AlignedPair { x, z })
    }

    pub fn words(&self) -> &[String] {
        self.x.words()
    }

    pub fn x(&self) -> &EmbeddingTable {
        &self.x
    }

    pub fn z(&self) -> &EmbeddingTable {
        &self.z
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Restricts both tables to their common words, ordered as they appear in `a`.
pub fn intersect_vocab(a: &EmbeddingTable, b: &EmbeddingTable) -> Result<AlignedPair, EmbioError> {
    if a.dim() != b.dim() {
        return Err(EmbioError::TableDimMismatch(a.dim(), b.dim()));
    }
    let shared: Vec<String> = a.words.iter().filter(|w| b.contains(w)).cloned().collect();
    if shared.is_empty() {
        return Err(EmbioError::EmptyIntersection);
    }
    Ok(AlignedPair {
        x: a.select(&shared),
        z: b.select(&shared),
    })
}
