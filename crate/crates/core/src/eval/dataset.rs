//! Tab-separated benchmark files.
//!
//! Similarity: `word1 \t word2 \t score`. Analogy: `a \t b \t c \t answer`.
//! Scored analogy: `a \t b \t c \t d \t gold`. Blank lines and lines
//! starting with `#` or `:` (section markers) are skipped. Tokens are
//! taken verbatim; no case folding.

use std::fs;
use std::path::Path;

use super::EvalError;

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityRow {
    pub word1: String,
    pub word2: String,
    pub human_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDataset {
    pub name: String,
    pub rows: Vec<SimilarityRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyRow {
    pub a: String,
    pub b: String,
    pub c: String,
    pub expected: String,
    /// Gold relational-similarity score, present in scored datasets only.
    pub gold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyDataset {
    pub name: String,
    pub rows: Vec<AnalogyRow>,
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(':') {
            return None;
        }
        Some((i + 1, line.split('\t').map(str::trim).collect()))
    })
}

fn token(line: usize, field: &str) -> Result<String, EvalError> {
    if field.is_empty() || field.chars().any(char::is_whitespace) {
        return Err(EvalError::Parse {
            line,
            message: format!("invalid token {field:?}"),
        });
    }
    Ok(field.to_string())
}

fn score(line: usize, field: &str) -> Result<f64, EvalError> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(EvalError::Parse {
            line,
            message: format!("invalid score {field:?}"),
        }),
    }
}

fn expect_fields(line: usize, fields: &[&str], n: usize) -> Result<(), EvalError> {
    if fields.len() != n {
        return Err(EvalError::Parse {
            line,
            message: format!("expected {n} tab-separated fields, found {}", fields.len()),
        });
    }
    Ok(())
}

fn utf8(bytes: &[u8]) -> Result<&str, EvalError> {
    std::str::from_utf8(bytes).map_err(|e| EvalError::Parse {
        line: bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1,
        message: "invalid UTF-8".into(),
    })
}

impl SimilarityDataset {
    pub fn parse(name: &str, text: &str) -> Result<Self, EvalError> {
        let mut rows = Vec::new();
        for (line, fields) in data_lines(text) {
            expect_fields(line, &fields, 3)?;
            rows.push(SimilarityRow {
                word1: token(line, fields[0])?,
                word2: token(line, fields[1])?,
                human_score: score(line, fields[2])?,
            });
        }
        Ok(SimilarityDataset {
            name: name.to_string(),
            rows,
        })
    }

    pub fn parse_bytes(name: &str, bytes: &[u8]) -> Result<Self, EvalError> {
        Self::parse(name, utf8(bytes)?)
    }

    pub fn load(name: &str, path: impl AsRef<Path>) -> Result<Self, EvalError> {
        Self::parse_bytes(name, &fs::read(path)?)
    }
}

impl AnalogyDataset {
    /// `scored` selects the five-column format with gold scores.
    pub fn parse(name: &str, text: &str, scored: bool) -> Result<Self, EvalError> {
        let mut rows = Vec::new();
        for (line, fields) in data_lines(text) {
            expect_fields(line, &fields, if scored { 5 } else { 4 })?;
            rows.push(AnalogyRow {
                a: token(line, fields[0])?,
                b: token(line, fields[1])?,
                c: token(line, fields[2])?,
                expected: token(line, fields[3])?,
                gold: if scored {
                    Some(score(line, fields[4])?)
                } else {
                    None
                },
            });
        }
        Ok(AnalogyDataset {
            name: name.to_string(),
            rows,
        })
    }

    pub fn parse_bytes(name: &str, bytes: &[u8], scored: bool) -> Result<Self, EvalError> {
        Self::parse(name, utf8(bytes)?, scored)
    }

    pub fn load(name: &str, path: impl AsRef<Path>, scored: bool) -> Result<Self, EvalError> {
        Self::parse_bytes(name, &fs::read(path)?, scored)
    }
}
