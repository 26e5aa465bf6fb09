//! Text serialization of a trained `(U, V, B)` triple.
//!
//! ```text
//! geometa-params 1
//! d 2
//! source_x glove.txt
//! source_z fasttext.txt
//! unit_norm true
//! mean_center false
//! reg_c 1e0
//! termination gradient-tolerance
//! iterations 37
//! final_loss 1.2345e2
//! U
//! <d rows of d floats>
//! V
//! <d rows>
//! B
//! <d rows>
//! ```
//!
//! Floats use the shortest representation that parses back to the same
//! bits, so a save/load cycle is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::embio::PreprocessOptions;
use crate::manifold::{ManifoldError, OrthogonalPoint, ProductPoint, SpdPoint};
use crate::optimizer::Termination;

const MAGIC: &str = "geometa-params";
const VERSION: u32 = 1;
/// Largest dimension accepted when parsing, to bound allocations.
const MAX_DIM: usize = 1 << 14;

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported params format version {0}")]
    Version(u32),
    #[error("infeasible parameters: {0}")]
    Infeasible(#[from] ManifoldError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamsHeader {
    pub source_x: String,
    pub source_z: String,
    pub preprocess: PreprocessOptions,
    pub reg_c: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamsFile {
    pub header: ParamsHeader,
    pub point: ProductPoint,
}

fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect();
    if s.is_empty() {
        "-".to_string()
    } else {
        s
    }
}

fn write_matrix(out: &mut String, label: &str, m: &DMatrix<f64>) {
    out.push_str(label);
    out.push('\n');
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:e}", m[(r, c)]);
        }
        out.push('\n');
    }
}

impl ParamsFile {
    pub fn to_text(&self) -> String {
        let h = &self.header;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {VERSION}");
        let _ = writeln!(out, "d {}", self.point.dim());
        let _ = writeln!(out, "source_x {}", sanitize(&h.source_x));
        let _ = writeln!(out, "source_z {}", sanitize(&h.source_z));
        let _ = writeln!(out, "unit_norm {}", h.preprocess.unit_normalize);
        let _ = writeln!(out, "mean_center {}", h.preprocess.mean_center);
        let _ = writeln!(out, "reg_c {:e}", h.reg_c);
        let _ = writeln!(out, "termination {}", h.termination);
        let _ = writeln!(out, "iterations {}", h.iterations);
        let _ = writeln!(out, "final_loss {:e}", h.final_loss);
        write_matrix(&mut out, "U", self.point.u.matrix());
        write_matrix(&mut out, "V", self.point.v.matrix());
        write_matrix(&mut out, "B", self.point.b.matrix());
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ParamsError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ParamsError> {
        let bytes = fs::read(path)?;
        Self::parse_bytes(&bytes)
    }

    pub fn parse_bytes(bytes: &[u8]) -> Result<Self, ParamsError> {
        let text = std::str::from_utf8(bytes).map_err(|_| ParamsError::Parse {
            line: 0,
            message: "invalid UTF-8".into(),
        })?;
        Self::parse(text)
    }

    /// Parses and validates: `U`, `V` must be orthogonal and `B` SPD.
    pub fn parse(text: &str) -> Result<Self, ParamsError> {
        let mut lines = Lines::new(text);

        let (no, magic) = lines.next_line()?;
        let mut parts = magic.split(' ');
        if parts.next() != Some(MAGIC) {
            return Err(perr(no, "missing geometa-params magic line"));
        }
        let version: u32 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| perr(no, "missing format version"))?;
        if version != VERSION {
            return Err(ParamsError::Version(version));
        }

        let d: usize = lines.field("d")?;
        if d == 0 || d > MAX_DIM {
            return Err(perr(lines.no, "dimension out of range"));
        }
        let source_x = lines.value("source_x")?.to_string();
        let source_z = lines.value("source_z")?.to_string();
        let unit_normalize: bool = lines.field("unit_norm")?;
        let mean_center: bool = lines.field("mean_center")?;
        let reg_c: f64 = lines.field("reg_c")?;
        let termination = Termination::parse(lines.value("termination")?)
            .ok_or_else(|| perr(lines.no, "unknown termination reason"))?;
        let iterations: usize = lines.field("iterations")?;
        let final_loss: f64 = lines.field("final_loss")?;
        let u = lines.matrix("U", d)?;
        let v = lines.matrix("V", d)?;
        let b = lines.matrix("B", d)?;
        if let Some((no, _)) = lines.next_nonblank() {
            return Err(perr(no, "trailing content after B"));
        }

        let point = ProductPoint::new(OrthogonalPoint::new(u)?, OrthogonalPoint::new(v)?, SpdPoint::new(b)?)?;
        Ok(ParamsFile {
            header: ParamsHeader {
                source_x,
                source_z,
                preprocess: PreprocessOptions {
                    unit_normalize,
                    mean_center,
                },
                reg_c,
                termination,
                iterations,
                final_loss,
            },
            point,
        })
    }
}

fn perr(line: usize, message: &str) -> ParamsError {
    ParamsError::Parse {
        line,
        message: message.to_string(),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    no: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            no: 0,
        }
    }

    fn next_nonblank(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.trim();
            if !line.is_empty() {
                self.no = i + 1;
                return Some((i + 1, line));
            }
        }
        None
    }

    fn next_line(&mut self) -> Result<(usize, &'a str), ParamsError> {
        self.next_nonblank()
            .ok_or_else(|| perr(self.no + 1, "unexpected end of file"))
    }

    fn value(&mut self, key: &str) -> Result<&'a str, ParamsError> {
        let (no, line) = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim()),
            _ => Err(perr(no, &format!("expected `{key} <value>`"))),
        }
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ParamsError> {
        let raw = self.value(key)?;
        raw.parse()
            .map_err(|_| perr(self.no, &format!("cannot parse {key} value {raw:?}")))
    }

    fn matrix(&mut self, label: &str, d: usize) -> Result<DMatrix<f64>, ParamsError> {
        let (no, line) = self.next_line()?;
        if line != label {
            return Err(perr(no, &format!("expected matrix label {label}")));
        }
        // Grows with the input rather than trusting `d` up front.
        let mut entries: Vec<f64> = Vec::new();
        for _ in 0..d {
            let (no, line) = self.next_line()?;
            let start = entries.len();
            for tok in line.split(' ').filter(|t| !t.is_empty()) {
                if entries.len() - start == d {
                    return Err(perr(no, "too many matrix entries"));
                }
                entries.push(
                    tok.parse()
                        .map_err(|_| perr(no, &format!("bad matrix entry {tok:?}")))?,
                );
            }
            if entries.len() - start != d {
                return Err(perr(no, "too few matrix entries"));
            }
        }
        Ok(DMatrix::from_row_slice(d, d, &entries))
    }
}
