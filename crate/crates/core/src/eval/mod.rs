//! Word-similarity and word-analogy evaluation.
//!
//! Similarity benchmarks are scored by the Spearman correlation between
//! cosine similarities and human judgements. Analogies `a : b :: c : ?` are
//! answered with 3CosAdd, the vocabulary word (other than a, b, c) whose
//! vector has the largest cosine with `b − a + c`. Items touching an
//! out-of-vocabulary word are skipped and counted.

mod dataset;

use std::fmt;
use std::io;

use nalgebra::{DMatrix, DVector, DVectorView};
use thiserror::Error;

use crate::embio::EmbeddingTable;

pub use dataset::{AnalogyDataset, AnalogyRow, SimilarityDataset, SimilarityRow};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 items to correlate, have {0}")]
    TooFewItems(usize),
    #[error("correlation undefined: one input is constant")]
    ConstantInput,
    #[error("word {0:?} is out of vocabulary")]
    OutOfVocabulary(String),
    #[error("no candidate words left after excluding the query")]
    NoCandidates,
    #[error("no usable questions (all {0} out of vocabulary)")]
    NoUsableQuestions(usize),
}

/// Average ranks (1-based); tied values share the mean of their positions.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut out = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            out[k] = rank;
        }
        start = end;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with tie-averaged ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(EvalError::TooFewItems(xs.len()));
    }
    pearson(&ranks(xs), &ranks(ys))
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: DVectorView<'_, f64>, b: DVectorView<'_, f64>) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        0.0
    } else {
        a.dot(&b) / denom
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Similarity,
    Analogy,
    ScoredAnalogy,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Similarity => "similarity",
            Task::Analogy => "analogy",
            Task::ScoredAnalogy => "scored-analogy",
        }
    }

    pub fn metric(self) -> &'static str {
        match self {
            Task::Similarity | Task::ScoredAnalogy => "spearman",
            Task::Analogy => "accuracy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub task: Task,
    pub score: f64,
    pub n_total: usize,
    pub n_used: usize,
}

impl EvalReport {
    pub fn metric(&self) -> &'static str {
        self.task.metric()
    }

    pub fn n_skipped(&self) -> usize {
        self.n_total - self.n_used
    }

    pub fn coverage(&self) -> f64 {
        if self.n_total == 0 {
            0.0
        } else {
            self.n_used as f64 / self.n_total as f64
        }
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dataset={} task={} metric={} score={:.4} used={}/{} coverage={:.4}",
            self.dataset,
            self.task.as_str(),
            self.metric(),
            self.score,
            self.n_used,
            self.n_total,
            self.coverage()
        )
    }
}

pub fn eval_similarity(t: &EmbeddingTable, ds: &SimilarityDataset) -> Result<EvalReport, EvalError> {
    let mut model = Vec::new();
    let mut human = Vec::new();
    for row in &ds.rows {
        if let (Some(a), Some(b)) = (t.get(&row.word1), t.get(&row.word2)) {
            model.push(cosine(a, b));
            human.push(row.human_score);
        }
    }
    if model.len() < 2 {
        return Err(EvalError::TooFewItems(model.len()));
    }
    Ok(EvalReport {
        dataset: ds.name.clone(),
        task: Task::Similarity,
        score: spearman(&model, &human)?,
        n_total: ds.rows.len(),
        n_used: model.len(),
    })
}

/// Unit-normalized copy of a table for repeated nearest-neighbour queries.
pub struct CosineIndex<'a> {
    table: &'a EmbeddingTable,
    unit: DMatrix<f64>,
}

impl<'a> CosineIndex<'a> {
    pub fn new(table: &'a EmbeddingTable) -> Self {
        let mut unit = table.vectors().clone();
        for mut col in unit.column_iter_mut() {
            let n = col.norm();
            if n > 0.0 {
                col /= n;
            }
        }
        CosineIndex { table, unit }
    }

    fn lookup(&self, w: &str) -> Result<usize, EvalError> {
        self.table
            .index_of(w)
            .ok_or_else(|| EvalError::OutOfVocabulary(w.to_string()))
    }

    fn target(&self, a: usize, b: usize, c: usize) -> DVector<f64> {
        let v = self.table.vectors();
        v.column(b) - v.column(a) + v.column(c)
    }

    /// Index of the 3CosAdd answer to `a : b :: c : ?`.
    pub fn answer_index(&self, a: &str, b: &str, c: &str) -> Result<usize, EvalError> {
        let (ia, ib, ic) = (self.lookup(a)?, self.lookup(b)?, self.lookup(c)?);
        let scores = self.unit.tr_mul(&self.target(ia, ib, ic));
        let mut best: Option<(usize, f64)> = None;
        for (w, &s) in scores.iter().enumerate() {
            if w == ia || w == ib || w == ic {
                continue;
            }
            match best {
                Some((_, top)) if !(s > top) => {}
                _ => best = Some((w, s)),
            }
        }
        best.map(|(w, _)| w).ok_or(EvalError::NoCandidates)
    }

    pub fn answer(&self, a: &str, b: &str, c: &str) -> Result<&'a str, EvalError> {
        let i = self.answer_index(a, b, c)?;
        Ok(self.table.words()[i].as_str())
    }

    /// `cos(d, b − a + c)`.
    pub fn relational_score(&self, a: &str, b: &str, c: &str, d: &str) -> Result<f64, EvalError> {
        let (ia, ib, ic, id) = (self.lookup(a)?, self.lookup(b)?, self.lookup(c)?, self.lookup(d)?);
        let target = self.target(ia, ib, ic);
        Ok(cosine(self.table.vectors().column(id), target.column(0)))
    }
}

pub fn answer_analogy(t: &EmbeddingTable, a: &str, b: &str, c: &str) -> Result<String, EvalError> {
    CosineIndex::new(t).answer(a, b, c).map(str::to_string)
}

/// Accuracy of 3CosAdd answers, or (when `scored`) the Spearman correlation
/// between `cos(d, b − a + c)` and the gold scores.
pub fn eval_analogy(t: &EmbeddingTable, ds: &AnalogyDataset, scored: bool) -> Result<EvalReport, EvalError> {
    let index = CosineIndex::new(t);
    let in_vocab = |r: &AnalogyRow| [&r.a, &r.b, &r.c, &r.expected].iter().all(|w| t.contains(w));
    let usable: Vec<&AnalogyRow> = ds.rows.iter().filter(|r| in_vocab(r)).collect();
    if usable.is_empty() {
        return Err(EvalError::NoUsableQuestions(ds.rows.len()));
    }

    let (task, score) = if scored {
        let mut model = Vec::with_capacity(usable.len());
        let mut gold = Vec::with_capacity(usable.len());
        for r in &usable {
            model.push(index.relational_score(&r.a, &r.b, &r.c, &r.expected)?);
            gold.push(r.gold.ok_or_else(|| EvalError::Parse {
                line: 0,
                message: "scored evaluation needs gold scores".into(),
            })?);
        }
        (Task::ScoredAnalogy, spearman(&model, &gold)?)
    } else {
        let mut correct = 0usize;
        for r in &usable {
            // A table holding only the query words has no candidate; count as wrong.
            match index.answer(&r.a, &r.b, &r.c) {
                Ok(w) if w == r.expected => correct += 1,
                Ok(_) | Err(EvalError::NoCandidates) => {}
                Err(e) => return Err(e),
            }
        }
        (Task::Analogy, correct as f64 / usable.len() as f64)
    };
    Ok(EvalReport {
        dataset: ds.name.clone(),
        task,
        score,
        n_total: ds.rows.len(),
        n_used: usable.len(),
    })
}
