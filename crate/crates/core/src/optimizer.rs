//! Riemannian conjugate gradient (Polak–Ribière+) with Armijo backtracking
//! on O(d) × O(d) × SPD(d).

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::manifold::{
    asymmetry, inner, norm, orth_drift, transport, ManifoldError, ProductPoint, TangentVector,
    ORTH_TOL,
};
use crate::objective::{loss_and_grads, to_riemannian, GramCache, RegWeight};

/// Iterations between feasibility checks of the orthogonal factors.
const REPAIR_PERIOD: usize = 25;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("initial point has dimension {got}, data has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error(
        "line search failed at the first iteration (loss {loss:e}, gradient norm {grad_norm:e}); \
         the data scale or regularization is likely off"
    )]
    LineSearchAtStart { loss: f64, grad_norm: f64 },
    #[error("non-finite loss {0} at the initial point")]
    NonFiniteLoss(f64),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub reg_c: RegWeight,
    pub max_iters: usize,
    /// Stop once `‖grad‖ ≤ grad_tol · ‖grad₀‖`.
    pub grad_tol: f64,
    pub armijo_c1: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    pub cg_restart_period: usize,
    /// Recorded for provenance; identity initialization consumes no randomness.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            reg_c: RegWeight::default(),
            max_iters: 500,
            grad_tol: 1e-6,
            armijo_c1: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 30,
            cg_restart_period: 25,
            seed: 0,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: &str| Err(SolverError::BadConfig(msg.to_string()));
        if !(self.grad_tol.is_finite() && self.grad_tol >= 0.0) {
            return bad("grad_tol must be a nonnegative number");
        }
        if !(self.armijo_c1 > 0.0 && self.armijo_c1 < 1.0) {
            return bad("armijo_c1 must lie in (0, 1)");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if self.cg_restart_period == 0 {
            return bad("cg_restart_period must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    LineSearchFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::GradientTolerance => "gradient-tolerance",
            Termination::MaxIterations => "max-iterations",
            Termination::LineSearchFailure => "line-search-failure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gradient-tolerance" => Some(Termination::GradientTolerance),
            "max-iterations" => Some(Termination::MaxIterations),
            "line-search-failure" => Some(Termination::LineSearchFailure),
            _ => None,
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// State after iteration `iteration`; record 0 is the starting point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iteration: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<IterRecord>,
    pub termination: Termination,
}

impl SolveTrace {
    /// Accepted steps taken.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn initial_loss(&self) -> f64 {
        self.records[0].loss
    }

    pub fn final_loss(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.loss)
    }

    /// One tab-separated `iteration loss grad_norm step` line per record.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "iteration\tloss\tgrad_norm\tstep")?;
        for r in &self.records {
            writeln!(
                out,
                "{}\t{:e}\t{:e}\t{:e}",
                r.iteration, r.loss, r.grad_norm, r.step
            )?;
        }
        out.flush()
    }
}

/// All three factors set to the identity, so the starting meta-embeddings
/// are the plain average / concatenation.
pub fn init_identity(d: usize) -> ProductPoint {
    ProductPoint::identity(d)
}

struct Iterate {
    point: ProductPoint,
    loss: f64,
    grad: TangentVector,
    grad_norm: f64,
}

impl Iterate {
    fn at(point: ProductPoint, cache: &GramCache, reg: RegWeight) -> Self {
        let (loss, eg) = loss_and_grads(&point, cache, reg);
        let grad = to_riemannian(&point, &eg);
        let grad_norm = norm(&point, &grad);
        Iterate {
            point,
            loss,
            grad,
            grad_norm,
        }
    }
}

/// Backtracking along `dir` from `cur`. Returns the accepted point, its loss
/// and the step length.
fn line_search(
    cur: &Iterate,
    dir: &TangentVector,
    slope: f64,
    initial_step: f64,
    cache: &GramCache,
    cfg: &SolverConfig,
) -> Option<(ProductPoint, f64, f64)> {
    let mut step = initial_step;
    for _ in 0..=cfg.max_backtracks {
        if let Ok(candidate) = cur.point.retract(dir, step) {
            let value = crate::objective::loss(&candidate, cache, cfg.reg_c);
            if value.is_finite()
                && value < cur.loss
                && value <= cur.loss + cfg.armijo_c1 * step * slope
            {
                return Some((candidate, value, step));
            }
        }
        step *= cfg.backtrack_factor;
    }
    None
}

fn repair(point: ProductPoint) -> Result<ProductPoint, ManifoldError> {
    let fix = |o: &crate::manifold::OrthogonalPoint| {
        if orth_drift(o.matrix()) > 0.1 * ORTH_TOL {
            o.repaired()
        } else {
            Ok(o.clone())
        }
    };
    Ok(ProductPoint {
        u: fix(&point.u)?,
        v: fix(&point.v)?,
        b: point.b,
    })
}

/// Minimizes the alignment objective from `init` (identity when `None`).
pub fn solve(
    cache: &GramCache,
    cfg: &SolverConfig,
    init: Option<ProductPoint>,
) -> Result<(ProductPoint, SolveTrace), SolverError> {
    cfg.validate()?;
    let d = cache.dim();
    let start = match init {
        Some(p) if p.dim() != d => {
            return Err(SolverError::DimensionMismatch {
                expected: d,
                got: p.dim(),
            })
        }
        Some(p) => p,
        None => init_identity(d),
    };

    let mut cur = Iterate::at(start, cache, cfg.reg_c);
    if !cur.loss.is_finite() {
        return Err(SolverError::NonFiniteLoss(cur.loss));
    }
    let grad0 = cur.grad_norm;
    let mut records = vec![IterRecord {
        iteration: 0,
        loss: cur.loss,
        grad_norm: cur.grad_norm,
        step: 0.0,
    }];
    let converged = |g: f64| g == 0.0 || g <= cfg.grad_tol * grad0;

    let mut dir = cur.grad.scaled(-1.0);
    let mut prev_step: Option<f64> = None;
    let mut since_restart = 0usize;
    let termination = loop {
        if converged(cur.grad_norm) {
            break Termination::GradientTolerance;
        }
        let iter = records.len();
        if iter > cfg.max_iters {
            break Termination::MaxIterations;
        }

        let initial_step = match prev_step {
            None => 1.0 / (1.0 + cur.grad_norm),
            Some(s) => (2.0 * s).clamp(1e-12, 1.0),
        };
        let mut slope = inner(&cur.point, &cur.grad, &dir);
        let mut steepest = since_restart == 0;
        if slope >= 0.0 || !slope.is_finite() {
            dir = cur.grad.scaled(-1.0);
            slope = -cur.grad_norm * cur.grad_norm;
            steepest = true;
        }

        let mut accepted = line_search(&cur, &dir, slope, initial_step, cache, cfg);
        if accepted.is_none() && !steepest {
            log::debug!("iteration {iter}: line search failed on CG direction; retrying steepest descent");
            dir = cur.grad.scaled(-1.0);
            slope = -cur.grad_norm * cur.grad_norm;
            accepted = line_search(&cur, &dir, slope, initial_step, cache, cfg);
        }
        let Some((point, _, step)) = accepted else {
            if iter == 1 {
                return Err(SolverError::LineSearchAtStart {
                    loss: cur.loss,
                    grad_norm: cur.grad_norm,
                });
            }
            break Termination::LineSearchFailure;
        };

        let point = if iter % REPAIR_PERIOD == 0 {
            repair(point)?
        } else {
            point
        };
        let next = Iterate::at(point, cache, cfg.reg_c);
        records.push(IterRecord {
            iteration: iter,
            loss: next.loss,
            grad_norm: next.grad_norm,
            step,
        });
        prev_step = Some(step);

        since_restart += 1;
        dir = if since_restart >= cfg.cg_restart_period {
            since_restart = 0;
            next.grad.scaled(-1.0)
        } else {
            let g_prev = transport(&cur.point, &next.point, &cur.grad);
            let d_prev = transport(&cur.point, &next.point, &dir);
            let diff = next.grad.lincomb(1.0, &g_prev, -1.0);
            let denom = cur.grad_norm * cur.grad_norm;
            let beta = (inner(&next.point, &next.grad, &diff) / denom).max(0.0);
            let beta = if beta.is_finite() { beta } else { 0.0 };
            next.grad.lincomb(-1.0, &d_prev, beta)
        };
        cur = next;
    };

    debug_assert!(asymmetry(cur.point.b.matrix()) <= crate::manifold::SYM_TOL);
    Ok((
        cur.point,
        SolveTrace {
            records,
            termination,
        },
    ))
}
