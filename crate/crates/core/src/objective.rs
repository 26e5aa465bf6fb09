//! The alignment objective
//!
//! ```text
//! f(U, V, B) = ‖Xᵀ Uᵀ B V Z − I‖²_F + c‖B‖²_F
//! ```
//!
//! evaluated through the second moments `XXᵀ`, `ZZᵀ`, `XZᵀ`. With
//! `W = UᵀBV` the data term expands to
//! `tr(Wᵀ·Cxx·W·Czz) − 2·tr(W·Cxzᵀ) + n`, so after one O(nd²) pass every
//! loss or gradient evaluation costs O(d³) and the n×n residual is never formed.

use nalgebra::DMatrix;

use crate::embio::AlignedPair;
use crate::manifold::{project_tangent_orth, riem_grad_spd, ProductPoint, TangentVector};

/// Second-moment matrices of a paired training set.
#[derive(Debug, Clone, PartialEq)]
pub struct GramCache {
    pub cxx: DMatrix<f64>,
    pub czz: DMatrix<f64>,
    pub cxz: DMatrix<f64>,
    pub n: usize,
}

impl GramCache {
    /// `x` and `z` are `d × n`, column `i` of each belonging to the same word.
    pub fn from_matrices(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Self {
        assert_eq!(x.shape(), z.shape(), "paired matrices must share a shape");
        let zt = z.transpose();
        GramCache {
            cxx: x * x.transpose(),
            czz: z * &zt,
            cxz: x * &zt,
            n: x.ncols(),
        }
    }

    pub fn dim(&self) -> usize {
        self.cxx.nrows()
    }
}

pub fn build_gram_cache(pair: &AlignedPair) -> GramCache {
    GramCache::from_matrices(pair.x().vectors(), pair.z().vectors())
}

/// The regularization weight `c ≥ 0` on `‖B‖²_F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegWeight(f64);

impl RegWeight {
    pub fn new(c: f64) -> Option<Self> {
        (c.is_finite() && c >= 0.0).then_some(RegWeight(c))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for RegWeight {
    fn default() -> Self {
        RegWeight(1.0)
    }
}

/// Euclidean partial gradients of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanGrads {
    pub g_u: DMatrix<f64>,
    pub g_v: DMatrix<f64>,
    pub g_b: DMatrix<f64>,
}

fn bilinear_map(p: &ProductPoint) -> DMatrix<f64> {
    p.u.matrix().transpose() * p.b.matrix() * p.v.matrix()
}

fn data_term(w: &DMatrix<f64>, cache: &GramCache) -> f64 {
    let cxx_w = &cache.cxx * w;
    let w_czz = w * &cache.czz;
    cxx_w.dot(&w_czz) - 2.0 * w.dot(&cache.cxz) + cache.n as f64
}

pub fn loss(p: &ProductPoint, cache: &GramCache, reg: RegWeight) -> f64 {
    let w = bilinear_map(p);
    data_term(&w, cache) + reg.0 * p.b.matrix().norm_squared()
}

/// Loss and Euclidean gradients in one pass.
pub fn loss_and_grads(p: &ProductPoint, cache: &GramCache, reg: RegWeight) -> (f64, EuclideanGrads) {
    let (u, v, b) = (p.u.matrix(), p.v.matrix(), p.b.matrix());
    let w = u.transpose() * b * v;
    let cxx_w = &cache.cxx * &w;
    let w_czz = &w * &cache.czz;
    let value = cxx_w.dot(&w_czz) - 2.0 * w.dot(&cache.cxz)
        + cache.n as f64
        + reg.0 * b.norm_squared();

    // D = ∂f/∂W / 2
    let d = &cxx_w * &cache.czz - &cache.cxz;
    let g_u = b * v * d.transpose() * 2.0;
    let g_v = b * u * &d * 2.0;
    let g_b = u * &d * v.transpose() * 2.0 + b * (2.0 * reg.0);
    (value, EuclideanGrads { g_u, g_v, g_b })
}

pub fn euclidean_grads(p: &ProductPoint, cache: &GramCache, reg: RegWeight) -> EuclideanGrads {
    loss_and_grads(p, cache, reg).1
}

/// Maps Euclidean gradients to the Riemannian gradient at `p`.
pub fn to_riemannian(p: &ProductPoint, g: &EuclideanGrads) -> TangentVector {
    TangentVector {
        xi_u: project_tangent_orth(&p.u, &g.g_u),
        xi_v: project_tangent_orth(&p.v, &g.g_v),
        xi_b: riem_grad_spd(&p.b, &g.g_b),
    }
}

pub fn riemannian_grad(p: &ProductPoint, cache: &GramCache, reg: RegWeight) -> TangentVector {
    to_riemannian(p, &euclidean_grads(p, cache, reg))
}

/// Bilinear alignment score `xᵀ·W·z` between every row word of `x` and
/// column word of `z`, as an `n_x × n_z` matrix.
pub fn score_matrix(p: &ProductPoint, x: &DMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    x.transpose() * bilinear_map(p) * z
}
