//! Geometry of the product manifold O(d) × O(d) × SPD(d).
//!
//! The orthogonal factors use the embedded (Frobenius) metric with a
//! sign-fixed QR retraction. The SPD factor uses the affine-invariant metric
//! `<X, Y>_B = tr(B⁻¹ X B⁻¹ Y)` with the second-order retraction
//! `B + tξ + ½t²ξB⁻¹ξ`, which stays positive definite for every `t`.
//! Vector transport is projection onto the target tangent space.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use thiserror::Error;

/// Maximum `‖mᵀm − I‖_F` accepted for an orthogonal point.
pub const ORTH_TOL: f64 = 1e-8;
/// Maximum `‖m − mᵀ‖_F` accepted for an SPD point.
pub const SYM_TOL: f64 = 1e-10;
/// Eigenvalue floor applied before taking matrix square roots.
pub const EIG_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error("expected a square {expected}×{expected} matrix, got {rows}×{cols}")]
    Shape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("matrix is not orthogonal: ‖MᵀM − I‖_F = {0:e}")]
    NotOrthogonal(f64),
    #[error("matrix is not symmetric: ‖M − Mᵀ‖_F = {0:e}")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("rank-deficient QR factor (step too large)")]
    RankDeficient,
    #[error("non-finite matrix entries")]
    NonFinite,
}

fn check_square(m: &DMatrix<f64>) -> Result<usize, ManifoldError> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(ManifoldError::Shape {
            expected: m.nrows().max(1),
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ManifoldError::NonFinite);
    }
    Ok(m.nrows())
}

/// `‖mᵀm − I‖_F`.
pub fn orth_drift(m: &DMatrix<f64>) -> f64 {
    let d = m.ncols();
    (m.transpose() * m - DMatrix::identity(d, d)).norm()
}

/// `‖m − mᵀ‖_F`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).norm()
}

/// `(g + gᵀ) / 2`.
pub fn sym(g: &DMatrix<f64>) -> DMatrix<f64> {
    (g + g.transpose()) * 0.5
}

/// A d×d orthogonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalPoint(DMatrix<f64>);

impl OrthogonalPoint {
    pub fn new(m: DMatrix<f64>) -> Result<Self, ManifoldError> {
        check_square(&m)?;
        let drift = orth_drift(&m);
        if drift > ORTH_TOL {
            return Err(ManifoldError::NotOrthogonal(drift));
        }
        Ok(OrthogonalPoint(m))
    }

    pub fn identity(d: usize) -> Self {
        OrthogonalPoint(DMatrix::identity(d, d))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Re-orthonormalizes through QR, removing accumulated floating-point drift.
    pub fn repaired(&self) -> Result<Self, ManifoldError> {
        qr_q(&self.0).map(OrthogonalPoint)
    }
}

/// A symmetric positive definite matrix together with its inverse.
#[derive(Debug, Clone)]
pub struct SpdPoint {
    m: DMatrix<f64>,
    inv: DMatrix<f64>,
}

impl PartialEq for SpdPoint {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m
    }
}

impl SpdPoint {
    pub fn new(m: DMatrix<f64>) -> Result<Self, ManifoldError> {
        check_square(&m)?;
        let asym = asymmetry(&m);
        if asym > SYM_TOL {
            return Err(ManifoldError::NotSymmetric(asym));
        }
        let chol = Cholesky::new(m.clone()).ok_or(ManifoldError::NotPositiveDefinite)?;
        let inv = chol.inverse();
        Ok(SpdPoint { m, inv })
    }

    pub fn identity(d: usize) -> Self {
        SpdPoint {
            m: DMatrix::identity(d, d),
            inv: DMatrix::identity(d, d),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.m.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// A point `(U, V, B)` of O(d) × O(d) × SPD(d).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    pub u: OrthogonalPoint,
    pub v: OrthogonalPoint,
    pub b: SpdPoint,
}

impl ProductPoint {
    pub fn new(u: OrthogonalPoint, v: OrthogonalPoint, b: SpdPoint) -> Result<Self, ManifoldError> {
        let d = u.dim();
        for other in [v.dim(), b.dim()] {
            if other != d {
                return Err(ManifoldError::Shape {
                    expected: d,
                    rows: other,
                    cols: other,
                });
            }
        }
        Ok(ProductPoint { u, v, b })
    }

    pub fn identity(d: usize) -> Self {
        ProductPoint {
            u: OrthogonalPoint::identity(d),
            v: OrthogonalPoint::identity(d),
            b: SpdPoint::identity(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    /// Moves along `t` by `step`, component-wise.
    pub fn retract(&self, t: &TangentVector, step: f64) -> Result<ProductPoint, ManifoldError> {
        Ok(ProductPoint {
            u: retract_orth(&self.u, &t.xi_u, step)?,
            v: retract_orth(&self.v, &t.xi_v, step)?,
            b: retract_spd(&self.b, &t.xi_b, step)?,
        })
    }
}

/// A tangent vector `(ξ_U, ξ_V, ξ_B)` at some [`ProductPoint`].
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub xi_u: DMatrix<f64>,
    pub xi_v: DMatrix<f64>,
    pub xi_b: DMatrix<f64>,
}

impl TangentVector {
    pub fn zeros(d: usize) -> Self {
        TangentVector {
            xi_u: DMatrix::zeros(d, d),
            xi_v: DMatrix::zeros(d, d),
            xi_b: DMatrix::zeros(d, d),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        TangentVector {
            xi_u: &self.xi_u * s,
            xi_v: &self.xi_v * s,
            xi_b: &self.xi_b * s,
        }
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: f64, other: &TangentVector, b: f64) -> Self {
        TangentVector {
            xi_u: &self.xi_u * a + &other.xi_u * b,
            xi_v: &self.xi_v * a + &other.xi_v * b,
            xi_b: &self.xi_b * a + &other.xi_b * b,
        }
    }

    /// Largest violation of the tangency conditions at `p`: skewness of
    /// `UᵀξU`, `VᵀξV` and symmetry of `ξB`.
    pub fn tangency_error(&self, p: &ProductPoint) -> f64 {
        let skew_err = |x: &DMatrix<f64>, xi: &DMatrix<f64>| {
            let m = x.transpose() * xi;
            (&m + m.transpose()).norm()
        };
        skew_err(p.u.matrix(), &self.xi_u)
            .max(skew_err(p.v.matrix(), &self.xi_v))
            .max(asymmetry(&self.xi_b))
    }
}

/// Projects an ambient matrix onto the tangent space of O(d) at `u`:
/// `g − u·sym(uᵀg)`.
pub fn project_tangent_orth(u: &OrthogonalPoint, g: &DMatrix<f64>) -> DMatrix<f64> {
    let u = u.matrix();
    g - u * sym(&(u.transpose() * g))
}

/// Q factor of `m` with the sign convention `diag(R) > 0`.
fn qr_q(m: &DMatrix<f64>) -> Result<DMatrix<f64>, ManifoldError> {
    check_square(m)?;
    let qr = m.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    for j in 0..r.ncols() {
        let rjj = r[(j, j)];
        if rjj.abs() <= 1e-12 * scale {
            return Err(ManifoldError::RankDeficient);
        }
        if rjj < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// QR retraction on O(d): `qf(u + step·ξ)`.
pub fn retract_orth(
    u: &OrthogonalPoint,
    xi: &DMatrix<f64>,
    step: f64,
) -> Result<OrthogonalPoint, ManifoldError> {
    if step == 0.0 {
        return Ok(u.clone());
    }
    let q = qr_q(&(u.matrix() + xi * step))?;
    Ok(OrthogonalPoint(q))
}

/// Converts a Euclidean gradient into the affine-invariant Riemannian
/// gradient: `b·sym(g)·b`.
pub fn riem_grad_spd(b: &SpdPoint, g: &DMatrix<f64>) -> DMatrix<f64> {
    let b = b.matrix();
    sym(&(b * sym(g) * b))
}

/// `b + s·ξ + ½·s²·ξ·b⁻¹·ξ`, symmetrized.
pub fn retract_spd(b: &SpdPoint, xi: &DMatrix<f64>, step: f64) -> Result<SpdPoint, ManifoldError> {
    if step == 0.0 {
        return Ok(b.clone());
    }
    let second = xi * b.inverse() * xi;
    let next = b.matrix() + xi * step + second * (0.5 * step * step);
    SpdPoint::new(sym(&next))
}

/// Product metric: Frobenius on both orthogonal factors, affine-invariant on
/// the SPD factor.
pub fn inner(p: &ProductPoint, t1: &TangentVector, t2: &TangentVector) -> f64 {
    let binv = p.b.inverse();
    let spd = (binv * &t1.xi_b)
        .component_mul(&(binv * &t2.xi_b).transpose())
        .sum();
    t1.xi_u.dot(&t2.xi_u) + t1.xi_v.dot(&t2.xi_v) + spd
}

pub fn norm(p: &ProductPoint, t: &TangentVector) -> f64 {
    inner(p, t, t).max(0.0).sqrt()
}

/// Projection-based vector transport from `_from` to `to`.
pub fn transport(_from: &ProductPoint, to: &ProductPoint, t: &TangentVector) -> TangentVector {
    TangentVector {
        xi_u: project_tangent_orth(&to.u, &t.xi_u),
        xi_v: project_tangent_orth(&to.v, &t.xi_v),
        xi_b: sym(&t.xi_b),
    }
}

/// Principal square root of an SPD matrix via symmetric eigendecomposition.
pub fn sqrt_spd(b: &SpdPoint) -> Result<SpdPoint, ManifoldError> {
    let eig = SymmetricEigen::new(b.matrix().clone());
    let roots = eig.eigenvalues.map(|l| l.max(EIG_FLOOR).sqrt());
    let q = &eig.eigenvectors;
    let s = q * DMatrix::from_diagonal(&roots) * q.transpose();
    SpdPoint::new(sym(&s))
}
