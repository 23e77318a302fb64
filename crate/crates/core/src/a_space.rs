//! The A-inner-product structure: adjoints for a weighted inner product,
//! the two-norm model obtained by conjugating with A^{1/2}, compatible
//! (A-symmetric) projections, and the Douglas solvability test for AX = B.
//!
//! Throughout, the "H model" is the given coordinate space with weight A, and
//! the "L model" is its image under f -> A^{1/2} f. An operator B on the H
//! side corresponds to A^{1/2} B A^{-1/2} on the L side; B is A-symmetric
//! exactly when its L-model form is Hermitian, and the A-adjoint corresponds
//! to the plain adjoint there.

use crate::error::{Error, Result};
use crate::numerics::{
    C64, CMatrix, herm_eig, pinv_solve, sigma_ratio, smallest_dominating_lambda, solve_square,
    svd_norm,
};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Conditioning above which results should be treated as diagnostic only.
pub const CONDITIONING_WARN: f64 = 1e8;

/// A Hermitian positive definite weight together with its cached square root
/// and inverse square root.
///
/// The matrix is kept exactly as supplied; its spectral norm is recorded so a
/// caller that wants the normalized (contraction) model can divide it out.
/// Every construction in this crate is invariant under rescaling A.
#[derive(Debug, Clone)]
pub struct AForm {
    a: CMatrix,
    sqrt_a: CMatrix,
    inv_sqrt_a: CMatrix,
    norm_a: f64,
    conditioning: f64,
}

impl AForm {
    pub fn new(a: CMatrix) -> Result<Arc<AForm>> {
        if !a.is_square() {
            return Err(Error::ShapeMismatch {
                context: "weight matrix must be square",
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        a.validate_finite("AForm")?;
        let scale = a.norm_max().max(f64::MIN_POSITIVE);
        let defect = a.hermitian_defect();
        let tol = 1e-10 * scale;
        if defect > tol {
            return Err(Error::NonHermitian { defect, tol });
        }
        let eig = herm_eig(&a.hermitized())?;
        let min = eig.values.first().copied().unwrap_or(0.0);
        let max = eig.values.last().copied().unwrap_or(0.0);
        if min <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
            });
        }
        let sqrt_a = eig.apply(|x| C64::new(x.sqrt(), 0.0)).hermitized();
        let inv_sqrt_a = eig.apply(|x| C64::new(1.0 / x.sqrt(), 0.0)).hermitized();
        debug_assert!(sqrt_a.matmul(&sqrt_a).max_abs_diff(&a) <= 1e-9 * scale.max(1.0));
        debug_assert!(
            sqrt_a.matmul(&inv_sqrt_a).max_abs_diff(&CMatrix::identity(a.rows())) <= 1e-9
        );
        Ok(Arc::new(AForm {
            a,
            sqrt_a,
            inv_sqrt_a,
            norm_a: max,
            conditioning: max / min,
        }))
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.a
    }

    pub fn sqrt(&self) -> &CMatrix {
        &self.sqrt_a
    }

    pub fn inv_sqrt(&self) -> &CMatrix {
        &self.inv_sqrt_a
    }

    /// Spectral norm of A (largest eigenvalue).
    pub fn norm_a(&self) -> f64 {
        self.norm_a
    }

    /// Ratio of extreme eigenvalues of A.
    pub fn conditioning(&self) -> f64 {
        self.conditioning
    }

    /// Near-singular weights mimic non-closed-range phenomena; operations keep
    /// working but should surface this flag.
    pub fn ill_conditioned(&self) -> bool {
        self.conditioning > CONDITIONING_WARN
    }

    /// <f, g>_A = <Af, g>, linear in `f`, conjugate-linear in `g`.
    pub fn a_inner(&self, f: &[C64], g: &[C64]) -> C64 {
        assert_eq!(f.len(), self.dim());
        assert_eq!(g.len(), self.dim());
        let af = self.a.matvec(f);
        af.iter()
            .zip(g)
            .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x * y.conj())
    }

    /// L-model form A^{1/2} B A^{-1/2}.
    pub fn to_l_model(&self, b: &CMatrix) -> CMatrix {
        self.sqrt_a.matmul(b).matmul(&self.inv_sqrt_a)
    }

    /// H-model form A^{-1/2} B A^{1/2}.
    pub fn from_l_model(&self, b: &CMatrix) -> CMatrix {
        self.inv_sqrt_a.matmul(b).matmul(&self.sqrt_a)
    }

    /// A-adjoint B# = A^{-1} B* A.
    pub fn a_adjoint(&self, b: &CMatrix) -> CMatrix {
        let inv_a = self.inv_sqrt_a.matmul(&self.inv_sqrt_a);
        inv_a.matmul(&b.adjoint()).matmul(&self.a)
    }

    /// max(|B|, |B#|), the involutive Banach algebra norm of the adjointable
    /// operators.
    pub fn banach_norm(&self, b: &CMatrix) -> f64 {
        svd_norm(b).max(svd_norm(&self.a_adjoint(b)))
    }

    /// Norm of the L-model form of B. For A-symmetric B this never exceeds
    /// |B|.
    pub fn l_norm(&self, b: &CMatrix) -> f64 {
        svd_norm(&self.to_l_model(b))
    }

    /// |AB - B*A| <= tol * |A| * |B| test for symmetry in the A-inner product.
    pub fn is_a_symmetric(&self, b: &CMatrix, tol: f64) -> bool {
        let lhs = self.a.matmul(b);
        let rhs = b.adjoint().matmul(&self.a);
        let scale = (self.norm_a * svd_norm(b)).max(f64::MIN_POSITIVE);
        svd_norm(&(&lhs - &rhs)) <= tol * scale
    }
}

/// Serialized form of a weight: the matrix plus a flag recording that positive
/// definiteness was verified on construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AFormJson {
    pub matrix: CMatrix,
    pub psd_checked: bool,
}

impl AFormJson {
    pub fn from_form(form: &AForm) -> Self {
        AFormJson {
            matrix: form.matrix().clone(),
            psd_checked: true,
        }
    }

    /// Validation runs regardless of the recorded flag.
    pub fn into_form(self) -> Result<Arc<AForm>> {
        AForm::new(self.matrix)
    }
}

/// An A-symmetric idempotent Q (equivalently, the projection onto a compatible
/// subspace along its A-orthogonal complement). The L-model form of Q is an
/// orthogonal projection.
#[derive(Debug, Clone)]
pub struct AProjection {
    form: Arc<AForm>,
    q: CMatrix,
}

impl AProjection {
    pub fn new(form: Arc<AForm>, q: CMatrix) -> Result<Self> {
        if q.rows() != form.dim() || q.cols() != form.dim() {
            return Err(Error::ShapeMismatch {
                context: "projection must match the weight dimension",
                rows: q.rows(),
                cols: q.cols(),
            });
        }
        let scale = svd_norm(&q).max(1.0);
        let idem = svd_norm(&(&q.matmul(&q) - &q));
        if idem > 1e-9 * scale * scale {
            return Err(Error::NotIdempotent { residual: idem });
        }
        let sym = svd_norm(&(&form.matrix().matmul(&q) - &q.adjoint().matmul(form.matrix())));
        if sym > 1e-9 * form.norm_a().max(1.0) * scale {
            return Err(Error::InvalidInput(format!(
                "idempotent is not A-symmetric: |AQ - Q*A| = {sym:.3e}"
            )));
        }
        Ok(AProjection { form, q })
    }

    pub fn form(&self) -> &Arc<AForm> {
        &self.form
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.q
    }

    /// Orthogonal projection representing Q in the L model.
    pub fn l_model(&self) -> CMatrix {
        self.form.to_l_model(&self.q)
    }

    pub fn rank(&self) -> usize {
        // Idempotent: rank equals the trace, which is real and near-integer.
        let tr: f64 = (0..self.q.rows()).map(|i| self.q[(i, i)].re).sum();
        tr.round().max(0.0) as usize
    }
}

/// Projection onto the column span of `f`, A-orthogonal along A(span)^perp:
/// Q = F (F*AF)^{-1} F* A.
pub fn compatible_projector(form: &Arc<AForm>, f: &CMatrix) -> Result<AProjection> {
    if f.rows() != form.dim() {
        return Err(Error::ShapeMismatch {
            context: "frame rows must match the weight dimension",
            rows: f.rows(),
            cols: f.cols(),
        });
    }
    if f.cols() == 0 || f.cols() > f.rows() {
        return Err(Error::InvalidInput(format!(
            "frame must have between 1 and {} columns, got {}",
            f.rows(),
            f.cols()
        )));
    }
    let ratio = sigma_ratio(f);
    if ratio <= 1e-10 {
        return Err(Error::RankDeficient { ratio });
    }
    let gram = f.adjoint().matmul(form.matrix()).matmul(f);
    let rhs = f.adjoint().matmul(form.matrix());
    let solved = solve_square(&gram.hermitized(), &rhs).map_err(|_| Error::RankDeficient {
        ratio: sigma_ratio(&gram),
    })?;
    let q = f.matmul(&solved);
    AProjection::new(form.clone(), q)
}

/// Orthogonal projection onto the range of an idempotent:
/// P = Q (Q + Q* - 1)^{-1}.
pub fn projector_from_idempotent(q: &CMatrix) -> Result<CMatrix> {
    if !q.is_square() {
        return Err(Error::ShapeMismatch {
            context: "idempotent must be square",
            rows: q.rows(),
            cols: q.cols(),
        });
    }
    let scale = svd_norm(q).max(1.0);
    let idem = svd_norm(&(&q.matmul(q) - q));
    if idem > 1e-8 * scale * scale {
        return Err(Error::NotIdempotent { residual: idem });
    }
    let mid = &(q + &q.adjoint()) - &CMatrix::identity(q.rows());
    let inv = solve_square(&mid, &CMatrix::identity(q.rows())).map_err(|_| Error::Singular {
        context: "Q + Q* - 1 is not invertible",
    })?;
    Ok(q.matmul(&inv))
}

/// Outcome of the range-inclusion test for AX = B with Hermitian PSD A.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DouglasReport {
    pub solvable: bool,
    /// Least-squares solution A^+ B (present when solvable).
    pub x: Option<CMatrix>,
    /// Smallest lambda >= 0 with BB* <= lambda AA* + slack (present when
    /// solvable).
    pub lambda: Option<f64>,
    pub residual: f64,
    /// Component of B outside the range of A, relative to |B|.
    pub range_defect: f64,
}

/// Douglas test: AX = B is solvable iff R(B) is contained in R(A) iff
/// BB* <= lambda AA* for some lambda. The three routes are computed
/// independently and must agree; `solvable` reports the least-squares route.
///
/// A may be singular; that is the interesting case.
pub fn douglas(a: &CMatrix, b: &CMatrix) -> Result<DouglasReport> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch {
            context: "douglas coefficient must be square",
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if b.rows() != a.rows() {
        return Err(Error::ShapeMismatch {
            context: "right-hand side rows must match the coefficient",
            rows: b.rows(),
            cols: b.cols(),
        });
    }
    let scale = a.norm_max().max(f64::MIN_POSITIVE);
    let defect = a.hermitian_defect();
    let tol = 1e-10 * scale;
    if defect > tol {
        return Err(Error::NonHermitian { defect, tol });
    }
    let eig = herm_eig(&a.hermitized())?;
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -1e-10 * scale {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }

    let norm_b = svd_norm(b);
    let (x, residual) = pinv_solve(a, b);
    let solvable = residual <= 1e-8 * norm_b.max(f64::MIN_POSITIVE);

    // Range route: distance from B to A's eigen-range.
    let lam_max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = 1e-12 * lam_max;
    let n = a.rows();
    let kept: Vec<usize> = (0..n).filter(|&i| eig.values[i] > cutoff).collect();
    let range_proj = if kept.is_empty() {
        CMatrix::zeros(n, n)
    } else {
        let basis = CMatrix::from_fn(n, kept.len(), |r, c| eig.vectors[(r, kept[c])]);
        basis.matmul(&basis.adjoint())
    };
    let outside = &b.clone() - &range_proj.matmul(b);
    let range_defect = if norm_b == 0.0 {
        0.0
    } else {
        svd_norm(&outside) / norm_b
    };

    let lambda = if solvable {
        let aa = a.matmul(&a.adjoint()).hermitized();
        let bb = b.matmul(&b.adjoint()).hermitized();
        smallest_dominating_lambda(&bb, &aa, 1e-8)?
    } else {
        None
    };

    Ok(DouglasReport {
        solvable,
        x: solvable.then_some(x),
        lambda,
        residual,
        range_defect,
    })
}
