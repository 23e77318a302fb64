//! Hermitian eigensolver (two-sided complex Jacobi rotations), spectral norm,
//! SVD-based least squares and an LU solver. Jacobi is unconditionally stable
//! and dependency-free; O(n^3) per sweep is fine at desk scale.

use super::matrix::{C64, CMatrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition M = V diag(values) V* of a Hermitian matrix.
/// Eigenvalues ascending, eigenvectors as the columns of a unitary `vectors`.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermEig {
    /// V f(diag) V* for a scalar function applied to the spectrum.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let scaled = CMatrix::from_fn(n, n, |r, c| v[(r, c)] * f(self.values[c]));
        scaled.matmul(&v.adjoint())
    }
}

fn offdiag_fro(h: &CMatrix) -> f64 {
    let n = h.rows();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += h[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// The input must satisfy |M - M*|_max <= 1e-10 * |M|_max; the iteration then
/// reconstructs M to machine precision (far inside the 1e-9 contract used by
/// the callers).
pub fn herm_eig(m: &CMatrix) -> Result<HermEig> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch {
            context: "herm_eig needs a square matrix",
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    m.validate_finite("herm_eig")?;
    let n = m.rows();
    let scale = m.norm_max();
    let herm_tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let defect = m.hermitian_defect();
    if defect > herm_tol {
        return Err(Error::NonHermitian {
            defect,
            tol: herm_tol,
        });
    }

    let mut h = m.hermitized();
    let mut v = CMatrix::identity(n);
    if n <= 1 || scale == 0.0 {
        let values = (0..n).map(|i| h[(i, i)].re).collect();
        return Ok(HermEig { values, vectors: v });
    }

    let fro = h.norm_fro();
    let target = 1e-14 * fro;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        if offdiag_fro(&h) <= target {
            converged = true;
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let b = h[(p, q)];
                let abs_b = b.norm();
                if abs_b <= 1e-18 * fro {
                    continue;
                }
                // Unitary 2x2 rotation zeroing the (p, q) entry: phase u aligns
                // b with the real axis, then a real Jacobi angle is applied.
                let u = b / abs_b;
                let tau = (h[(q, q)].re - h[(p, p)].re) / (2.0 * abs_b);
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let su = u * s;

                // Left multiply by U*: rows p and q.
                for k in 0..n {
                    let hp = h[(p, k)];
                    let hq = h[(q, k)];
                    h[(p, k)] = hp * c + hq * su;
                    h[(q, k)] = -hp * su.conj() + hq * c;
                }
                // Right multiply by U: columns p and q.
                for k in 0..n {
                    let hp = h[(k, p)];
                    let hq = h[(k, q)];
                    h[(k, p)] = hp * c + hq * su.conj();
                    h[(k, q)] = -hp * su + hq * c;
                }
                for k in 0..n {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = vp * c + vq * su.conj();
                    v[(k, q)] = -vp * su + vq * c;
                }
            }
        }
    }
    if !converged && offdiag_fro(&h) > target {
        return Err(Error::NoConvergence {
            what: "Jacobi eigensolver",
            iterations: MAX_SWEEPS,
            residual: offdiag_fro(&h) / fro,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| h[(a, a)].re.total_cmp(&h[(b, b)].re));
    let values: Vec<f64> = order.iter().map(|&i| h[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermEig { values, vectors })
}

/// V f(diag) V* for Hermitian input (square root, inverse square root, exp...).
pub fn herm_fun(m: &CMatrix, f: impl Fn(f64) -> C64) -> Result<CMatrix> {
    Ok(herm_eig(m)?.apply(f))
}

/// Largest singular value, i.e. the operator 2-norm, via the Hermitian
/// eigenproblem for M*M.
pub fn svd_norm(m: &CMatrix) -> f64 {
    if m.rows() == 0 || m.cols() == 0 || m.norm_max() == 0.0 {
        return 0.0;
    }
    // Scale to keep M*M away from overflow/underflow.
    let scale = m.norm_max();
    let ms = m.scale_re(1.0 / scale);
    let gram = ms.adjoint().matmul(&ms).hermitized();
    let eig = herm_eig(&gram).expect("Gram matrix is Hermitian by construction");
    let lam = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    scale * lam.sqrt()
}

/// Least squares X = M^+ B by the SVD of M (through M*M), with singular values
/// below 1e-12 * sigma_max treated as zero. Returns (X, |MX - B|).
pub fn pinv_solve(m: &CMatrix, b: &CMatrix) -> (CMatrix, f64) {
    assert_eq!(m.rows(), b.rows(), "pinv_solve shape mismatch");
    let gram = m.adjoint().matmul(m).hermitized();
    let eig = herm_eig(&gram).expect("Gram matrix is Hermitian by construction");
    let lam_max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff_sqr = (1e-12f64).powi(2) * lam_max;
    let mtb = m.adjoint().matmul(b);
    // X = sum over retained directions of v (v* M*B) / lambda.
    let n = m.cols();
    let mut x = CMatrix::zeros(n, b.cols());
    for (i, &lam) in eig.values.iter().enumerate() {
        if lam <= cutoff_sqr || lam <= 0.0 {
            continue;
        }
        let v = eig.vectors.col(i);
        for c in 0..b.cols() {
            let coeff = (0..n).fold(C64::new(0.0, 0.0), |acc, r| acc + v[r].conj() * mtb[(r, c)]);
            let w = coeff / lam;
            for r in 0..n {
                x[(r, c)] += v[r] * w;
            }
        }
    }
    let residual = svd_norm(&(&m.matmul(&x) - b));
    (x, residual)
}

/// Smallest singular value over largest (0 for the zero matrix).
pub fn sigma_ratio(m: &CMatrix) -> f64 {
    let gram = m.adjoint().matmul(m).hermitized();
    let eig = herm_eig(&gram).expect("Gram matrix is Hermitian by construction");
    let hi = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let lo = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    if hi == 0.0 {
        0.0
    } else {
        (lo / hi).sqrt()
    }
}

/// Solve M X = B for square M by LU with partial pivoting.
pub fn solve_square(m: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch {
            context: "solve_square needs a square matrix",
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    assert_eq!(m.rows(), b.rows(), "solve_square shape mismatch");
    let n = m.rows();
    let mut lu = m.clone();
    let mut x = b.clone();
    let scale = m.norm_max().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let (piv, piv_abs) = (k..n)
            .map(|r| (r, lu[(r, k)].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if piv_abs <= 1e-14 * scale {
            return Err(Error::Singular {
                context: "LU pivot below tolerance",
            });
        }
        if piv != k {
            for c in 0..n {
                let tmp = lu[(k, c)];
                lu[(k, c)] = lu[(piv, c)];
                lu[(piv, c)] = tmp;
            }
            for c in 0..x.cols() {
                let tmp = x[(k, c)];
                x[(k, c)] = x[(piv, c)];
                x[(piv, c)] = tmp;
            }
        }
        let inv_p = C64::new(1.0, 0.0) / lu[(k, k)];
        for r in (k + 1)..n {
            let factor = lu[(r, k)] * inv_p;
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for c in (k + 1)..n {
                let sub = factor * lu[(k, c)];
                lu[(r, c)] -= sub;
            }
            for c in 0..x.cols() {
                let sub = factor * x[(k, c)];
                x[(r, c)] -= sub;
            }
        }
    }
    for c in 0..x.cols() {
        for r in (0..n).rev() {
            let mut acc = x[(r, c)];
            for k in (r + 1)..n {
                acc -= lu[(r, k)] * x[(k, c)];
            }
            x[(r, c)] = acc / lu[(r, r)];
        }
    }
    Ok(x)
}

pub fn invert(m: &CMatrix) -> Result<CMatrix> {
    solve_square(m, &CMatrix::identity(m.rows()))
}

/// Smallest lambda >= 0 with `lhs <= lambda * rhs + slack` on the range of the
/// PSD matrix `rhs`, by bisection on the minimum eigenvalue of the compression
/// of lambda*rhs - lhs to that range. Returns None when `lhs` has a component
/// on the orthogonal complement of R(rhs) exceeding the slack (no lambda can
/// dominate there).
pub fn smallest_dominating_lambda(lhs: &CMatrix, rhs: &CMatrix, slack: f64) -> Result<Option<f64>> {
    let n = rhs.rows();
    let eig = herm_eig(&rhs.hermitized())?;
    let lam_max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = 1e-12 * lam_max;
    let kept: Vec<usize> = (0..n).filter(|&i| eig.values[i] > cutoff).collect();

    // Complement feasibility: the compression of lhs to N(rhs) must vanish.
    let comp: Vec<usize> = (0..n).filter(|&i| eig.values[i] <= cutoff).collect();
    if !comp.is_empty() {
        let basis = CMatrix::from_fn(n, comp.len(), |r, c| eig.vectors[(r, comp[c])]);
        let compressed = basis.adjoint().matmul(lhs).matmul(&basis).hermitized();
        let top = herm_eig(&compressed)?
            .values
            .last()
            .copied()
            .unwrap_or(0.0);
        if top > slack {
            return Ok(None);
        }
    }
    if kept.is_empty() {
        return Ok(Some(0.0));
    }

    let basis = CMatrix::from_fn(n, kept.len(), |r, c| eig.vectors[(r, kept[c])]);
    let lhs_c = basis.adjoint().matmul(lhs).matmul(&basis).hermitized();
    let rhs_c = basis.adjoint().matmul(rhs).matmul(&basis).hermitized();
    let feasible = |lambda: f64| -> Result<bool> {
        let diff = &rhs_c.scale_re(lambda) - &lhs_c;
        let min = herm_eig(&diff.hermitized())?.values[0];
        Ok(min >= -slack)
    };

    let mut hi = 1.0;
    let mut grow = 0;
    while !feasible(hi)? {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Ok(None);
        }
    }
    let mut lo = 0.0;
    if feasible(0.0)? {
        return Ok(Some(0.0));
    }
    // Bisection to 1e-10 absolute in lambda.
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use rand::Rng;

    fn reconstruct(eig: &HermEig) -> CMatrix {
        eig.apply(|x| C64::new(x, 0.0))
    }

    #[test]
    fn diagonal_matrix_sorts_ascending() {
        let m = CMatrix::diag_real(&[3.0, 1.0]);
        let eig = herm_eig(&m).unwrap();
        assert_eq!(eig.values, vec![1.0, 3.0]);
        // Eigenvectors form a permutation.
        assert!(reconstruct(&eig).max_abs_diff(&m) < 1e-14);
    }

    #[test]
    fn exchange_matrix_has_symmetric_spectrum() {
        let m = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let eig = herm_eig(&m).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_hermitian_reconstruction_residual() {
        let mut rng = sampling::rng_for(11, 0);
        let m = sampling::random_hermitian(&mut rng, 8);
        let eig = herm_eig(&m).unwrap();
        let scale = m.norm_max();
        assert!(reconstruct(&eig).max_abs_diff(&m) < 1e-9 * scale);
        let vtv = eig.vectors.adjoint().matmul(&eig.vectors);
        assert!(vtv.max_abs_diff(&CMatrix::identity(8)) < 1e-10);
    }

    #[test]
    fn reconstruction_and_orthonormality_hold_over_many_sizes() {
        // Statistical coverage for the eigensolver contract: 500 instances,
        // dimensions up to 32.
        let mut rng = sampling::rng_for(12, 0);
        for trial in 0..500 {
            let n = 1 + (trial % 32);
            let m = sampling::random_hermitian(&mut rng, n);
            let eig = herm_eig(&m).unwrap();
            let scale = m.norm_max().max(1e-300);
            assert!(
                reconstruct(&eig).max_abs_diff(&m) < 1e-9 * scale,
                "reconstruction failed at trial {trial} (n = {n})"
            );
            let vtv = eig.vectors.adjoint().matmul(&eig.vectors);
            assert!(vtv.max_abs_diff(&CMatrix::identity(n)) < 1e-10);
        }
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let m = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(matches!(herm_eig(&m), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn handles_degenerate_and_spread_spectra() {
        // Repeated eigenvalues and a twelve-decade spread in one matrix.
        let mut rng = sampling::rng_for(15, 0);
        let u = sampling::random_unitary(&mut rng, 6);
        let evals = [1.0, 1.0, 1.0, 2.0, 2.0, 1e-10];
        let scaled = CMatrix::from_fn(6, 6, |r, c| u[(r, c)] * evals[c]);
        let m = scaled.matmul(&u.adjoint()).hermitized();
        let eig = herm_eig(&m).unwrap();
        assert!(reconstruct(&eig).max_abs_diff(&m) < 1e-12);
        let vtv = eig.vectors.adjoint().matmul(&eig.vectors);
        assert!(vtv.max_abs_diff(&CMatrix::identity(6)) < 1e-12);
        assert!((eig.values[5] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_survives_extreme_scales() {
        let small = CMatrix::identity(3).scale_re(1e-150);
        assert!((svd_norm(&small) - 1e-150).abs() < 1e-160);
        let large = CMatrix::identity(3).scale_re(1e150);
        assert!((svd_norm(&large) - 1e150).abs() < 1e140);
    }

    #[test]
    fn spectral_norm_basics() {
        assert!((svd_norm(&CMatrix::identity(3)) - 1.0).abs() < 1e-12);
        assert_eq!(svd_norm(&CMatrix::zeros(2, 2)), 0.0);
        // Hand evaluation: M*M = diag(0, 4) so the norm is 2.
        let m = CMatrix::from_real_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]);
        assert!((svd_norm(&m) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn spectral_norm_is_unitarily_invariant() {
        let mut rng = sampling::rng_for(13, 0);
        for _ in 0..100 {
            let n = rng.random_range(1..=10);
            let m = sampling::random_matrix(&mut rng, n, n, 1.0);
            let u = sampling::random_unitary(&mut rng, n);
            let w = sampling::random_unitary(&mut rng, n);
            let rotated = u.matmul(&m).matmul(&w);
            assert!((svd_norm(&rotated) - svd_norm(&m)).abs() < 1e-9);
        }
    }

    #[test]
    fn pinv_solve_hand_cases() {
        let b = CMatrix::from_real_rows(&[vec![1.0, 0.5], vec![-2.0, 0.0]]);
        let (x, res) = pinv_solve(&CMatrix::identity(2), &b);
        assert!(x.max_abs_diff(&b) < 1e-12);
        assert!(res < 1e-12);

        let a = CMatrix::diag_real(&[1.0, 0.0]);
        let (x, res) = pinv_solve(&a, &a);
        assert!(x.max_abs_diff(&a) < 1e-12);
        assert!(res < 1e-12);

        // Unreachable right-hand side: residual is exactly |B| = 1.
        let b = CMatrix::from_real_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]);
        let (x, res) = pinv_solve(&a, &b);
        assert!(x.norm_max() < 1e-12);
        assert!((res - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lu_solves_and_detects_singularity() {
        let mut rng = sampling::rng_for(14, 0);
        let m = sampling::random_matrix(&mut rng, 6, 6, 1.0);
        let b = sampling::random_matrix(&mut rng, 6, 3, 1.0);
        let x = solve_square(&m, &b).unwrap();
        assert!(m.matmul(&x).max_abs_diff(&b) < 1e-10);

        let sing = CMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            solve_square(&sing, &CMatrix::identity(2)),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn dominating_lambda_for_equal_psd_is_one() {
        let a = CMatrix::diag_real(&[1.0, 0.0]);
        let lam = smallest_dominating_lambda(&a, &a, 1e-8).unwrap().unwrap();
        assert!((lam - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dominating_lambda_detects_complement_obstruction() {
        let rhs = CMatrix::diag_real(&[1.0, 0.0]);
        let lhs = CMatrix::diag_real(&[0.0, 1.0]);
        assert!(smallest_dominating_lambda(&lhs, &rhs, 1e-8)
            .unwrap()
            .is_none());
    }
}
