//! Seeded random matrix generators. Every consumer derives its RNG from a
//! (seed, stream) pair so that reports are reproducible and parallel trials
//! stay independent.

use crate::numerics::{C64, CMatrix, herm_eig, svd_norm};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step, used to fold a stream index into a seed.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream)))
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, amplitude: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(
            rng.random_range(-amplitude..=amplitude),
            rng.random_range(-amplitude..=amplitude),
        )
    })
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    random_matrix(rng, n, n, 1.0).hermitized()
}

/// Random Hermitian matrix rescaled to the requested operator norm.
pub fn random_hermitian_with_norm(rng: &mut impl Rng, n: usize, target: f64) -> CMatrix {
    loop {
        let h = random_hermitian(rng, n);
        let norm = svd_norm(&h);
        if norm > 1e-12 {
            return h.scale_re(target / norm);
        }
    }
}

/// Random unitary via modified Gram-Schmidt on a random complex matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    loop {
        let m = random_matrix(rng, n, n, 1.0);
        if let Some(q) = orthonormalize(&m) {
            return q;
        }
    }
}

/// Columns orthonormalized in place; None if numerically rank deficient.
fn orthonormalize(m: &CMatrix) -> Option<CMatrix> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut q = m.clone();
    for j in 0..cols {
        let mut v = q.col(j);
        for k in 0..j {
            let u = q.col(k);
            let proj = v
                .iter()
                .zip(&u)
                .fold(C64::new(0.0, 0.0), |acc, (vi, ui)| acc + ui.conj() * vi);
            for r in 0..rows {
                v[r] -= proj * u[r];
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return None;
        }
        for z in v.iter_mut() {
            *z /= C64::new(norm, 0.0);
        }
        q.set_col(j, &v);
    }
    Some(q)
}

/// Hermitian positive definite matrix with eigenvalues in the given interval.
pub fn random_hpd(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> CMatrix {
    let u = random_unitary(rng, n);
    let evals: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    let scaled = CMatrix::from_fn(n, n, |r, c| u[(r, c)] * evals[c]);
    scaled.matmul(&u.adjoint()).hermitized()
}

/// Hermitian PSD matrix of the given rank (eigenvalues in [lo, hi] on the
/// retained directions, exactly zero elsewhere).
pub fn random_psd_with_rank(rng: &mut impl Rng, n: usize, rank: usize, lo: f64, hi: f64) -> CMatrix {
    assert!(rank <= n);
    let u = random_unitary(rng, n);
    let evals: Vec<f64> = (0..n)
        .map(|i| if i < rank { rng.random_range(lo..=hi) } else { 0.0 })
        .collect();
    let scaled = CMatrix::from_fn(n, n, |r, c| u[(r, c)] * evals[c]);
    scaled.matmul(&u.adjoint()).hermitized()
}

/// Orthogonal (Hermitian idempotent) projection onto a random subspace of the
/// given rank.
pub fn random_orthoprojection(rng: &mut impl Rng, n: usize, rank: usize) -> CMatrix {
    assert!(rank <= n);
    let u = random_unitary(rng, n);
    let basis = u.submatrix(0..n, 0..rank);
    basis.matmul(&basis.adjoint()).hermitized()
}

/// Full-column-rank rectangular frame, redrawn until comfortably conditioned.
pub fn random_frame(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    assert!(cols <= rows);
    loop {
        let f = random_matrix(rng, rows, cols, 1.0);
        if crate::numerics::sigma_ratio(&f) > 1e-3 {
            return f;
        }
    }
}

/// A Hermitian matrix with unit operator norm, useful as a unit tangent seed.
pub fn random_unit_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    random_hermitian_with_norm(rng, n, 1.0)
}

/// Sanity helper for tests: eigenvalue range of a Hermitian matrix.
pub fn eig_range(m: &CMatrix) -> (f64, f64) {
    let eig = herm_eig(&m.hermitized()).expect("Hermitian input");
    (
        eig.values.first().copied().unwrap_or(0.0),
        eig.values.last().copied().unwrap_or(0.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rng_streams_are_reproducible_and_distinct() {
        let mut a = rng_for(7, 3);
        let mut b = rng_for(7, 3);
        let mut c = rng_for(7, 4);
        let xa: u64 = a.random();
        let xb: u64 = b.random();
        let xc: u64 = c.random();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = rng_for(1, 0);
        let u = random_unitary(&mut rng, 7);
        let res = u.adjoint().matmul(&u).max_abs_diff(&CMatrix::identity(7));
        assert!(res < 1e-12);
    }

    #[test]
    fn random_hpd_is_positive() {
        let mut rng = rng_for(2, 0);
        let a = random_hpd(&mut rng, 6, 0.5, 2.0);
        let (lo, hi) = eig_range(&a);
        assert!(lo > 0.4 && hi < 2.1);
    }

    #[test]
    fn random_projection_is_idempotent() {
        let mut rng = rng_for(3, 0);
        let p = random_orthoprojection(&mut rng, 6, 2);
        assert!(p.matmul(&p).max_abs_diff(&p) < 1e-12);
        assert!(p.hermitian_defect() < 1e-12);
    }

    #[test]
    fn hermitian_with_norm_hits_target() {
        let mut rng = rng_for(4, 0);
        let h = random_hermitian_with_norm(&mut rng, 5, 2.5);
        assert!((svd_norm(&h) - 2.5).abs() < 1e-10);
    }
}
