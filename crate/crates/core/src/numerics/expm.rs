//! Matrix exponential. Hermitian and skew-Hermitian inputs go through the
//! eigendecomposition (exact unitarity of exp(iH) up to rounding); everything
//! else uses Pade(13) with scaling and squaring. The directional derivative
//! uses the doubled block matrix exp([[M, E], [0, M]]) whose top-right block
//! is the Frechet derivative of exp at M applied to E.

use super::eig::{herm_eig, solve_square};
use super::matrix::{C64, CMatrix};

/// theta_13 threshold for the order-13 Pade approximant.
const THETA_13: f64 = 5.371920351148152;

const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn pade13(m: &CMatrix) -> CMatrix {
    let n = m.rows();
    let id = CMatrix::identity(n);
    let b = &PADE_13;
    let m2 = m.matmul(m);
    let m4 = m2.matmul(&m2);
    let m6 = m2.matmul(&m4);

    let u_inner = &(&m6.scale_re(b[13]) + &m4.scale_re(b[11])) + &m2.scale_re(b[9]);
    let u_poly = &(&(&m6.matmul(&u_inner) + &m6.scale_re(b[7])) + &m4.scale_re(b[5]))
        + &(&m2.scale_re(b[3]) + &id.scale_re(b[1]));
    let u = m.matmul(&u_poly);

    let v_inner = &(&m6.scale_re(b[12]) + &m4.scale_re(b[10])) + &m2.scale_re(b[8]);
    let v = &(&(&m6.matmul(&v_inner) + &m6.scale_re(b[6])) + &m4.scale_re(b[4]))
        + &(&m2.scale_re(b[2]) + &id.scale_re(b[0]));

    // (V - U)^{-1} (V + U); nonsingular for inputs scaled below theta_13.
    solve_square(&(&v - &u), &(&v + &u)).expect("Pade denominator is nonsingular for scaled input")
}

fn exp_general(m: &CMatrix) -> CMatrix {
    let norm = m.norm_one();
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.scale_re(0.5f64.powi(squarings as i32));
    let mut result = pade13(&scaled);
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

/// exp(M) for a square matrix.
pub fn mat_exp(m: &CMatrix) -> CMatrix {
    assert!(m.is_square(), "mat_exp needs a square matrix");
    let n = m.rows();
    let scale = m.norm_max();
    if scale == 0.0 {
        return CMatrix::identity(n);
    }
    let tol = 1e-12 * scale;
    if m.hermitian_defect() <= tol {
        if let Ok(eig) = herm_eig(&m.hermitized()) {
            return eig.apply(|x| C64::new(x.exp(), 0.0));
        }
    }
    // Skew-Hermitian M = iH with H Hermitian: exp(M) = V e^{i lambda} V*.
    let skew_defect = m.max_abs_diff(&m.adjoint().scale_re(-1.0));
    if skew_defect <= tol {
        let h = m.scale(C64::new(0.0, -1.0)).hermitized();
        if let Ok(eig) = herm_eig(&h) {
            return eig.apply(|x| C64::new(0.0, x).exp());
        }
    }
    exp_general(m)
}

/// Matrices of the form [[P, D], [0, P]] are closed under the algebra
/// operations, so the doubled block exponential can run on the (P, D) pair
/// without materializing the zero blocks.
#[derive(Clone)]
struct BlockPair {
    p: CMatrix,
    d: CMatrix,
}

impl BlockPair {
    fn identity(n: usize) -> Self {
        BlockPair {
            p: CMatrix::identity(n),
            d: CMatrix::zeros(n, n),
        }
    }

    fn mul(&self, rhs: &BlockPair) -> BlockPair {
        BlockPair {
            p: self.p.matmul(&rhs.p),
            d: &self.p.matmul(&rhs.d) + &self.d.matmul(&rhs.p),
        }
    }

    fn add(&self, rhs: &BlockPair) -> BlockPair {
        BlockPair {
            p: &self.p + &rhs.p,
            d: &self.d + &rhs.d,
        }
    }

    fn scale(&self, s: f64) -> BlockPair {
        BlockPair {
            p: self.p.scale_re(s),
            d: self.d.scale_re(s),
        }
    }

    /// Solve self * X = rhs block-triangularly.
    fn solve(&self, rhs: &BlockPair) -> BlockPair {
        let xp = solve_square(&self.p, &rhs.p).expect("Pade denominator is nonsingular");
        let xd = solve_square(&self.p, &(&rhs.d - &self.d.matmul(&xp)))
            .expect("Pade denominator is nonsingular");
        BlockPair { p: xp, d: xd }
    }
}

/// (exp(M), L(M, E)) where L is the Frechet derivative of exp at M in
/// direction E: the two distinct blocks of exp([[M, E], [0, M]]), computed by
/// Pade(13) with scaling and squaring in the pair representation.
pub fn mat_exp_frechet(m: &CMatrix, e: &CMatrix) -> (CMatrix, CMatrix) {
    assert!(m.is_square() && e.is_square());
    assert_eq!(m.rows(), e.rows());
    let n = m.rows();
    // Upper bound for the block 1-norm.
    let norm = m.norm_one() + e.norm_one();
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings as i32);
    let a = BlockPair {
        p: m.scale_re(scale),
        d: e.scale_re(scale),
    };

    let b = &PADE_13;
    let id = BlockPair::identity(n);
    let a2 = a.mul(&a);
    let a4 = a2.mul(&a2);
    let a6 = a2.mul(&a4);
    let u_inner = a6.scale(b[13]).add(&a4.scale(b[11])).add(&a2.scale(b[9]));
    let u_poly = a6
        .mul(&u_inner)
        .add(&a6.scale(b[7]))
        .add(&a4.scale(b[5]))
        .add(&a2.scale(b[3]))
        .add(&id.scale(b[1]));
    let u = a.mul(&u_poly);
    let v = a6
        .mul(&a6.scale(b[12]).add(&a4.scale(b[10])).add(&a2.scale(b[8])))
        .add(&a6.scale(b[6]))
        .add(&a4.scale(b[4]))
        .add(&a2.scale(b[2]))
        .add(&id.scale(b[0]));

    let denom = v.add(&u.scale(-1.0));
    let numer = v.add(&u);
    let mut r = denom.solve(&numer);
    for _ in 0..squarings {
        r = r.mul(&r);
    }
    (r.p, r.d)
}
