//! A-isometries (T*AT = A), the A-unitary group, final projections, local
//! cross sections for the left multiplication action, conjugators between
//! isometries with conjugate final projections, and the (degenerate in finite
//! dimension) dense Wold split.

use crate::a_space::{AForm, AProjection};
use crate::error::{Error, Result};
use crate::numerics::{
    C64, CMatrix, herm_fun, invert, smallest_dominating_lambda, svd_norm,
};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Relative defect below which T counts as an A-isometry.
pub const ISOMETRY_TOL: f64 = 1e-8;

/// Diagnostic from `check_isometry`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsometryCheck {
    pub isometric: bool,
    /// |T*AT - A| / |A|.
    pub defect: f64,
    /// Smallest lambda with T*A^2 T <= lambda A^2; a conditioning witness,
    /// finite whenever A is invertible.
    pub lambda_witness: f64,
}

/// Defect and adjointability witness for a candidate isometry.
pub fn check_isometry(form: &Arc<AForm>, t: &CMatrix) -> Result<IsometryCheck> {
    if t.rows() != form.dim() || !t.is_square() {
        return Err(Error::ShapeMismatch {
            context: "isometry candidate must be square of the weight dimension",
            rows: t.rows(),
            cols: t.cols(),
        });
    }
    let a = form.matrix();
    let pulled = t.adjoint().matmul(a).matmul(t);
    let defect = svd_norm(&(&pulled - a)) / form.norm_a();
    let a2 = a.matmul(a).hermitized();
    let lhs = t.adjoint().matmul(&a2).matmul(t).hermitized();
    let lambda_witness = smallest_dominating_lambda(&lhs, &a2, 1e-10 * form.norm_a())?
        .unwrap_or(f64::INFINITY);
    Ok(IsometryCheck {
        isometric: defect <= ISOMETRY_TOL,
        defect,
        lambda_witness,
    })
}

/// An operator preserving the A-inner product. In finite dimension with A
/// invertible these are automatically invertible, so the final projection is
/// the identity; the type still carries the full calculus so truncations of
/// infinite-dimensional isometries can be inspected through `check_isometry`.
#[derive(Debug, Clone)]
pub struct AIsometry {
    form: Arc<AForm>,
    t: CMatrix,
}

impl AIsometry {
    pub fn new(form: Arc<AForm>, t: CMatrix) -> Result<Self> {
        let check = check_isometry(&form, &t)?;
        if !check.isometric {
            return Err(Error::NotIsometric {
                defect: check.defect,
            });
        }
        Ok(AIsometry { form, t })
    }

    pub fn form(&self) -> &Arc<AForm> {
        &self.form
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.t
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    pub fn l_model(&self) -> CMatrix {
        self.form.to_l_model(&self.t)
    }

    /// The A-adjoint T# = A^{-1} T* A.
    pub fn sharp(&self) -> CMatrix {
        self.form.a_adjoint(&self.t)
    }

    /// Final projection P_T = T T#, the A-symmetric idempotent onto R(T).
    pub fn final_projection(&self) -> Result<AProjection> {
        let p = self.t.matmul(&self.sharp());
        AProjection::new(self.form.clone(), p)
    }
}

/// An invertible A-isometry; the inverse coincides with the A-adjoint.
#[derive(Debug, Clone)]
pub struct AUnitary {
    iso: AIsometry,
    inverse: CMatrix,
}

impl AUnitary {
    pub fn new(form: Arc<AForm>, g: CMatrix) -> Result<Self> {
        let iso = AIsometry::new(form, g)?;
        let inverse = invert(&iso.t).map_err(|_| Error::Singular {
            context: "A-unitary must be invertible",
        })?;
        let unit = AUnitary { iso, inverse };
        let sharp = unit.iso.sharp();
        let defect = sharp.max_abs_diff(&unit.inverse);
        if defect > 1e-9 * svd_norm(&unit.inverse).max(1.0) {
            return Err(Error::InvalidInput(format!(
                "inverse and A-adjoint disagree: {defect:.3e}"
            )));
        }
        Ok(unit)
    }

    /// Pull a unitary of the L model back to an A-unitary; the inverse comes
    /// from the adjoint on the L side, so no linear solve is needed.
    pub fn from_l_model(form: &Arc<AForm>, u: &CMatrix) -> Result<Self> {
        let g = form.from_l_model(u);
        let inverse = form.from_l_model(&u.adjoint());
        let iso = AIsometry::new(form.clone(), g)?;
        Ok(AUnitary { iso, inverse })
    }

    pub fn form(&self) -> &Arc<AForm> {
        self.iso.form()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.iso.matrix()
    }

    pub fn inverse(&self) -> &CMatrix {
        &self.inverse
    }

    pub fn as_isometry(&self) -> &AIsometry {
        &self.iso
    }

    pub fn l_model(&self) -> CMatrix {
        self.iso.l_model()
    }
}

/// Unitary moving one orthogonal projection onto a nearby one in the L model:
/// G = (P P0 + (1-P)(1-P0)) (1 - (P-P0)^2)^{-1/2}, pulled back to the H model.
/// Requires |P - P0| < 1; G depends smoothly on the pair and equals the
/// identity at P = P0.
pub fn projection_section(p0: &AProjection, p: &AProjection) -> Result<AUnitary> {
    let form = p0.form();
    if !Arc::ptr_eq(form, p.form()) && form.matrix().max_abs_diff(p.form().matrix()) != 0.0 {
        return Err(Error::InvalidInput(
            "projections must share the same weight".into(),
        ));
    }
    let p0l = p0.l_model().hermitized();
    let pl = p.l_model().hermitized();
    let diff = &pl - &p0l;
    let distance = svd_norm(&diff);
    if distance >= 1.0 - 1e-6 {
        return Err(Error::TooFar { distance });
    }
    let n = form.dim();
    let id = CMatrix::identity(n);
    let w = &pl.matmul(&p0l) + &(&id - &pl).matmul(&(&id - &p0l));
    // 1 - (P - P0)^2 is Hermitian positive definite when |P - P0| < 1.
    let d = (&id - &diff.matmul(&diff)).hermitized();
    let inv_sqrt = herm_fun(&d, |x| C64::new(1.0 / x.max(1e-300).sqrt(), 0.0))?;
    let g_l = w.matmul(&inv_sqrt);
    let unit = AUnitary::from_l_model(form, &g_l)?;
    Ok(unit)
}

/// Local cross section of G -> G T0: an A-unitary with sigma(T) T0 = T and
/// sigma(T0) = 1, built as T T0# + G (1 - P_{T0}) where G conjugates the final
/// projections.
pub fn isometry_section(t0: &AIsometry, t: &AIsometry) -> Result<AUnitary> {
    let form = t0.form();
    let p0 = t0.final_projection()?;
    let p = t.final_projection()?;
    let g = projection_section(&p0, &p)?;
    let id = CMatrix::identity(form.dim());
    let sigma = &t.matrix().matmul(&t0.sharp())
        + &g.matrix().matmul(&(&id - p0.matrix()));
    AUnitary::new(form.clone(), sigma)
}

/// Given H with H P1 H^{-1} = P2, the correction K = T2 (H T1)# + 1 - P2 is
/// A-unitary and (K H) T1 = T2.
pub fn conjugator(t1: &AIsometry, t2: &AIsometry, h: &AUnitary) -> Result<AUnitary> {
    let form = t1.form();
    let p1 = t1.final_projection()?;
    let p2 = t2.final_projection()?;
    let moved = h
        .matrix()
        .matmul(p1.matrix())
        .matmul(h.inverse());
    let residual = moved.max_abs_diff(p2.matrix());
    if residual > 1e-8 * svd_norm(p2.matrix()).max(1.0) {
        return Err(Error::ProjectionMismatch { residual });
    }
    let t1_moved = h.matrix().matmul(t1.matrix());
    let sharp_moved = form.a_adjoint(&t1_moved);
    let id = CMatrix::identity(form.dim());
    let k = &t2.matrix().matmul(&sharp_moved) + &(&id - p2.matrix());
    AUnitary::new(form.clone(), k)
}

/// Dimensions of the unitary/shift/wandering parts of an isometry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WoldSplit {
    pub unitary_dim: usize,
    pub shift_dim: usize,
    pub wandering_dim: usize,
}

/// The Wold split of a finite-dimensional A-isometry is always trivial: the
/// A-orthogonal complement of the range is the kernel of T#, which vanishes
/// because T is invertible. Verifies both facts before returning.
pub fn dense_wold(t: &AIsometry) -> Result<WoldSplit> {
    let n = t.dim();
    let tl = t.l_model();
    // Numerical invertibility: smallest singular value of the L-model form of
    // an isometry is 1 up to the isometry defect.
    let ratio = crate::numerics::sigma_ratio(&tl);
    if ratio < 0.5 {
        return Err(Error::NotIsometric {
            defect: 1.0 - ratio,
        });
    }
    // Wandering space = N(T#): empty since T# is invertible too.
    let sharp_ratio = crate::numerics::sigma_ratio(&t.sharp());
    debug_assert!(sharp_ratio > 1e-6);
    let _ = sharp_ratio;
    Ok(WoldSplit {
        unitary_dim: n,
        shift_dim: 0,
        wandering_dim: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::a_space::compatible_projector;
    use crate::numerics::mat_exp;
    use crate::sampling;
    use rand::Rng;
    use std::f64::consts::FRAC_PI_4;

    fn random_form(rng: &mut impl rand::Rng, n: usize) -> Arc<AForm> {
        AForm::new(sampling::random_hpd(rng, n, 0.4, 2.0)).unwrap()
    }

    fn random_a_unitary(rng: &mut impl rand::Rng, form: &Arc<AForm>) -> AUnitary {
        let u = sampling::random_unitary(rng, form.dim());
        AUnitary::from_l_model(form, &u).unwrap()
    }

    /// A-unitary close to the identity: exp of a small A-symmetric generator.
    fn small_a_unitary(rng: &mut impl rand::Rng, form: &Arc<AForm>, size: f64) -> AUnitary {
        let h = sampling::random_hermitian_with_norm(rng, form.dim(), size);
        let u = mat_exp(&h.scale(C64::new(0.0, 1.0)));
        AUnitary::from_l_model(form, &u).unwrap()
    }

    #[test]
    fn identity_is_isometric_with_unit_witness() {
        let form = AForm::new(CMatrix::identity(3)).unwrap();
        let check = check_isometry(&form, &CMatrix::identity(3)).unwrap();
        assert!(check.isometric);
        assert!(check.defect < 1e-14);
        assert!((check.lambda_witness - 1.0).abs() < 1e-6);
    }

    #[test]
    fn plain_unitary_is_isometric_for_identity_weight() {
        let mut rng = sampling::rng_for(51, 0);
        let form = AForm::new(CMatrix::identity(4)).unwrap();
        let u = sampling::random_unitary(&mut rng, 4);
        let check = check_isometry(&form, &u).unwrap();
        assert!(check.isometric);
        assert!((check.lambda_witness - 1.0).abs() < 1e-6);
    }

    #[test]
    fn truncated_dirichlet_shift_defect_sits_in_last_entry() {
        // Weight 1/(n+1) on indices 1..=N; the L-model shift is the subdiagonal
        // of ones with a zeroed last column. Its H-model pullback satisfies
        // T*AT - A = A^{1/2} (S*S - 1) A^{1/2}, which vanishes on the interior
        // and equals -A_NN at the truncated corner.
        let n = 10;
        let weights: Vec<f64> = (1..=n).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        let a = CMatrix::diag_real(&weights);
        let form = AForm::new(a).unwrap();
        let mut shift_l = CMatrix::zeros(n, n);
        for k in 0..n - 1 {
            shift_l[(k + 1, k)] = C64::new(1.0, 0.0);
        }
        let t = form.from_l_model(&shift_l);
        let defect_matrix = &t.adjoint().matmul(form.matrix()).matmul(&t) - form.matrix();
        // Interior block is exactly isometric.
        let interior = defect_matrix.submatrix(0..n - 1, 0..n - 1);
        assert!(interior.norm_max() < 1e-12);
        // The truncation artifact: A_NN in the corner.
        let corner = defect_matrix[(n - 1, n - 1)];
        assert!((corner.re + weights[n - 1]).abs() < 1e-12);
        let check = check_isometry(&form, &t).unwrap();
        assert!(!check.isometric);
        assert!((check.defect - weights[n - 1] / form.norm_a()).abs() < 1e-9);
    }

    #[test]
    fn a_unitary_group_closure() {
        let mut rng = sampling::rng_for(52, 0);
        let form = random_form(&mut rng, 5);
        let a = form.matrix();
        for _ in 0..20 {
            let g = random_a_unitary(&mut rng, &form);
            let h = random_a_unitary(&mut rng, &form);
            let prod = g.matrix().matmul(h.matrix());
            let back = prod.adjoint().matmul(a).matmul(&prod);
            assert!(back.max_abs_diff(a) < 1e-9);
            let inv = g.inverse();
            let back = inv.adjoint().matmul(a).matmul(inv);
            assert!(back.max_abs_diff(a) < 1e-9);
            let sharp = form.a_adjoint(g.matrix());
            let back = sharp.adjoint().matmul(a).matmul(&sharp);
            assert!(back.max_abs_diff(a) < 1e-9);
        }
    }

    #[test]
    fn final_projection_of_a_unitary_is_identity() {
        let mut rng = sampling::rng_for(53, 0);
        let form = random_form(&mut rng, 4);
        let g = random_a_unitary(&mut rng, &form);
        let p = g.as_isometry().final_projection().unwrap();
        assert!(p.matrix().max_abs_diff(&CMatrix::identity(4)) < 1e-9);
    }

    #[test]
    fn final_projection_is_equivariant() {
        let mut rng = sampling::rng_for(54, 0);
        let form = random_form(&mut rng, 4);
        for _ in 0..10 {
            let t = random_a_unitary(&mut rng, &form);
            let g = random_a_unitary(&mut rng, &form);
            let gt = AIsometry::new(form.clone(), g.matrix().matmul(t.matrix())).unwrap();
            let lhs = gt.final_projection().unwrap();
            let rhs = g
                .matrix()
                .matmul(t.as_isometry().final_projection().unwrap().matrix())
                .matmul(g.inverse());
            assert!(lhs.matrix().max_abs_diff(&rhs) < 1e-8);
        }
    }

    #[test]
    fn projection_section_identity_pair() {
        let mut rng = sampling::rng_for(55, 0);
        let form = random_form(&mut rng, 4);
        let f = sampling::random_frame(&mut rng, 4, 2);
        let p = compatible_projector(&form, &f).unwrap();
        let g = projection_section(&p, &p).unwrap();
        assert!(g.matrix().max_abs_diff(&CMatrix::identity(4)) < 1e-10);
    }

    #[test]
    fn projection_section_reproduces_plane_rotation() {
        // For A = 1, P0 = diag(1, 0) and P the rotation of P0 by theta < pi/2,
        // the section is exactly the rotation by theta.
        let form = AForm::new(CMatrix::identity(2)).unwrap();
        let theta = FRAC_PI_4;
        let (c, s) = (theta.cos(), theta.sin());
        let rot = CMatrix::from_real_rows(&[vec![c, -s], vec![s, c]]);
        let p0m = CMatrix::diag_real(&[1.0, 0.0]);
        let pm = rot.matmul(&p0m).matmul(&rot.adjoint());
        let p0 = AProjection::new(form.clone(), p0m).unwrap();
        let p = AProjection::new(form.clone(), pm).unwrap();
        let g = projection_section(&p0, &p).unwrap();
        assert!(g.matrix().max_abs_diff(&rot) < 1e-10);
    }

    #[test]
    fn projection_section_conjugates_random_nearby_pairs() {
        let mut rng = sampling::rng_for(56, 0);
        for _ in 0..20 {
            let n = rng.random_range(3..=6);
            let k = rng.random_range(1..n);
            let form = random_form(&mut rng, n);
            let f0 = sampling::random_frame(&mut rng, n, k);
            let p0 = compatible_projector(&form, &f0).unwrap();
            // Perturb the frame slightly so the projections stay close.
            let bump = sampling::random_matrix(&mut rng, n, k, 0.05);
            let p1 = compatible_projector(&form, &(&f0 + &bump)).unwrap();
            let g = projection_section(&p0, &p1).unwrap();
            let moved = g.matrix().matmul(p0.matrix()).matmul(g.inverse());
            assert!(moved.max_abs_diff(p1.matrix()) < 1e-8);
            let a = form.matrix();
            let back = g.matrix().adjoint().matmul(a).matmul(g.matrix());
            assert!(back.max_abs_diff(a) < 1e-8);
        }
    }

    #[test]
    fn projection_section_refuses_orthogonal_ranges() {
        let form = AForm::new(CMatrix::identity(2)).unwrap();
        let p0 = AProjection::new(form.clone(), CMatrix::diag_real(&[1.0, 0.0])).unwrap();
        let p1 = AProjection::new(form.clone(), CMatrix::diag_real(&[0.0, 1.0])).unwrap();
        assert!(matches!(
            projection_section(&p0, &p1),
            Err(Error::TooFar { .. })
        ));
    }

    #[test]
    fn isometry_section_fixes_base_point() {
        let mut rng = sampling::rng_for(57, 0);
        let form = random_form(&mut rng, 4);
        let t0 = random_a_unitary(&mut rng, &form);
        let sigma = isometry_section(t0.as_isometry(), t0.as_isometry()).unwrap();
        assert!(sigma.matrix().max_abs_diff(&CMatrix::identity(4)) < 1e-9);
    }

    #[test]
    fn isometry_section_reconstructs_nearby_targets() {
        let mut rng = sampling::rng_for(58, 0);
        for _ in 0..15 {
            let n = rng.random_range(3..=6);
            let form = random_form(&mut rng, n);
            let t0 = random_a_unitary(&mut rng, &form);
            let g = small_a_unitary(&mut rng, &form, 0.2);
            let t = AIsometry::new(form.clone(), g.matrix().matmul(t0.matrix())).unwrap();
            let sigma = isometry_section(t0.as_isometry(), &t).unwrap();
            let rebuilt = sigma.matrix().matmul(t0.matrix());
            assert!(rebuilt.max_abs_diff(t.matrix()) < 1e-8);
            let a = form.matrix();
            let back = sigma.matrix().adjoint().matmul(a).matmul(sigma.matrix());
            assert!(back.max_abs_diff(a) < 1e-8);
        }
    }

    #[test]
    fn isometry_section_reduces_to_composition_for_unitaries() {
        // With full range, 1 - P_{T0} = 0 and the section is T T0#.
        let mut rng = sampling::rng_for(59, 0);
        let form = random_form(&mut rng, 4);
        let t0 = random_a_unitary(&mut rng, &form);
        let g = small_a_unitary(&mut rng, &form, 0.3);
        let t = AIsometry::new(form.clone(), g.matrix().matmul(t0.matrix())).unwrap();
        let sigma = isometry_section(t0.as_isometry(), &t).unwrap();
        let direct = t.matrix().matmul(&t0.as_isometry().sharp());
        assert!(sigma.matrix().max_abs_diff(&direct) < 1e-8);
    }

    #[test]
    fn conjugator_trivial_case() {
        let mut rng = sampling::rng_for(60, 0);
        let form = random_form(&mut rng, 4);
        let t = random_a_unitary(&mut rng, &form);
        let ident = AUnitary::new(form.clone(), CMatrix::identity(4)).unwrap();
        let k = conjugator(t.as_isometry(), t.as_isometry(), &ident).unwrap();
        assert!(k.matrix().max_abs_diff(&CMatrix::identity(4)) < 1e-9);
    }

    #[test]
    fn conjugator_recovers_target_from_any_projection_intertwiner() {
        let mut rng = sampling::rng_for(61, 0);
        for _ in 0..15 {
            let n = rng.random_range(3..=6);
            let form = random_form(&mut rng, n);
            let t1 = random_a_unitary(&mut rng, &form);
            let g = random_a_unitary(&mut rng, &form);
            let t2 = AIsometry::new(form.clone(), g.matrix().matmul(t1.matrix())).unwrap();
            // Final projections are full here, so any A-unitary intertwines.
            let h = random_a_unitary(&mut rng, &form);
            let k = conjugator(t1.as_isometry(), &t2, &h).unwrap();
            let rebuilt = k.matrix().matmul(h.matrix()).matmul(t1.matrix());
            assert!(rebuilt.max_abs_diff(t2.matrix()) < 1e-8);
        }
    }

    #[test]
    fn conjugation_moves_final_projections_forward() {
        let mut rng = sampling::rng_for(62, 0);
        let form = random_form(&mut rng, 4);
        let t1 = random_a_unitary(&mut rng, &form);
        let g = random_a_unitary(&mut rng, &form);
        let t2 = AIsometry::new(form.clone(), g.matrix().matmul(t1.matrix())).unwrap();
        let p1 = t1.as_isometry().final_projection().unwrap();
        let p2 = t2.final_projection().unwrap();
        let moved = g.matrix().matmul(p1.matrix()).matmul(g.inverse());
        assert!(moved.max_abs_diff(p2.matrix()) < 1e-8);
    }

    #[test]
    fn classical_intertwiner_for_euclidean_unitaries() {
        let mut rng = sampling::rng_for(63, 0);
        let form = AForm::new(CMatrix::identity(4)).unwrap();
        let t1 = AUnitary::from_l_model(&form, &sampling::random_unitary(&mut rng, 4)).unwrap();
        let t2 = AUnitary::from_l_model(&form, &sampling::random_unitary(&mut rng, 4)).unwrap();
        let h = AUnitary::from_l_model(&form, &sampling::random_unitary(&mut rng, 4)).unwrap();
        let k = conjugator(t1.as_isometry(), t2.as_isometry(), &h).unwrap();
        // K H is a unitary carrying T1 to T2.
        let kh = k.matrix().matmul(h.matrix());
        assert!(kh.adjoint().matmul(&kh).max_abs_diff(&CMatrix::identity(4)) < 1e-9);
        assert!(kh.matmul(t1.matrix()).max_abs_diff(t2.matrix()) < 1e-8);
    }

    #[test]
    fn dense_wold_is_trivial_for_a_unitaries() {
        let mut rng = sampling::rng_for(64, 0);
        for _ in 0..10 {
            let n = rng.random_range(2..=7);
            let form = random_form(&mut rng, n);
            let g = random_a_unitary(&mut rng, &form);
            let split = dense_wold(g.as_isometry()).unwrap();
            assert_eq!(
                split,
                WoldSplit {
                    unitary_dim: n,
                    shift_dim: 0,
                    wandering_dim: 0
                }
            );
        }
    }

    #[test]
    fn euclidean_unitary_wold_split() {
        let mut rng = sampling::rng_for(65, 0);
        let form = AForm::new(CMatrix::identity(5)).unwrap();
        let u = sampling::random_unitary(&mut rng, 5);
        let iso = AIsometry::new(form, u).unwrap();
        let split = dense_wold(&iso).unwrap();
        assert_eq!(split.unitary_dim, 5);
        assert_eq!(split.wandering_dim, 0);
    }
}
