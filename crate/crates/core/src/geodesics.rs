//! Tangent vectors at an A-isometry, the curves t -> exp(itZ) T that realize
//! minimal length for the sup-norm Finsler metric of the L model, arc length
//! by adaptive midpoint quadrature, and a competitor-race harness that pits
//! the candidate curve against random smooth isometry paths with the same
//! endpoints.

use crate::error::{Error, Result};
use crate::isometry::AIsometry;
use crate::krein::{self, KreinInstance, KreinMethod};
use crate::numerics::{C64, CMatrix, HermEig, herm_eig, mat_exp_frechet, svd_norm};
use crate::sampling;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerance for the tangency test.
pub const TANGENT_TOL: f64 = 1e-8;
/// Quadrature refinement stops when successive estimates differ by less.
pub const LENGTH_TOL: f64 = 1e-6;

/// A velocity vector V at a base isometry T, together with its Hermitian lift:
/// in the L model V = i X T for Hermitian X, and the stored lift is the
/// canonical one X = Y + Y* - P Y P with Y = -i V T*, which adds nothing
/// outside the constrained block. The norm is |X P| = |V| in the L model.
#[derive(Debug, Clone)]
pub struct TangentVector {
    base: AIsometry,
    v: CMatrix,
    x_l: CMatrix,
    norm: f64,
}

impl TangentVector {
    pub fn base(&self) -> &AIsometry {
        &self.base
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.v
    }

    /// Hermitian lift in the L model.
    pub fn lift(&self) -> &CMatrix {
        &self.x_l
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }
}

/// Validate tangency of `v` at `t` and build the canonical Hermitian lift.
///
/// Tangency in the L model: Y = -i V T* must satisfy Y = Y P and P Y P = (P Y P)*,
/// where P = T T* is the final projection. Both conditions together are
/// equivalent to V = i X T for some Hermitian X.
pub fn make_tangent(t: &AIsometry, v: &CMatrix) -> Result<TangentVector> {
    let form = t.form();
    if v.rows() != form.dim() || v.cols() != form.dim() {
        return Err(Error::ShapeMismatch {
            context: "velocity must match the base dimension",
            rows: v.rows(),
            cols: v.cols(),
        });
    }
    let t_l = t.l_model();
    let v_l = form.to_l_model(v);
    let p = t_l.matmul(&t_l.adjoint()).hermitized();
    let y = v_l.scale(C64::new(0.0, -1.0)).matmul(&t_l.adjoint());

    let scale = svd_norm(&v_l).max(1.0);
    let range_residual = svd_norm(&(&y - &y.matmul(&p)));
    let pyp = p.matmul(&y).matmul(&p);
    let herm_residual = pyp.hermitian_defect();
    let residual = range_residual.max(herm_residual);
    if residual > TANGENT_TOL * scale {
        return Err(Error::NotTangent { residual });
    }

    let x_l = (&(&y + &y.adjoint()) - &pyp).hermitized();
    let rebuilt = x_l.scale(C64::new(0.0, 1.0)).matmul(&t_l);
    debug_assert!(rebuilt.max_abs_diff(&v_l) <= 1e-9 * scale);
    let norm = svd_norm(&x_l.matmul(&p));
    Ok(TangentVector {
        base: t.clone(),
        v: v.clone(),
        x_l,
        norm,
    })
}

/// Curve t -> exp(itZ) T where Z extends the tangent lift past the final
/// projection without increasing the norm. Unit speed in the L model once the
/// input tangent is normalized; the normalization factor is recorded.
#[derive(Debug, Clone)]
pub struct GeodesicCurve {
    base: AIsometry,
    z_h: CMatrix,
    z_l: CMatrix,
    eig: HermEig,
    t_l: CMatrix,
    t_max: f64,
    speed_scale: f64,
    extension_method: Option<KreinMethod>,
}

impl GeodesicCurve {
    pub fn base(&self) -> &AIsometry {
        &self.base
    }

    /// Generator in H-model coordinates; A-symmetric by construction.
    pub fn generator(&self) -> &CMatrix {
        &self.z_h
    }

    /// Hermitian generator in the L model.
    pub fn generator_l(&self) -> &CMatrix {
        &self.z_l
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Factor the input tangent was divided by to reach unit speed.
    pub fn speed_scale(&self) -> f64 {
        self.speed_scale
    }

    /// None when the final projection was the identity and the lift already
    /// served as the generator.
    pub fn extension_method(&self) -> Option<KreinMethod> {
        self.extension_method
    }

    /// exp(itZ) in the L model, from the cached eigendecomposition.
    pub fn rotation_l(&self, t: f64) -> CMatrix {
        self.eig.apply(|lam| C64::new(0.0, t * lam).exp())
    }

    /// Curve point in the L model.
    pub fn point_l(&self, t: f64) -> CMatrix {
        self.rotation_l(t).matmul(&self.t_l)
    }

    /// Curve point in H-model coordinates.
    pub fn point(&self, t: f64) -> CMatrix {
        self.base.form().from_l_model(&self.point_l(t))
    }

    /// Velocity i Z exp(itZ) T in the L model.
    pub fn velocity_l(&self, t: f64) -> CMatrix {
        self.z_l
            .scale(C64::new(0.0, 1.0))
            .matmul(&self.point_l(t))
    }

    pub fn length(&self, t0: f64, t1: f64) -> Result<f64> {
        curve_length(self, t0, t1, 4)
    }
}

/// Build the minimal curve for a tangent vector. Inputs of non-unit norm are
/// normalized first (the factor is recorded in `speed_scale`). When the final
/// projection is the identity the lift itself generates the curve; otherwise
/// the generator comes from the norm-preserving Hermitian extension.
pub fn minimal_curve(v: &TangentVector) -> Result<GeodesicCurve> {
    if v.norm < 1e-12 {
        return Err(Error::InvalidInput(
            "zero tangent vector has no unit-speed curve".into(),
        ));
    }
    let form = v.base.form();
    let t_l = v.base.l_model();
    let p = t_l.matmul(&t_l.adjoint()).hermitized();
    let x_unit = v.x_l.scale_re(1.0 / v.norm);

    let id = CMatrix::identity(form.dim());
    let (z_l, method) = if p.max_abs_diff(&id) <= 1e-8 {
        (x_unit.clone(), None)
    } else {
        let inst = KreinInstance::new(x_unit.clone(), p.clone())?;
        let report = krein::extend_paper(&inst, None)?;
        (report.z.clone(), Some(report.method))
    };

    let constraint = svd_norm(&(&z_l.matmul(&p) - &x_unit.matmul(&p)));
    if constraint > krein::CONSTRAINT_TOL {
        return Err(Error::NoConvergence {
            what: "geodesic generator constraint",
            iterations: 0,
            residual: constraint,
        });
    }
    let norm_z = svd_norm(&z_l);
    if norm_z > 1.0 + krein::NORM_SLACK {
        return Err(Error::NoConvergence {
            what: "geodesic generator norm",
            iterations: 0,
            residual: norm_z - 1.0,
        });
    }

    let eig = herm_eig(&z_l)?;
    Ok(GeodesicCurve {
        base: v.base.clone(),
        z_h: form.from_l_model(&z_l),
        z_l,
        eig,
        t_l,
        t_max: PI,
        speed_scale: v.norm,
        extension_method: method,
    })
}

/// A differentiable path of operators in the L model; the quadrature only
/// needs velocities.
pub trait CurvePath: Sync {
    fn velocity(&self, t: f64) -> CMatrix;
}

impl CurvePath for GeodesicCurve {
    fn velocity(&self, t: f64) -> CMatrix {
        self.velocity_l(t)
    }
}

/// Arc length by composite midpoint quadrature with panel tripling, stopping
/// when successive estimates agree to `LENGTH_TOL`.
pub fn curve_length(path: &impl CurvePath, t0: f64, t1: f64, initial_panels: usize) -> Result<f64> {
    curve_length_with_floor(path, t0, t1, initial_panels, None)
}

/// Quadrature that may stop early once the length is certifiably above
/// `floor`: with a safety factor of ten on the observed refinement step, an
/// early return can never hide a value below the floor, while values anywhere
/// near it are refined to full tolerance. Used by the race, where most
/// competitors are far longer than the reference and only near-ties need the
/// tight answer.
fn curve_length_with_floor(
    path: &impl CurvePath,
    t0: f64,
    t1: f64,
    initial_panels: usize,
    floor: Option<f64>,
) -> Result<f64> {
    let (a, b) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
    if b - a < 1e-15 {
        return Ok(0.0);
    }
    let speed = |t: f64| svd_norm(&path.velocity(t));
    let midpoint_sum = |panels: usize| -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| speed(a + (i as f64 + 0.5) * h))
            .sum::<f64>()
            * h
    };
    let mut panels = initial_panels.max(4);
    let mut prev = midpoint_sum(panels);
    for _ in 0..10 {
        panels *= 3;
        let cur = midpoint_sum(panels);
        let step = (cur - prev).abs();
        if step < LENGTH_TOL {
            return Ok(cur);
        }
        if let Some(fl) = floor {
            if cur - 10.0 * step > fl {
                return Ok(cur);
            }
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        what: "arc-length quadrature",
        iterations: panels,
        residual: prev,
    })
}

/// Smooth isometry path s -> exp(i K(s)) T with K(s) = s K1 + s(1-s) M.
/// K(0) = 0 and K(1) = K1 exactly, so the endpoints match the reference curve
/// regardless of the Hermitian bump M. The velocity uses the block-matrix
/// exponential derivative, exact to machine precision.
pub struct ExponentialArc {
    t_l: CMatrix,
    k1: CMatrix,
    bump: CMatrix,
}

impl ExponentialArc {
    pub fn new(t_l: CMatrix, k1: CMatrix, bump: CMatrix) -> Self {
        ExponentialArc { t_l, k1, bump }
    }

    fn k(&self, s: f64) -> CMatrix {
        &self.k1.scale_re(s) + &self.bump.scale_re(s * (1.0 - s))
    }

    fn k_dot(&self, s: f64) -> CMatrix {
        &self.k1 + &self.bump.scale_re(1.0 - 2.0 * s)
    }

    pub fn point(&self, s: f64) -> CMatrix {
        crate::numerics::mat_exp(&self.k(s).scale(C64::new(0.0, 1.0))).matmul(&self.t_l)
    }
}

impl CurvePath for ExponentialArc {
    fn velocity(&self, s: f64) -> CMatrix {
        let ik = self.k(s).scale(C64::new(0.0, 1.0));
        let ikdot = self.k_dot(s).scale(C64::new(0.0, 1.0));
        let (_, deriv) = mat_exp_frechet(&ik, &ikdot);
        deriv.matmul(&self.t_l)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RaceReport {
    pub t1: f64,
    pub seed: u64,
    pub trials: usize,
    /// Quadrature length of the reference curve over [0, t1].
    pub geodesic_length: f64,
    pub competitor_lengths: Vec<f64>,
    /// Competitors measured shorter than t1 - 1e-6.
    pub violations: usize,
    pub min_competitor: f64,
    pub median_competitor: f64,
    pub max_endpoint_residual: f64,
}

/// Race the minimal curve against `trials` random exponential paths with the
/// same endpoints. Each trial draws a Hermitian bump of norm at most pi from
/// its own RNG stream, so reports are reproducible and trials run in parallel.
pub fn race(v: &TangentVector, t1: f64, trials: usize, seed: u64) -> Result<RaceReport> {
    if !(0.0..=PI + 1e-12).contains(&t1) {
        return Err(Error::InvalidInput(format!(
            "race endpoint must lie in [0, pi], got {t1}"
        )));
    }
    let curve = minimal_curve(v)?;
    let geodesic_length = curve.length(0.0, t1)?;
    let n = curve.t_l.rows();
    let k1 = curve.z_l.scale_re(t1);
    let target = curve.point_l(t1);

    let results: Vec<Result<(f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = sampling::rng_for(seed, trial as u64 + 1);
            let amplitude = PI * rand::Rng::random_range(&mut rng, 0.0..=1.0);
            // At t1 = 0 the only member of the family joining T to itself with
            // zero reference length is the constant path.
            let bump = if amplitude < 1e-12 || t1 == 0.0 {
                CMatrix::zeros(n, n)
            } else {
                sampling::random_hermitian_with_norm(&mut rng, n, amplitude)
            };
            let arc = ExponentialArc::new(curve.t_l.clone(), k1.clone(), bump);
            let endpoint_residual = arc.point(1.0).max_abs_diff(&target);
            let length = curve_length_with_floor(&arc, 0.0, 1.0, 4, Some(t1))?;
            Ok((length, endpoint_residual))
        })
        .collect();

    let mut competitor_lengths = Vec::with_capacity(trials);
    let mut max_endpoint_residual: f64 = 0.0;
    for r in results {
        let (len, res) = r?;
        competitor_lengths.push(len);
        max_endpoint_residual = max_endpoint_residual.max(res);
    }
    if max_endpoint_residual > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "competitor endpoint drifted: {max_endpoint_residual:.3e}"
        )));
    }

    let violations = competitor_lengths
        .iter()
        .filter(|&&len| len < t1 - 1e-6)
        .count();
    let mut sorted = competitor_lengths.clone();
    sorted.sort_by(f64::total_cmp);
    let min_competitor = sorted.first().copied().unwrap_or(0.0);
    let median_competitor = if sorted.is_empty() {
        0.0
    } else {
        sorted[sorted.len() / 2]
    };
    Ok(RaceReport {
        t1,
        seed,
        trials,
        geodesic_length,
        competitor_lengths,
        violations,
        min_competitor,
        median_competitor,
        max_endpoint_residual,
    })
}
