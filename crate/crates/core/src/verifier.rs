//! Optimality checks in the original variables.
//!
//! A point `x` with multiplier `mu` is certified as a strict local-nonglobal
//! minimizer when it is a regular KKT point, the Lagrangian Hessian
//! `A0 + mu*A1` is positive definite on the tangent hyperplane of the
//! constraint, and the same Hessian is not positive semidefinite on the
//! whole space. Equality problems additionally need `A1 != 0`, inequality
//! problems need `mu > 0`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{sorted_eigen, ConstraintKind, ProblemInstance};
use crate::secular::SpectralData;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub feasibility: f64,
    pub stationarity: f64,
    /// Relative to `||A0 + mu*A1||_F`.
    pub curvature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-6,
            stationarity: 1e-6,
            curvature: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Inertia {
    pub neg: usize,
    pub zero: usize,
    pub pos: usize,
}

impl Inertia {
    pub fn as_tuple(self) -> (usize, usize, usize) {
        (self.neg, self.zero, self.pos)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationVerdict {
    pub kkt_ok: bool,
    pub regular_ok: bool,
    pub tangent_pd_ok: bool,
    pub not_psd_ok: bool,
    pub inertia_ok: bool,
    /// Only for equality constraints.
    pub a1_nonzero_ok: Option<bool>,
    /// Only for inequality constraints.
    pub mu_positive_ok: Option<bool>,
    /// A tangent direction of non-positive curvature.
    pub witness: Option<Vec<f64>>,
    /// Smallest eigenvalue of the projected Hessian (`+inf` when `n = 1`).
    pub min_tangent_eigenvalue: f64,
    pub min_hessian_eigenvalue: f64,
    pub constraint_residual: f64,
    pub stationarity_residual: f64,
    pub feasibility_tol: f64,
    pub stationarity_tol: f64,
    pub inertia: Inertia,
    pub reasons: Vec<String>,
}

impl VerificationVerdict {
    pub fn certified(&self) -> bool {
        self.kkt_ok
            && self.regular_ok
            && self.tangent_pd_ok
            && self.not_psd_ok
            && self.inertia_ok
            && self.a1_nonzero_ok.unwrap_or(true)
            && self.mu_positive_ok.unwrap_or(true)
    }
}

pub fn feasibility_tol(inst: &ProblemInstance, x: &DVector<f64>, rel: f64) -> f64 {
    let xn = x.norm();
    rel * (1.0 + inst.c1().abs() + inst.b1().norm() * xn + inst.a1().norm() * xn * xn)
}

pub fn stationarity_tol(inst: &ProblemInstance, x: &DVector<f64>, mu: f64, rel: f64) -> f64 {
    let xn = x.norm();
    let m = mu.abs();
    rel * (1.0 + inst.b0().norm() + m * inst.b1().norm() + (inst.a0().norm() + m * inst.a1().norm()) * xn)
}

/// Eigenvalue sign counts of `A0 + mu*A1` with a zero band of
/// `tol * ||A0 + mu*A1||_F`.
pub fn lagrangian_inertia(inst: &ProblemInstance, mu: f64, tol: f64) -> Inertia {
    let h = inst.lagrangian_hessian(mu);
    let band = tol * h.norm();
    inertia_from(h.symmetric_eigenvalues().iter().copied(), band)
}

fn inertia_from(ev: impl Iterator<Item = f64>, band: f64) -> Inertia {
    let mut out = Inertia {
        neg: 0,
        zero: 0,
        pos: 0,
    };
    for v in ev {
        if v.abs() <= band {
            out.zero += 1;
        } else if v < 0.0 {
            out.neg += 1;
        } else {
            out.pos += 1;
        }
    }
    out
}

/// Orthonormal basis (as columns) of the hyperplane orthogonal to `g`,
/// taken from a Householder reflector that maps `g` onto a multiple of `e1`.
pub fn tangent_basis(g: &DVector<f64>) -> DMatrix<f64> {
    let n = g.len();
    let unit = g / g.norm();
    let mut v = unit.clone();
    v[0] += if unit[0] >= 0.0 { 1.0 } else { -1.0 };
    let vv = v.norm_squared();
    let h = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
    h.columns(1, n - 1).into_owned()
}

pub fn check_strict_lngm(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    mu: f64,
    tol: &Tolerances,
) -> Result<VerificationVerdict> {
    let n = inst.n();
    if x.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "point has length {}, expected {n}",
            x.len()
        )));
    }
    if !x.iter().all(|v| v.is_finite()) || !mu.is_finite() {
        return Err(Error::NonFinite("point or multiplier"));
    }
    let mut reasons = Vec::new();

    let constraint_residual = inst.f1(x).abs();
    let feas_tol = feasibility_tol(inst, x, tol.feasibility);
    let g0 = inst.grad_f0(x);
    let g1 = inst.grad_f1(x);
    let stationarity_residual = (&g0 + &g1 * mu).norm();
    let stat_tol = stationarity_tol(inst, x, mu, tol.stationarity);
    let kkt_ok = constraint_residual <= feas_tol && stationarity_residual <= stat_tol;
    if constraint_residual > feas_tol {
        reasons.push(format!(
            "constraint residual {constraint_residual:e} exceeds {feas_tol:e}"
        ));
    }
    if stationarity_residual > stat_tol {
        reasons.push(format!(
            "stationarity residual {stationarity_residual:e} exceeds {stat_tol:e}"
        ));
    }

    let g_scale = 2.0 * (inst.a1().norm() * x.norm() + inst.b1().norm());
    let regular_ok = g1.norm() > tol.curvature * g_scale.max(1.0);
    if !regular_ok {
        reasons.push("not a regular point: constraint gradient vanishes".into());
    }

    let h = inst.lagrangian_hessian(mu);
    let h_norm = h.norm();
    let curv_tol = tol.curvature * h_norm;
    let hess_vals = h.clone().symmetric_eigenvalues();
    let min_hessian_eigenvalue = hess_vals.min();
    let not_psd_ok = min_hessian_eigenvalue < -curv_tol;
    if !not_psd_ok {
        reasons.push("Lagrangian Hessian is positive semidefinite: global candidate".into());
    }

    let mut min_tangent_eigenvalue = f64::INFINITY;
    let mut witness = None;
    let mut tangent_pd_ok = regular_ok;
    if regular_ok && n > 1 {
        let z = tangent_basis(&g1);
        let proj = z.transpose() * &h * &z;
        min_tangent_eigenvalue = proj.clone().symmetric_eigenvalues().min();
        tangent_pd_ok = min_tangent_eigenvalue > curv_tol;
        if !tangent_pd_ok {
            let (_, vecs) = sorted_eigen(&proj)?;
            let w = &z * vecs.column(0);
            witness = Some(w.iter().copied().collect());
            reasons.push(format!(
                "projected Hessian has eigenvalue {min_tangent_eigenvalue:e} <= {curv_tol:e}"
            ));
        }
    }

    let inertia = inertia_from(hess_vals.iter().copied(), curv_tol);
    let inertia_ok = inertia.as_tuple() == (1, 0, n - 1);
    if !inertia_ok {
        reasons.push(format!("inertia {:?} is not (1, 0, {})", inertia.as_tuple(), n - 1));
    }

    let (a1_nonzero_ok, mu_positive_ok) = match inst.kind() {
        ConstraintKind::Equality => {
            let ok = inst.a1().amax() > 0.0;
            if !ok {
                reasons.push("A1 is zero".into());
            }
            (Some(ok), None)
        }
        ConstraintKind::Inequality => {
            let ok = mu > 0.0;
            if !ok {
                reasons.push(format!("multiplier {mu} is not positive"));
            }
            (None, Some(ok))
        }
    };

    Ok(VerificationVerdict {
        kkt_ok,
        regular_ok,
        tangent_pd_ok,
        not_psd_ok,
        inertia_ok,
        a1_nonzero_ok,
        mu_positive_ok,
        witness,
        min_tangent_eigenvalue,
        min_hessian_eigenvalue,
        constraint_residual,
        stationarity_residual,
        feasibility_tol: feas_tol,
        stationarity_tol: stat_tol,
        inertia,
        reasons,
    })
}

/// Global optimality test for a KKT point: `A0 + mu*A1` is positive
/// semidefinite (up to `tol`), plus dual feasibility and complementarity for
/// inequality problems.
pub fn is_global_candidate(inst: &ProblemInstance, x: &DVector<f64>, mu: f64, tol: f64) -> bool {
    let h = inst.lagrangian_hessian(mu);
    let band = tol * h.norm().max(1.0);
    let psd = h.symmetric_eigenvalues().iter().all(|&v| v >= -band);
    match inst.kind() {
        ConstraintKind::Equality => psd,
        ConstraintKind::Inequality => {
            let comp_scale = feasibility_tol(inst, x, 1.0) * mu.abs().max(1.0);
            psd && mu >= -tol && (mu * inst.f1(x)).abs() <= tol.max(1e-6) * comp_scale
        }
    }
}

/// Returns `(det B1(eta), h1(eta) * phi1(eta))`, the determinant of the
/// explicit matrix on one side and the closed form on the other.
pub fn reduced_hessian_determinant_check(spec: &SpectralData, eta: f64) -> Result<(f64, f64)> {
    let n = spec.n();
    if n < 2 {
        return Err(Error::InvalidArgument("determinant identity needs n >= 2".into()));
    }
    let phi = spec.phi1(eta)?;
    // LU rather than `determinant()`, which expands small matrices by
    // cofactors and cancels badly when B1 is nearly rank one.
    let lhs = reduced_hessian(spec, eta).lu().determinant();
    let l = &spec.lambda;
    let d1 = l[0] + eta;
    let mut h1 = spec.r[0].powi(2 * n as i32 - 4) / d1.powi(2 * n as i32 - 5);
    for j in 1..n {
        h1 *= l[j] + eta;
    }
    Ok((lhs, h1 * phi))
}

/// The matrix `B1(eta) = W'(A + eta I)W`, with the columns of `W` spanning
/// the tangent space of the secular curve, written in the eigenbasis of `A`
/// (where `A + eta I` is diagonal). Requires `n >= 2`.
pub fn reduced_hessian(spec: &SpectralData, eta: f64) -> DMatrix<f64> {
    let n = spec.n();
    let l = &spec.lambda;
    let d1 = l[0] + eta;
    let mut w = DMatrix::zeros(n, n - 1);
    for j in 1..n {
        w[(j, j - 1)] = spec.r[0] / d1;
        w[(0, j - 1)] = -spec.r[j] / (l[j] + eta);
    }
    let d = DMatrix::from_diagonal(&l.map(|v| v + eta));
    w.transpose() * d * &w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::{Sign, TransformedProblem};
    use crate::secular::spectral_decompose;

    fn example(kind: ConstraintKind) -> ProblemInstance {
        ProblemInstance::from_rows(
            2,
            &[1.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0],
            &[-4.0, 0.0, 0.0, 1.0],
            &[1.0, 8.0],
            45.0,
            kind,
        )
        .unwrap()
    }

    fn problem_2_12() -> ProblemInstance {
        // f0 = 2x1x2 - 2x2x3 + x3^2 - 2x1, f1 = 2x2x3 + 2x1
        ProblemInstance::from_rows(
            3,
            &[0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, -1.0, 1.0],
            &[-1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            &[1.0, 0.0, 0.0],
            0.0,
            ConstraintKind::Equality,
        )
        .unwrap()
    }

    #[test]
    fn example_lngm_is_certified() {
        let inst = example(ConstraintKind::Equality);
        let eta = 3.601_827_978_6;
        let y = DVector::from_vec(vec![-1.0 / (eta - 4.0), -8.0 / (eta + 1.0)]);
        let v = check_strict_lngm(&inst, &y, 1.0 / eta, &Tolerances::default()).unwrap();
        assert!(v.certified(), "{:?}", v.reasons);
        assert_eq!(v.inertia.as_tuple(), (1, 0, 1));
        assert!(v.witness.is_none());
        assert!(!is_global_candidate(&inst, &y, 1.0 / eta, 1e-9));
    }

    #[test]
    fn counterexample_gives_witness() {
        let inst = problem_2_12();
        let x = DVector::zeros(3);
        let v = check_strict_lngm(&inst, &x, 1.0, &Tolerances::default()).unwrap();
        assert!(v.kkt_ok && v.regular_ok);
        assert!(!v.tangent_pd_ok);
        assert!(!v.certified());
        let w = DVector::from_vec(v.witness.unwrap());
        assert!((w[1].abs() - 1.0).abs() < 1e-9 && w[0].abs() < 1e-9 && w[2].abs() < 1e-9);
        assert_eq!(lagrangian_inertia(&inst, 1.0, 1e-9).as_tuple(), (1, 0, 2));
    }

    #[test]
    fn sphere_point_is_global() {
        let inst = ProblemInstance::from_rows(
            2,
            &[1.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0],
            &[1.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0],
            -1.0,
            ConstraintKind::Equality,
        )
        .unwrap();
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let v = check_strict_lngm(&inst, &x, -1.0, &Tolerances::default()).unwrap();
        assert!(v.kkt_ok);
        assert!(!v.not_psd_ok);
        assert!(!v.certified());
        assert!(is_global_candidate(&inst, &x, -1.0, 1e-9));
    }

    #[test]
    fn inertia_examples() {
        let inst = example(ConstraintKind::Equality);
        assert_eq!(lagrangian_inertia(&inst, 0.2776, 1e-9).as_tuple(), (1, 0, 1));
        assert_eq!(lagrangian_inertia(&inst, 0.0, 1e-9).as_tuple(), (0, 0, 2));
        assert_eq!(lagrangian_inertia(&inst, 0.25, 1e-9).as_tuple(), (0, 1, 1));
    }

    #[test]
    fn infeasible_point_fails_kkt() {
        let inst = example(ConstraintKind::Equality);
        let v = check_strict_lngm(&inst, &DVector::zeros(2), 0.3, &Tolerances::default()).unwrap();
        assert!(!v.kkt_ok);
        assert!(!v.certified());
    }

    #[test]
    fn inequality_needs_positive_multiplier() {
        let inst = example(ConstraintKind::Inequality);
        let eta = 0.351_193_1;
        // Reflected root: y2(eta) = -(A - eta I)^{-1} b, multiplier -1/eta < 0.
        let y = DVector::from_vec(vec![-1.0 / (-4.0 - eta), -8.0 / (1.0 - eta)]);
        let v = check_strict_lngm(&inst, &y, -1.0 / eta, &Tolerances::default()).unwrap();
        assert_eq!(v.mu_positive_ok, Some(false));
        assert!(!v.certified());
    }

    #[test]
    fn global_candidate_with_zero_multiplier() {
        let inst = ProblemInstance::from_rows(
            2,
            &[1.0, 0.0, 0.0, 2.0],
            &[0.0, 0.0],
            &[1.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0],
            -4.0,
            ConstraintKind::Inequality,
        )
        .unwrap();
        assert!(is_global_candidate(&inst, &DVector::zeros(2), 0.0, 1e-9));
    }

    #[test]
    fn determinant_identity_on_example() {
        let spec = spectral_decompose(&TransformedProblem {
            a: DMatrix::from_diagonal(&DVector::from_vec(vec![-4.0, 1.0])),
            b: DVector::from_vec(vec![1.0, 8.0]),
            c: 45.0,
            sgn: Sign::Plus,
        })
        .unwrap();
        let (lhs, rhs) = reduced_hessian_determinant_check(&spec, 2.0).unwrap();
        assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs(), "{lhs} vs {rhs}");
        assert!((lhs + 13.472_222_222).abs() < 1e-6);
    }

    #[test]
    fn tangent_basis_is_orthonormal_complement() {
        let g = DVector::from_vec(vec![-0.3, 2.0, 1.0, -4.0]);
        let z = tangent_basis(&g);
        assert_eq!(z.shape(), (4, 3));
        assert!((z.transpose() * &z - DMatrix::identity(3, 3)).amax() < 1e-14);
        assert!((z.transpose() * &g).amax() < 1e-14);
    }
}
