//! Spectral preprocessing of the normalized constraint and the secular
//! functions.
//!
//! With `A = V diag(lambda) V'` (ascending) and `r = V'b`,
//!
//! ```text
//! y1(eta)   = -(A + eta I)^{-1} b = -sum r_i/(lambda_i + eta) v_i
//! psi1(eta) = g(y1(eta)) = sum lambda_i r_i^2/(lambda_i+eta)^2 - 2 sum r_i^2/(lambda_i+eta) + c
//! psi1'(eta) = 2 eta phi1(eta),   phi1(eta) = sum r_i^2/(lambda_i+eta)^3
//! ```
//!
//! The other three branches are reflections of the same kernel:
//! `psi2(eta) = -psi1(-eta)`, `psi3(eta) = psi1(-eta)`, `psi4(eta) = -psi1(eta)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pencil::TransformedProblem;
use crate::problem::sorted_eigen;

/// Relative distance to a pole below which evaluation is refused.
pub const POLE_TOL: f64 = 1e-13;
/// Relative gap below which two eigenvalues are treated as equal.
pub const TIE_TOL: f64 = 1e-10;
/// Relative size below which an edge projection counts as zero.
pub const EDGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Psi1,
    Psi2,
    Psi3,
    Psi4,
}

impl Branch {
    pub const ALL: [Branch; 4] = [Branch::Psi1, Branch::Psi2, Branch::Psi3, Branch::Psi4];

    /// Whether the branch evaluates the kernel at `-eta`.
    fn reflected(self) -> bool {
        matches!(self, Branch::Psi2 | Branch::Psi3)
    }

    /// Whether the branch negates the kernel value.
    fn negated(self) -> bool {
        matches!(self, Branch::Psi2 | Branch::Psi4)
    }

    /// Sign `s` of the `y`-space multiplier `mu = s/eta`.
    pub fn multiplier_sign(self) -> f64 {
        match self {
            Branch::Psi1 | Branch::Psi3 => 1.0,
            Branch::Psi2 | Branch::Psi4 => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Psi1 => "psi1",
            Branch::Psi2 => "psi2",
            Branch::Psi3 => "psi3",
            Branch::Psi4 => "psi4",
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// Ascending eigenvalues of `A`.
    pub lambda: DVector<f64>,
    /// Orthonormal eigenvectors, column `i` belongs to `lambda[i]`.
    pub v: DMatrix<f64>,
    /// `r = V'b`.
    pub r: DVector<f64>,
    pub c: f64,
    b_norm: f64,
}

pub fn spectral_decompose(t: &TransformedProblem) -> Result<SpectralData> {
    let (lambda, v) = sorted_eigen(&t.a)?;
    let r = v.transpose() * &t.b;
    Ok(SpectralData {
        lambda,
        v,
        r,
        c: t.c,
        b_norm: t.b.norm(),
    })
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn b_norm(&self) -> f64 {
        self.b_norm
    }

    /// `V diag(lambda) V'`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.v * DMatrix::from_diagonal(&self.lambda) * self.v.transpose()
    }

    pub fn edge_tol(&self) -> f64 {
        EDGE_TOL * self.b_norm.max(1.0)
    }

    pub fn tie_tol(&self) -> f64 {
        let n = self.n();
        TIE_TOL * 1f64.max(self.lambda[0].abs()).max(self.lambda[n - 1].abs())
    }

    /// `lambda_i + eta` for every `i`, refusing points too close to a pole.
    fn shifted(&self, eta: f64) -> Result<Vec<f64>> {
        let mut d = Vec::with_capacity(self.n());
        for &l in self.lambda.iter() {
            let di = l + eta;
            if di.abs() < POLE_TOL * l.abs().max(1.0) {
                return Err(Error::PoleProximity {
                    eta,
                    pole: -l,
                    distance: di.abs(),
                });
            }
            d.push(di);
        }
        Ok(d)
    }

    /// Indices ordered so the largest-`|d|` (smallest) terms are summed first
    /// and the dominant pole term last.
    fn summation_order(d: &[f64]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..d.len()).collect();
        idx.sort_by(|&i, &j| d[j].abs().total_cmp(&d[i].abs()));
        idx
    }

    /// `psi1(eta)` together with the sum of absolute term magnitudes, which
    /// bounds the rounding noise of the value.
    pub fn psi1_with_scale(&self, eta: f64) -> Result<(f64, f64)> {
        let d = self.shifted(eta)?;
        let (mut sum, mut mag) = (0.0, self.c.abs());
        for i in Self::summation_order(&d) {
            let r2 = self.r[i] * self.r[i];
            let quad = self.lambda[i] * r2 / (d[i] * d[i]);
            let lin = 2.0 * r2 / d[i];
            sum += quad - lin;
            mag += quad.abs() + lin.abs();
        }
        Ok((sum + self.c, mag))
    }

    pub fn psi1(&self, eta: f64) -> Result<f64> {
        Ok(self.psi1_with_scale(eta)?.0)
    }

    pub fn phi1(&self, eta: f64) -> Result<f64> {
        Ok(self.phi1_with_scale(eta)?.0)
    }

    fn phi1_with_scale(&self, eta: f64) -> Result<(f64, f64)> {
        let d = self.shifted(eta)?;
        let (mut sum, mut mag) = (0.0, 0.0);
        for i in Self::summation_order(&d) {
            let t = self.r[i] * self.r[i] / (d[i] * d[i] * d[i]);
            sum += t;
            mag += t.abs();
        }
        Ok((sum, mag))
    }

    /// `psi1'(eta) = 2 eta phi1(eta)` and its magnitude bound.
    pub fn psi1_prime_with_scale(&self, eta: f64) -> Result<(f64, f64)> {
        let (phi, mag) = self.phi1_with_scale(eta)?;
        Ok((2.0 * eta * phi, 2.0 * eta.abs() * mag))
    }

    pub fn psi1_prime(&self, eta: f64) -> Result<f64> {
        Ok(self.psi1_prime_with_scale(eta)?.0)
    }

    /// `y1(eta) = -sum r_i/(lambda_i + eta) v_i`.
    pub fn y1(&self, eta: f64) -> Result<DVector<f64>> {
        let d = self.shifted(eta)?;
        let coeff = DVector::from_iterator(self.n(), (0..self.n()).map(|i| -self.r[i] / d[i]));
        Ok(&self.v * coeff)
    }
}

/// One secular branch restricted to the interval where its roots can carry
/// a local-nonglobal minimizer.
#[derive(Debug, Clone, Copy)]
pub struct BranchContext<'a> {
    pub branch: Branch,
    pub u1: f64,
    pub u2: f64,
    /// `r_1` for psi1/psi3, `r_n` for psi2/psi4.
    pub edge_r: f64,
    /// `lambda_1` for psi3, `lambda_n` for psi4; informational for psi1/psi2.
    pub guard_lambda: f64,
    /// The eigenvalue pair bounding the interval is numerically tied.
    pub tied: bool,
    pub spec: &'a SpectralData,
}

pub fn branch_interval(spec: &SpectralData, branch: Branch) -> BranchContext<'_> {
    let n = spec.n();
    let l = &spec.lambda;
    let first = l[0];
    let second = if n >= 2 { l[1] } else { f64::INFINITY };
    let last = l[n - 1];
    let penultimate = if n >= 2 { l[n - 2] } else { f64::NEG_INFINITY };
    let tie = spec.tie_tol();
    let low_tie = n >= 2 && second - first <= tie;
    let high_tie = n >= 2 && last - penultimate <= tie;
    let (u1, u2, edge_r, guard_lambda, tied) = match branch {
        Branch::Psi1 => ((-second).max(0.0), -first, spec.r[0], first, low_tie),
        Branch::Psi2 => (penultimate.max(0.0), last, spec.r[n - 1], last, high_tie),
        Branch::Psi3 => (first.max(0.0), second, spec.r[0], first, low_tie),
        Branch::Psi4 => ((-last).max(0.0), -penultimate, spec.r[n - 1], last, high_tie),
    };
    BranchContext {
        branch,
        u1,
        u2,
        edge_r,
        guard_lambda,
        tied,
        spec,
    }
}

impl BranchContext<'_> {
    /// True when the interval starts at `eta = 0` rather than at a pole
    /// (`lambda_1 < 0` for psi3, `lambda_n > 0` for psi4), so that
    /// positivity at the left end has to be checked.
    pub fn starts_at_zero(&self) -> bool {
        match self.branch {
            Branch::Psi3 => self.guard_lambda < 0.0,
            Branch::Psi4 => self.guard_lambda > 0.0,
            Branch::Psi1 | Branch::Psi2 => self.u1 == 0.0,
        }
    }

    /// Nonempty finite interval, untied eigenvalues and a nonzero edge
    /// projection.
    pub fn is_viable(&self) -> bool {
        self.u1 < self.u2 && self.u2.is_finite() && !self.tied && self.edge_r.abs() > self.spec.edge_tol()
    }

    fn kernel_point(&self, eta: f64) -> f64 {
        if self.branch.reflected() {
            -eta
        } else {
            eta
        }
    }

    fn value_sign(&self) -> f64 {
        if self.branch.negated() {
            -1.0
        } else {
            1.0
        }
    }

    fn slope_sign(&self) -> f64 {
        let reflect = if self.branch.reflected() { -1.0 } else { 1.0 };
        self.value_sign() * reflect
    }

    pub fn psi_with_scale(&self, eta: f64) -> Result<(f64, f64)> {
        let (v, m) = self.spec.psi1_with_scale(self.kernel_point(eta))?;
        Ok((self.value_sign() * v, m))
    }

    pub fn psi_prime_with_scale(&self, eta: f64) -> Result<(f64, f64)> {
        let (v, m) = self.spec.psi1_prime_with_scale(self.kernel_point(eta))?;
        Ok((self.slope_sign() * v, m))
    }

    /// The candidate point for a root `eta` of this branch.
    pub fn y_of_eta(&self, eta: f64) -> Result<DVector<f64>> {
        self.spec.y1(self.kernel_point(eta))
    }

    /// `y`-space multiplier `+-1/eta`.
    pub fn multiplier(&self, eta: f64) -> f64 {
        self.branch.multiplier_sign() / eta
    }
}

pub fn psi_eval(ctx: &BranchContext<'_>, eta: f64) -> Result<f64> {
    Ok(ctx.psi_with_scale(eta)?.0)
}

pub fn psi_prime_eval(ctx: &BranchContext<'_>, eta: f64) -> Result<f64> {
    Ok(ctx.psi_prime_with_scale(eta)?.0)
}

pub fn y_of_eta(ctx: &BranchContext<'_>, eta: f64) -> Result<DVector<f64>> {
    ctx.y_of_eta(eta)
}
