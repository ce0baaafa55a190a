//! Joint definiteness of the Hessian pair and the congruence that
//! normalizes the objective.
//!
//! `m(mu) = lambda_min(A0 + mu*A1)` is concave in `mu` (a minimum of linear
//! functions), so the pair is jointly positive definite iff the maximum of
//! `m` is positive, and jointly negative definite iff the same holds for
//! `-A0 - mu*A1`. Both maxima are located by bracketing followed by a
//! golden-section search.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{max_eigenvalue, min_eigenvalue, symmetrize, ProblemInstance};

/// Default relative definiteness tolerance.
pub const DEFAULT_DEFINITENESS_TOL: f64 = 1e-9;

/// Largest `|mu|` the bracket search will try.
pub const BRACKET_CAP: f64 = 1e8;

const GOLDEN_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Definiteness {
    JointlyPositive,
    JointlyNegative,
    NotJointlyDefinite,
}

/// Sign of the normalized objective `+-||y||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefinitenessResult {
    pub verdict: Definiteness,
    /// Present iff the verdict is definite.
    pub mu1: Option<f64>,
    /// `lambda_min(+-(A0 + mu1*A1))`; for a negative verdict this is the best
    /// margin seen over both signs.
    pub lambda_min_at_mu1: f64,
}

impl DefinitenessResult {
    pub fn sign(&self) -> Option<Sign> {
        match self.verdict {
            Definiteness::JointlyPositive => Some(Sign::Plus),
            Definiteness::JointlyNegative => Some(Sign::Minus),
            Definiteness::NotJointlyDefinite => None,
        }
    }

    pub fn is_definite(&self) -> bool {
        self.verdict != Definiteness::NotJointlyDefinite
    }

    fn definite(verdict: Definiteness, mu1: f64, margin: f64) -> Self {
        Self {
            verdict,
            mu1: Some(mu1),
            lambda_min_at_mu1: margin,
        }
    }
}

/// Decides whether `A0 + mu*A1` is positive or negative definite for some
/// `mu` and returns the `mu` with the largest margin relative to
/// `max(1, ||A0||_F + |mu| ||A1||_F)`.
///
/// A margin counts as definite when it is at least
/// `tol * max(1, ||A0||_F + |mu| ||A1||_F)`.
pub fn detect_joint_definiteness(a0: &DMatrix<f64>, a1: &DMatrix<f64>, tol: f64) -> Result<DefinitenessResult> {
    if !a0.is_square() || a1.shape() != a0.shape() || a0.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "A0 is {:?}, A1 is {:?}",
            a0.shape(),
            a1.shape()
        )));
    }
    if !a0.iter().chain(a1.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("pencil"));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("definiteness tolerance {tol}")));
    }
    let a0 = symmetrize(a0);
    let a1 = symmetrize(a1);
    let (n0, n1) = (a0.norm(), a1.norm());
    let threshold = |mu: f64| tol * (n0 + mu.abs() * n1).max(1.0);

    let scale = |mu: f64| (n0 + mu.abs() * n1).max(1.0);
    let pos = |mu: f64| min_eigenvalue(&(&a0 + &a1 * mu));
    let neg = |mu: f64| -max_eigenvalue(&(&a0 + &a1 * mu));
    let (m_pos, m_neg) = (maximize_concave(pos), maximize_concave(neg));
    let mut chosen: Option<(Definiteness, f64, f64)> = None;
    for (verdict, f, best) in [
        (Definiteness::JointlyPositive, &pos as &dyn Fn(f64) -> f64, m_pos),
        (Definiteness::JointlyNegative, &neg as &dyn Fn(f64) -> f64, m_neg),
    ] {
        if best.value < threshold(best.mu) {
            continue;
        }
        let mu = relative_peak_multiplier(f, &scale, best);
        let margin = f(mu);
        // Both signs can be definite; keep the better conditioned one.
        if chosen.is_none_or(|(_, m, v)| margin / scale(mu) > v / scale(m)) {
            chosen = Some((verdict, mu, margin));
        }
    }
    if let Some((verdict, mu, margin)) = chosen {
        return Ok(DefinitenessResult::definite(verdict, mu, margin));
    }
    Ok(DefinitenessResult {
        verdict: Definiteness::NotJointlyDefinite,
        mu1: None,
        lambda_min_at_mu1: m_pos.value.max(m_neg.value),
    })
}

#[derive(Debug, Clone, Copy)]
struct Peak {
    mu: f64,
    value: f64,
    /// The function was still increasing at the bracket cap.
    capped: bool,
}

/// Maximizes a concave function of one variable. Returns the best point
/// evaluated and its value.
fn maximize_concave(f: impl Fn(f64) -> f64) -> Peak {
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut capped = false;
    let mut eval = |x: f64| {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
        v
    };

    let f0 = eval(0.0);
    let fp = eval(1.0);
    let fm = eval(-1.0);
    let (mut lo, mut hi) = if f0 >= fp && f0 >= fm {
        (-1.0, 1.0)
    } else {
        let dir = if fp > fm { 1.0 } else { -1.0 };
        let (mut prev, mut cur, mut fcur): (f64, f64, f64) = (0.0, dir, fp.max(fm));
        loop {
            let next = 2.0 * cur;
            if next.abs() > BRACKET_CAP {
                capped = true;
                break (prev, dir * BRACKET_CAP);
            }
            let fnext = eval(next);
            if fnext <= fcur {
                break (prev, next);
            }
            prev = cur;
            cur = next;
            fcur = fnext;
        }
    };
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }

    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..GOLDEN_MAX_ITERS {
        if hi - lo <= 1e-12 * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = eval(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = eval(x1);
        }
    }
    Peak {
        mu: best.0,
        value: best.1,
        capped,
    }
}

/// Maximizer of the relative margin `f(mu) / scale(mu)` on the segment
/// from 0 to the peak of `f`, taking the smallest `|mu|` among near ties.
/// When `f` grows up to the bracket cap the relative margin keeps creeping
/// towards its asymptote, so the smallest `|mu|` within a factor two of it
/// is taken instead.
///
/// `f / scale` is unimodal on that segment because `f` is concave and
/// increasing towards the peak while `scale` is convex, so golden section
/// locates its peak and bisection the point below it.
fn relative_peak_multiplier(f: &dyn Fn(f64) -> f64, scale: &dyn Fn(f64) -> f64, peak_f: Peak) -> f64 {
    let far = peak_f.mu;
    let g = |mu: f64| f(mu) / scale(mu);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (far.min(0.0), far.max(0.0));
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..GOLDEN_MAX_ITERS {
        if hi - lo <= 1e-9 * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
        if g1 < g2 {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + ratio * (hi - lo);
            g2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - ratio * (hi - lo);
            g1 = g(x1);
        }
    }
    let (peak, g_peak) = if g1 >= g2 { (x1, g1) } else { (x2, g2) };
    let target = if peak_f.capped {
        0.5 * g_peak
    } else {
        g_peak - 1e-9 * g_peak.abs()
    };
    let (mut near, mut far) = (0.0, peak);
    if g(near) >= target {
        return near;
    }
    for _ in 0..GOLDEN_MAX_ITERS {
        let mid = 0.5 * (near + far);
        if (far - near).abs() <= 1e-9 * (1.0 + peak.abs()) {
            break;
        }
        if g(mid) >= target {
            far = mid;
        } else {
            near = mid;
        }
    }
    far
}

/// The affine change of variables `x = Q'y + q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CongruenceTransform {
    pub mu1: f64,
    pub sgn: Sign,
    /// `L^{-1}` where `+-(A0 + mu1*A1) = LL'`.
    pub q_mat: DMatrix<f64>,
    pub shift: DVector<f64>,
    /// Constant of the normalized objective; never affects which points are
    /// minimizers.
    pub c0: f64,
    l_factor: DMatrix<f64>,
}

impl CongruenceTransform {
    /// `y = L'(x - q)`, the inverse of [`pull_back`]'s point map.
    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        self.l_factor.transpose() * (x - &self.shift)
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.l_factor
    }
}

/// The constraint in `y`-space: `g(y) = y'Ay + 2b'y + c`, with objective
/// `sgn*||y||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedProblem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
    pub sgn: Sign,
}

impl TransformedProblem {
    pub fn g(&self, y: &DVector<f64>) -> f64 {
        y.dot(&(&self.a * y)) + 2.0 * self.b.dot(y) + self.c
    }
}

pub fn build_transform(
    inst: &ProblemInstance,
    det: &DefinitenessResult,
) -> Result<(CongruenceTransform, TransformedProblem)> {
    let (sgn, mu1) = match (det.sign(), det.mu1) {
        (Some(s), Some(mu)) => (s, mu),
        _ => return Err(Error::NotJointlyDefinite),
    };
    let n = inst.n();
    let hessian = inst.lagrangian_hessian(mu1);
    let signed = symmetrize(&(&hessian * sgn.value()));
    let chol = signed.clone().cholesky().ok_or(Error::Cholesky {
        margin: det.lambda_min_at_mu1,
    })?;
    let l = chol.l();
    let q_mat = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::Cholesky {
            margin: det.lambda_min_at_mu1,
        })?;
    let d = inst.b0() + inst.b1() * mu1;
    // q = -(A0 + mu1 A1)^{-1} d = -sgn (LL')^{-1} d
    let shift = -chol.solve(&d) * sgn.value();
    let c0 = d.dot(&shift) + mu1 * inst.c1();

    let a1q = inst.a1() * &shift;
    let a = symmetrize(&(&q_mat * inst.a1() * q_mat.transpose()));
    let b = &q_mat * (&a1q + inst.b1());
    let c = shift.dot(&a1q) + 2.0 * inst.b1().dot(&shift) + inst.c1();

    Ok((
        CongruenceTransform {
            mu1,
            sgn,
            q_mat,
            shift,
            c0,
            l_factor: l,
        },
        TransformedProblem { a, b, c, sgn },
    ))
}

/// Maps a `y`-space point and multiplier back to `x`-space.
pub fn pull_back(y: &DVector<f64>, mu_y: f64, t: &CongruenceTransform) -> (DVector<f64>, f64) {
    (t.q_mat.transpose() * y + &t.shift, t.mu1 + mu_y)
}
