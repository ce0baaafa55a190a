//! Finds every local-nonglobal minimizer of a jointly definite
//! instance.
//!
//! With a positive pencil the normalized objective is `||y||^2` and the
//! candidates come from psi1 (multiplier `+1/eta`) and psi2 (`-1/eta`); with
//! a negative pencil the objective is `-||y||^2` and psi3/psi4 are used.
//! Every candidate is pulled back to `x` and verified there before it is
//! reported. Inequality problems reuse the equality solve and keep the
//! certificates whose multiplier is positive. One-dimensional problems are
//! solved directly from the roots of `f1`.

use std::time::Instant;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pencil::{
    build_transform, detect_joint_definiteness, pull_back, DefinitenessResult, Sign, TransformedProblem,
    DEFAULT_DEFINITENESS_TOL,
};
use crate::problem::{ConstraintKind, ProblemInstance};
use crate::rootfind::{bisect_branch, refine_root, BisectionOutcome, Terminal};
use crate::secular::{branch_interval, spectral_decompose, Branch, BranchContext};
use crate::verifier::{check_strict_lngm, Inertia, Tolerances, VerificationVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Bisection tolerance.
    pub eps: f64,
    pub definiteness_tol: f64,
    pub tolerances: Tolerances,
    /// Continue bisecting the final bracket to working precision before the
    /// candidate is formed.
    pub refine: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eps: 1e-5,
            definiteness_tol: DEFAULT_DEFINITENESS_TOL,
            tolerances: Tolerances::default(),
            refine: true,
        }
    }
}

impl SolveOptions {
    pub fn with_eps(eps: f64) -> Self {
        Self { eps, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Solved,
    NotJointlyDefinite,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateVerdict {
    CertifiedStrictLngm,
    RejectedByVerifier,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LngmCertificate {
    pub x_star: Vec<f64>,
    pub mu_star: f64,
    /// The refined secular root; absent for one-dimensional problems.
    pub eta_star: Option<f64>,
    pub branch: Option<Branch>,
    pub f0_value: f64,
    pub constraint_residual: f64,
    pub stationarity_residual: f64,
    pub inertia: Inertia,
    pub verdict: CertificateVerdict,
    pub verification: VerificationVerdict,
}

impl LngmCertificate {
    fn new(
        inst: &ProblemInstance,
        x: DVector<f64>,
        mu: f64,
        eta: Option<f64>,
        branch: Option<Branch>,
        verification: VerificationVerdict,
    ) -> Self {
        let verdict = if verification.certified() {
            CertificateVerdict::CertifiedStrictLngm
        } else {
            CertificateVerdict::RejectedByVerifier
        };
        Self {
            f0_value: inst.f0(&x),
            x_star: x.iter().copied().collect(),
            mu_star: mu,
            eta_star: eta,
            branch,
            constraint_residual: verification.constraint_residual,
            stationarity_residual: verification.stationarity_residual,
            inertia: verification.inertia,
            verdict,
            verification,
        }
    }

    pub fn x(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.x_star)
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == CertificateVerdict::CertifiedStrictLngm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformSummary {
    pub mu1: f64,
    pub sgn: Sign,
    pub c0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchTrace {
    /// The interval of the branch before bisection.
    pub interval: (f64, f64),
    pub viable: bool,
    pub outcome: BisectionOutcome,
    /// Second pass with a width-relative tolerance, run when the first found
    /// nothing on an interval not much wider than `eps`.
    pub tightened: Option<BisectionOutcome>,
    /// The root after refinement (equal to the raw root when refinement is
    /// off).
    pub refined_eta: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub eig_seconds: f64,
    pub bis_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub n: usize,
    pub kind: ConstraintKind,
    pub status: SolveStatus,
    pub definiteness: Option<DefinitenessResult>,
    pub transform: Option<TransformSummary>,
    /// Certified strict local-nonglobal minimizers.
    pub certificates: Vec<LngmCertificate>,
    /// Candidates that did not pass verification, kept for diagnosis.
    pub rejected: Vec<LngmCertificate>,
    pub branches: Vec<BranchTrace>,
    pub notes: Vec<String>,
    pub timings: Timings,
}

impl SolveReport {
    fn empty(inst: &ProblemInstance, status: SolveStatus) -> Self {
        Self {
            n: inst.n(),
            kind: inst.kind(),
            status,
            definiteness: None,
            transform: None,
            certificates: Vec::new(),
            rejected: Vec::new(),
            branches: Vec::new(),
            notes: Vec::new(),
            timings: Timings::default(),
        }
    }

    pub fn multipliers(&self) -> Vec<f64> {
        self.certificates.iter().map(|c| c.mu_star).collect()
    }

    /// Total bisection iterations over all branch calls.
    pub fn bisection_iterations(&self) -> usize {
        self.branches
            .iter()
            .map(|b| b.outcome.iterations + b.tightened.map_or(0, |t| t.iterations))
            .sum()
    }
}

/// A root of one branch in `y`-space.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedCandidate {
    pub branch: Branch,
    pub eta: f64,
    pub y: DVector<f64>,
    pub mu_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformedSolution {
    pub candidates: Vec<TransformedCandidate>,
    pub branches: Vec<BranchTrace>,
    pub timings: Timings,
}

/// The branches searched for a given objective sign.
pub fn branches_for(sgn: Sign) -> [Branch; 2] {
    match sgn {
        Sign::Plus => [Branch::Psi1, Branch::Psi2],
        Sign::Minus => [Branch::Psi3, Branch::Psi4],
    }
}

/// Resolution, in halvings of the interval, below which an empty outcome is
/// not trusted.
const TRUSTED_HALVINGS: i32 = 16;

/// Halvings of the interval made by the second pass.
const SECOND_PASS_HALVINGS: i32 = 30;

/// The tolerance for a second pass when the first returned nothing with
/// `eps` coarser than [`TRUSTED_HALVINGS`] halvings of the interval; a
/// crossing near the pole or near a sign change of the slope is easily
/// missed at that resolution.
fn tightened_eps(ctx: &BranchContext<'_>, outcome: &BisectionOutcome, opts: &SolveOptions) -> Option<f64> {
    if !opts.refine
        || outcome.eta_star.is_some()
        || !matches!(outcome.terminal, Terminal::IntervalConverged | Terminal::Guarded)
    {
        return None;
    }
    let width = ctx.u2 - ctx.u1;
    if opts.eps <= width * 2f64.powi(-TRUSTED_HALVINGS) {
        return None;
    }
    let floor = 8.0 * f64::EPSILON * ctx.u1.abs().max(ctx.u2.abs());
    let eps = (width * 2f64.powi(-SECOND_PASS_HALVINGS)).max(floor);
    (eps < opts.eps).then_some(eps)
}

/// Runs the branch searches on a normalized problem. Candidates are not
/// verified here.
pub fn solve_transformed(tp: &TransformedProblem, opts: &SolveOptions) -> Result<TransformedSolution> {
    let start = Instant::now();
    let spec = spectral_decompose(tp)?;
    let eig_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let mut candidates = Vec::new();
    let mut branches = Vec::new();
    for branch in branches_for(tp.sgn) {
        let ctx = branch_interval(&spec, branch);
        let outcome = bisect_branch(&ctx, opts.eps);
        let tightened = tightened_eps(&ctx, &outcome, opts).map(|eps| bisect_branch(&ctx, eps));
        let last = tightened.as_ref().unwrap_or(&outcome);
        let refined = if opts.refine {
            refine_root(&ctx, last)
        } else {
            last.eta_star
        };
        branches.push(BranchTrace {
            interval: (ctx.u1, ctx.u2),
            viable: ctx.is_viable(),
            outcome,
            tightened,
            refined_eta: refined,
        });
        if let Some(eta) = refined {
            let y = ctx.y_of_eta(eta)?;
            candidates.push(TransformedCandidate {
                branch,
                eta,
                y,
                mu_y: ctx.multiplier(eta),
            });
        }
    }
    let bis_seconds = start.elapsed().as_secs_f64();
    Ok(TransformedSolution {
        candidates,
        branches,
        timings: Timings {
            eig_seconds,
            bis_seconds,
        },
    })
}

/// Dispatches on dimension and constraint kind.
pub fn solve(inst: &ProblemInstance, opts: &SolveOptions) -> SolveReport {
    if inst.n() == 1 {
        return solve_univariate(inst, opts);
    }
    match inst.kind() {
        ConstraintKind::Equality => solve_gtre(inst, opts),
        ConstraintKind::Inequality => solve_gtr(inst, opts),
    }
}

pub fn solve_gtre(inst: &ProblemInstance, opts: &SolveOptions) -> SolveReport {
    if inst.n() == 1 {
        return solve_univariate(&inst.with_kind(ConstraintKind::Equality), opts);
    }
    let eq = inst.with_kind(ConstraintKind::Equality);
    let mut report = SolveReport::empty(&eq, SolveStatus::Solved);
    if let Err(e) = solve_gtre_into(&eq, opts, &mut report) {
        report.status = match e {
            Error::NotJointlyDefinite => SolveStatus::NotJointlyDefinite,
            _ => SolveStatus::NumericalFailure,
        };
        report.notes.push(e.to_string());
    }
    report
}

fn solve_gtre_into(inst: &ProblemInstance, opts: &SolveOptions, report: &mut SolveReport) -> Result<()> {
    let det = detect_joint_definiteness(inst.a0(), inst.a1(), opts.definiteness_tol)?;
    report.definiteness = Some(det);
    if !det.is_definite() {
        report.notes.push(format!(
            "no multiplier makes A0 + mu*A1 definite; best margin {:e}",
            det.lambda_min_at_mu1
        ));
        return Err(Error::NotJointlyDefinite);
    }
    let (t, tp) = build_transform(inst, &det)?;
    report.transform = Some(TransformSummary {
        mu1: t.mu1,
        sgn: t.sgn,
        c0: t.c0,
    });
    let sol = solve_transformed(&tp, opts)?;
    report.branches = sol.branches;
    report.timings = sol.timings;

    for cand in sol.candidates {
        let (x, mu) = pull_back(&cand.y, cand.mu_y, &t);
        let v = check_strict_lngm(inst, &x, mu, &opts.tolerances)?;
        let cert = LngmCertificate::new(inst, x, mu, Some(cand.eta), Some(cand.branch), v);
        if cert.is_certified() {
            report.certificates.push(cert);
        } else {
            report.notes.push(format!(
                "{} candidate rejected: {}",
                cand.branch,
                cert.verification.reasons.join("; ")
            ));
            report.rejected.push(cert);
        }
    }

    if t.sgn == Sign::Minus && report.certificates.len() > 1 {
        report
            .notes
            .push("more than one certificate under a negative pencil; keeping the first".into());
        let extra = report.certificates.split_off(1);
        report.rejected.extend(extra);
    }
    Ok(())
}

/// Solves the inequality problem through its equality counterpart and keeps
/// the certificates with a positive multiplier.
pub fn solve_gtr(inst: &ProblemInstance, opts: &SolveOptions) -> SolveReport {
    let ineq = inst.with_kind(ConstraintKind::Inequality);
    if inst.n() == 1 {
        return solve_univariate(&ineq, opts);
    }
    let eq_report = solve_gtre(&ineq, opts);
    let mut report = SolveReport {
        kind: ConstraintKind::Inequality,
        certificates: Vec::new(),
        rejected: Vec::new(),
        ..eq_report.clone()
    };
    if eq_report.status != SolveStatus::Solved {
        return report;
    }
    let mu1 = report.transform.map_or(0.0, |t| t.mu1);
    let tol_mu = 1e-9 * (1.0 + mu1.abs());
    for c in eq_report.certificates.into_iter().chain(eq_report.rejected) {
        let x = c.x();
        let v = match check_strict_lngm(&ineq, &x, c.mu_star, &opts.tolerances) {
            Ok(v) => v,
            Err(e) => {
                report.notes.push(e.to_string());
                continue;
            }
        };
        let cert = LngmCertificate::new(&ineq, x, c.mu_star, c.eta_star, c.branch, v);
        if cert.is_certified() && cert.mu_star <= tol_mu {
            report.notes.push(format!(
                "boundary multiplier {:e} at or below {:e}; not reported as a certificate",
                cert.mu_star, tol_mu
            ));
            report.rejected.push(LngmCertificate {
                verdict: CertificateVerdict::RejectedByVerifier,
                ..cert
            });
        } else if cert.is_certified() {
            report.certificates.push(cert);
        } else {
            report.rejected.push(cert);
        }
    }
    report
}

/// One-dimensional problems, solved from the real roots of `f1`.
pub fn solve_univariate(inst: &ProblemInstance, opts: &SolveOptions) -> SolveReport {
    let mut report = SolveReport::empty(inst, SolveStatus::Solved);
    if inst.n() != 1 {
        report.status = SolveStatus::NumericalFailure;
        report.notes.push("univariate solve needs n = 1".into());
        return report;
    }
    report.definiteness = detect_joint_definiteness(inst.a0(), inst.a1(), opts.definiteness_tol).ok();

    let (a0, b0) = (inst.a0()[(0, 0)], inst.b0()[0]);
    let (a1, b1, c1) = (inst.a1()[(0, 0)], inst.b1()[0], inst.c1());
    let f0 = |x: f64| a0 * x * x + 2.0 * b0 * x;
    let df0 = |x: f64| 2.0 * (a0 * x + b0);
    let f1 = |x: f64| a1 * x * x + 2.0 * b1 * x + c1;
    let df1 = |x: f64| 2.0 * (a1 * x + b1);

    let roots = quadratic_roots(a1, 2.0 * b1, c1);
    // (point, multiplier) pairs that are local minimizers.
    let mut local: Vec<(f64, f64)> = Vec::new();
    // Infimum of f0 over the feasible set.
    let mut inf = f64::INFINITY;

    match (inst.kind(), &roots) {
        (_, Roots::All) => {
            report
                .notes
                .push("constraint holds everywhere; unconstrained problem".into());
            if a0 < 0.0 || (a0 == 0.0 && b0 != 0.0) {
                inf = f64::NEG_INFINITY;
            } else if a0 > 0.0 {
                let xs = -b0 / a0;
                local.push((xs, 0.0));
                inf = f0(xs);
            }
        }
        (ConstraintKind::Equality, Roots::Finite(rs)) => {
            for &p in rs {
                let g = df1(p);
                let mu = if g != 0.0 { -df0(p) / g + 0.0 } else { 0.0 };
                local.push((p, mu));
                inf = inf.min(f0(p));
            }
        }
        (ConstraintKind::Inequality, Roots::Finite(rs)) => {
            let probe = |lo: f64, hi: f64| {
                let x = match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => lo + 1.0 + lo.abs(),
                    (false, true) => hi - 1.0 - hi.abs(),
                    (false, false) => 0.0,
                };
                f1(x) <= 0.0
            };
            let mut edges = vec![f64::NEG_INFINITY];
            edges.extend(rs.iter().copied());
            edges.push(f64::INFINITY);
            let feasible: Vec<bool> = edges.windows(2).map(|w| probe(w[0], w[1])).collect();

            let left_tail = feasible[0];
            let right_tail = feasible[feasible.len() - 1];
            let down_left = a0 < 0.0 || (a0 == 0.0 && b0 > 0.0);
            let down_right = a0 < 0.0 || (a0 == 0.0 && b0 < 0.0);
            if (left_tail && down_left) || (right_tail && down_right) {
                inf = f64::NEG_INFINITY;
            }

            for (k, &p) in rs.iter().enumerate() {
                inf = inf.min(f0(p));
                let (left, right) = (feasible[k], feasible[k + 1]);
                let slope = df0(p);
                let ok_right = !right || slope > 0.0 || (slope == 0.0 && a0 > 0.0);
                let ok_left = !left || slope < 0.0 || (slope == 0.0 && a0 > 0.0);
                if ok_left && ok_right {
                    let g = df1(p);
                    let mu = if g != 0.0 { -slope / g + 0.0 } else { 0.0 };
                    local.push((p, mu));
                }
            }
            if a0 > 0.0 {
                let xs = -b0 / a0;
                if f1(xs) < 0.0 {
                    local.push((xs, 0.0));
                    inf = inf.min(f0(xs));
                }
            }
            if a0 == 0.0 && b0 == 0.0 && feasible.iter().any(|&f| f) {
                inf = inf.min(0.0);
            }
        }
        (kind, Roots::None) => {
            if kind == ConstraintKind::Inequality && f1(0.0) <= 0.0 {
                // f1 < 0 everywhere.
                if a0 < 0.0 || (a0 == 0.0 && b0 != 0.0) {
                    inf = f64::NEG_INFINITY;
                } else if a0 > 0.0 {
                    let xs = -b0 / a0;
                    local.push((xs, 0.0));
                    inf = f0(xs);
                }
            } else {
                report.notes.push("feasible set is empty".into());
                return report;
            }
        }
    }

    let slack = 1e-12 * (1.0 + inf.abs());
    for (p, mu) in local {
        let val = f0(p);
        if inf.is_finite() && val <= inf + slack {
            continue;
        }
        let x = DVector::from_element(1, p);
        let v = match check_strict_lngm(inst, &x, mu, &opts.tolerances) {
            Ok(v) => v,
            Err(e) => {
                report.notes.push(e.to_string());
                continue;
            }
        };
        let cert = LngmCertificate::new(inst, x, mu, None, None, v);
        if cert.is_certified() {
            report.certificates.push(cert);
        } else {
            report.notes.push(format!(
                "local minimizer at x = {p} not certified: {}",
                cert.verification.reasons.join("; ")
            ));
            report.rejected.push(cert);
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
enum Roots {
    None,
    Finite(Vec<f64>),
    /// The polynomial is identically zero.
    All,
}

/// Real roots of `a x^2 + b x + c` in ascending order, computed without
/// cancellation.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Roots {
    if a == 0.0 {
        return if b != 0.0 {
            Roots::Finite(vec![-c / b])
        } else if c == 0.0 {
            Roots::All
        } else {
            Roots::None
        };
    }
    let disc = b * b - 4.0 * a * c;
    let scale = 1e-14 * (b * b + (4.0 * a * c).abs());
    if disc < -scale {
        return Roots::None;
    }
    if disc.abs() <= scale {
        return Roots::Finite(vec![-b / (2.0 * a)]);
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if q == 0.0 {
        let r = (-c / a).sqrt();
        (-r, r)
    } else {
        (q / a, c / q)
    };
    Roots::Finite(if r1 <= r2 { vec![r1, r2] } else { vec![r2, r1] })
}
