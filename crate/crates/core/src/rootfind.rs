//! The two bisection routines.
//!
//! [`bisect_type2`] serves psi1/psi2 (objective `+||y||^2`), [`bisect_type3`]
//! serves psi3/psi4 (objective `-||y||^2`). Both return the root `eta*` at
//! which the branch crosses zero with negative slope, or nothing.
//!
//! Floating-point values are never exactly zero, so "psi = 0" is read as
//! `|psi| <= zeta` with `zeta = 1e-12 (1 + |c| + sum |terms|)`, the rounding
//! noise level of the evaluated sum; the same rule applies to `psi'`.

use serde::Serialize;

use crate::secular::{Branch, BranchContext};

/// Relative size of the numerical-zero band for `psi` and `psi'`.
pub const ZERO_BAND: f64 = 1e-12;

const REFINE_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Terminal {
    /// A midpoint landed on a numerical zero with negative slope.
    ExactRoot,
    /// The bracket shrank below `eps`; a root is present iff a sign change
    /// was observed.
    IntervalConverged,
    /// Stopped on a vanishing derivative, a pole, or a root that sits on the
    /// interval boundary.
    Guarded,
    /// psi3/psi4 on an interval starting at zero with `psi(0) <= 0`.
    GateRejected,
    /// Empty interval, tied eigenvalues or zero edge projection.
    NonViable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BisectionOutcome {
    pub branch: Branch,
    pub eta_star: Option<f64>,
    pub iterations: usize,
    pub psi_evals: usize,
    pub psi_prime_evals: usize,
    pub terminal: Terminal,
    /// Bracket at exit (the original interval for non-viable branches).
    pub bracket: (f64, f64),
}

impl BisectionOutcome {
    fn absent(ctx: &BranchContext<'_>, terminal: Terminal) -> Self {
        Self {
            branch: ctx.branch,
            eta_star: None,
            iterations: 0,
            psi_evals: 0,
            psi_prime_evals: 0,
            terminal,
            bracket: (ctx.u1, ctx.u2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SignClass {
    Positive,
    Zero,
    Negative,
}

fn classify(value: f64, magnitude: f64) -> SignClass {
    if value.abs() <= ZERO_BAND * (1.0 + magnitude) {
        SignClass::Zero
    } else if value > 0.0 {
        SignClass::Positive
    } else {
        SignClass::Negative
    }
}

/// Which routine is running; they differ only in the roles of `U1`/`U2`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Flavor {
    Type2,
    Type3,
}

pub fn bisect_type2(ctx: &BranchContext<'_>, eps: f64) -> BisectionOutcome {
    debug_assert!(matches!(ctx.branch, Branch::Psi1 | Branch::Psi2));
    bisect(ctx, eps, Flavor::Type2)
}

pub fn bisect_type3(ctx: &BranchContext<'_>, eps: f64) -> BisectionOutcome {
    debug_assert!(matches!(ctx.branch, Branch::Psi3 | Branch::Psi4));
    bisect(ctx, eps, Flavor::Type3)
}

/// Dispatches on the branch.
pub fn bisect_branch(ctx: &BranchContext<'_>, eps: f64) -> BisectionOutcome {
    match ctx.branch {
        Branch::Psi1 | Branch::Psi2 => bisect_type2(ctx, eps),
        Branch::Psi3 | Branch::Psi4 => bisect_type3(ctx, eps),
    }
}

fn bisect(ctx: &BranchContext<'_>, eps: f64, flavor: Flavor) -> BisectionOutcome {
    assert!(eps > 0.0, "bisection tolerance must be positive");
    if !ctx.is_viable() {
        return BisectionOutcome::absent(ctx, Terminal::NonViable);
    }
    let mut out = BisectionOutcome::absent(ctx, Terminal::IntervalConverged);

    if flavor == Flavor::Type3 && ctx.starts_at_zero() {
        out.psi_evals += 1;
        match ctx.psi_with_scale(0.0) {
            Ok((v, _)) if v > 0.0 => {}
            Ok(_) => {
                out.terminal = Terminal::GateRejected;
                return out;
            }
            Err(_) => {
                out.terminal = Terminal::Guarded;
                return out;
            }
        }
    }

    let (mut u1, mut u2) = (ctx.u1, ctx.u2);
    let mut seen_crossing = false;
    let finish = |out: &mut BisectionOutcome, u1: f64, u2: f64| out.bracket = (u1, u2);

    loop {
        let eta = 0.5 * (u1 + u2);
        out.iterations += 1;
        out.psi_evals += 1;
        let psi = match ctx.psi_with_scale(eta) {
            Ok((v, m)) => classify(v, m),
            Err(_) => {
                out.terminal = Terminal::Guarded;
                finish(&mut out, u1, u2);
                return out;
            }
        };

        // Type 2 looks for the + to - crossing moving right; type 3 the same
        // crossing with the bracket ends playing mirrored roles.
        let (crossing_side, far_side) = match flavor {
            Flavor::Type2 => (SignClass::Positive, SignClass::Negative),
            Flavor::Type3 => (SignClass::Negative, SignClass::Positive),
        };

        if psi == crossing_side {
            seen_crossing = true;
            match flavor {
                Flavor::Type2 => u1 = eta,
                Flavor::Type3 => u2 = eta,
            }
        } else {
            out.psi_prime_evals += 1;
            let slope = match ctx.psi_prime_with_scale(eta) {
                Ok((v, m)) => classify(v, m),
                Err(_) => {
                    out.terminal = Terminal::Guarded;
                    finish(&mut out, u1, u2);
                    return out;
                }
            };
            match (psi, slope) {
                (_, SignClass::Zero) => {
                    out.terminal = Terminal::Guarded;
                    finish(&mut out, u1, u2);
                    return out;
                }
                (SignClass::Zero, SignClass::Negative) => {
                    out.eta_star = Some(eta);
                    out.terminal = Terminal::ExactRoot;
                    finish(&mut out, u1, u2);
                    return out;
                }
                (SignClass::Zero, SignClass::Positive) => {
                    seen_crossing = true;
                    match flavor {
                        Flavor::Type2 => u1 = eta,
                        Flavor::Type3 => u2 = eta,
                    }
                }
                (p, SignClass::Positive) if p == far_side => match flavor {
                    Flavor::Type2 => u1 = eta,
                    Flavor::Type3 => u2 = eta,
                },
                (p, SignClass::Negative) if p == far_side => match flavor {
                    Flavor::Type2 => u2 = eta,
                    Flavor::Type3 => u1 = eta,
                },
                _ => unreachable!("crossing side handled above"),
            }
        }

        if u2 - u1 <= eps {
            break;
        }
    }

    finish(&mut out, u1, u2);
    if !seen_crossing {
        return out;
    }
    let eta = match flavor {
        Flavor::Type2 => u2,
        Flavor::Type3 => u1,
    };
    if eta > ctx.u1 && eta < ctx.u2 {
        out.eta_star = Some(eta);
    } else {
        // The root is within eps of the interval end, where the branch has
        // its pole or its sign gate.
        out.terminal = Terminal::Guarded;
    }
    out
}

/// Tightens a converged bracket to working precision.
///
/// After a successful run of either routine the exit bracket `(U1, U2)` has
/// `psi(U1) > 0 > psi(U2)` (or an endpoint at the pole), so plain bisection
/// on the sign converges to the same crossing. Returns the refined root, or
/// the reported one unchanged for exact roots.
pub fn refine_root(ctx: &BranchContext<'_>, outcome: &BisectionOutcome) -> Option<f64> {
    let eta = outcome.eta_star?;
    if outcome.terminal == Terminal::ExactRoot {
        return Some(eta);
    }
    let (mut lo, mut hi) = outcome.bracket;
    let mut best = eta;
    let mut best_abs = ctx.psi_with_scale(eta).map(|(v, _)| v.abs()).unwrap_or(f64::INFINITY);
    for _ in 0..REFINE_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let Ok((v, _)) = ctx.psi_with_scale(mid) else {
            break;
        };
        if v.abs() < best_abs {
            best = mid;
            best_abs = v.abs();
        }
        if v > 0.0 {
            lo = mid;
        } else if v < 0.0 {
            hi = mid;
        } else {
            break;
        }
    }
    Some(best)
}

/// Upper bound on the iterations of one call: `ceil(log2(width/eps)) + 1`.
pub fn iteration_bound(width: f64, eps: f64) -> usize {
    if width <= eps {
        return 1;
    }
    (width / eps).log2().ceil() as usize + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::{Sign, TransformedProblem};
    use crate::secular::{branch_interval, psi_eval, psi_prime_eval, spectral_decompose, SpectralData};
    use nalgebra::{DMatrix, DVector};

    fn spec(lambda: &[f64], b: &[f64], c: f64) -> SpectralData {
        spectral_decompose(&TransformedProblem {
            a: DMatrix::from_diagonal(&DVector::from_column_slice(lambda)),
            b: DVector::from_column_slice(b),
            c,
            sgn: Sign::Plus,
        })
        .unwrap()
    }

    fn example() -> SpectralData {
        spec(&[-4.0, 1.0], &[1.0, 8.0], 45.0)
    }

    #[test]
    fn psi1_of_example() {
        let s = example();
        let ctx = branch_interval(&s, Branch::Psi1);
        let out = bisect_type2(&ctx, 1e-5);
        let eta = out.eta_star.unwrap();
        assert!((eta - 3.6018).abs() < 5e-4, "{eta}");
        assert_eq!(out.terminal, Terminal::IntervalConverged);
        assert_eq!(out.iterations, 19);
        assert!(out.bracket.1 - out.bracket.0 <= 1e-5);
        assert!(psi_prime_eval(&ctx, eta).unwrap() < 0.0);
    }

    #[test]
    fn psi2_of_example() {
        let s = example();
        let ctx = branch_interval(&s, Branch::Psi2);
        let out = bisect_type2(&ctx, 1e-5);
        let eta = out.eta_star.unwrap();
        assert!((eta - 0.3512).abs() < 5e-4, "{eta}");
        assert!((ctx.multiplier(eta) + 2.8474).abs() < 1e-2);
    }

    #[test]
    fn non_viable_inputs() {
        let s = spec(&[-4.0, 1.0], &[0.0, 8.0], 45.0);
        let ctx = branch_interval(&s, Branch::Psi1);
        let out = bisect_type2(&ctx, 1e-5);
        assert_eq!(
            (out.eta_star, out.terminal, out.iterations),
            (None, Terminal::NonViable, 0)
        );

        let s = spec(&[1.0, 2.0], &[1.0, 1.0], 1.0);
        let ctx = branch_interval(&s, Branch::Psi1);
        assert!(ctx.u1 >= ctx.u2);
        let out = bisect_type2(&ctx, 1e-5);
        assert_eq!(
            (out.eta_star, out.terminal, out.iterations),
            (None, Terminal::NonViable, 0)
        );
    }

    #[test]
    fn maximization_example_gate_and_psi4() {
        let s = example();
        let c3 = branch_interval(&s, Branch::Psi3);
        let out = bisect_type3(&c3, 1e-5);
        assert_eq!(out.eta_star, None);
        assert_eq!(out.terminal, Terminal::GateRejected);
        assert!((psi_eval(&c3, 0.0).unwrap() + 18.75).abs() < 1e-12);

        let c4 = branch_interval(&s, Branch::Psi4);
        let out = bisect_type3(&c4, 1e-5);
        let eta = out.eta_star.unwrap();
        assert!((eta - 1.1829).abs() < 5e-4, "{eta}");
        assert!(psi_prime_eval(&c4, eta).unwrap() < 0.0);
    }

    #[test]
    fn no_positive_values_means_absent() {
        // Large negative constant: psi1 < 0 on the whole interval.
        let s = spec(&[-4.0, 1.0], &[1.0, 7.0], -500.0);
        let ctx = branch_interval(&s, Branch::Psi1);
        let out = bisect_type2(&ctx, 1e-5);
        assert_eq!(out.eta_star, None);
        assert_eq!(out.terminal, Terminal::IntervalConverged);
    }

    #[test]
    fn refinement_reaches_working_precision() {
        let s = example();
        for br in [Branch::Psi1, Branch::Psi2] {
            let ctx = branch_interval(&s, br);
            let out = bisect_type2(&ctx, 1e-5);
            let eta = refine_root(&ctx, &out).unwrap();
            assert!((eta - out.eta_star.unwrap()).abs() <= 1e-5);
            let (v, m) = ctx.psi_with_scale(eta).unwrap();
            assert!(v.abs() <= 1e-12 * m, "{br}: {v}");
        }
        let c4 = branch_interval(&s, Branch::Psi4);
        let out = bisect_type3(&c4, 1e-5);
        let eta = refine_root(&c4, &out).unwrap();
        assert!((eta - 1.1829380075299276).abs() < 1e-12);
    }

    #[test]
    fn iteration_bound_and_determinism() {
        let s = example();
        let ctx = branch_interval(&s, Branch::Psi1);
        for &eps in &[1e-2, 1e-5, 1e-9] {
            let a = bisect_type2(&ctx, eps);
            let b = bisect_type2(&ctx, eps);
            assert_eq!(a, b);
            assert!(a.iterations <= iteration_bound(ctx.u2 - ctx.u1, eps));
        }
        assert_eq!(iteration_bound(4.0, 1e-5), 20);
    }
}
