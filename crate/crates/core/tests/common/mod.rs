#![allow(dead_code)]

use lngm::instance::{generate_random, scramble, GeneratorConfig};
use lngm::secular::{branch_interval, psi_eval, psi_prime_eval, spectral_decompose, Branch, SpectralData};
use lngm::verifier::{reduced_hessian, reduced_hessian_determinant_check};
use lngm::{ProblemInstance, Sign, TransformedProblem};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..scale));
    (&m + m.transpose()) * 0.5
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

/// A normalized constraint `y'Ay + 2b'y + c` with uniform entries.
pub fn random_transformed(seed: u64, n: usize) -> TransformedProblem {
    let mut r = rng(seed);
    TransformedProblem {
        a: random_sym(&mut r, n, 100.0),
        b: random_vec(&mut r, n, 100.0),
        c: r.random_range(-100.0..100.0),
        sgn: Sign::Plus,
    }
}

pub fn random_spec(seed: u64, n: usize) -> SpectralData {
    spectral_decompose(&random_transformed(seed, n)).unwrap()
}

/// A jointly definite instance in general coordinates whose normalized
/// form has at least one local-nonglobal minimizer.
pub fn random_instance(seed: u64, n: usize) -> ProblemInstance {
    let base = generate_random(&GeneratorConfig::new(n, seed)).unwrap();
    let mu1 = rng(seed ^ 0x5eed).random_range(-2.0..2.0);
    scramble(&base, seed.wrapping_add(17), mu1).unwrap()
}

/// Jointly negative counterpart of [`random_instance`].
pub fn random_negative_instance(seed: u64, n: usize) -> ProblemInstance {
    let mut cfg = GeneratorConfig::new(n, seed);
    cfg.target_branch = Branch::Psi3;
    let base = generate_random(&cfg).unwrap();
    let mu1 = rng(seed ^ 0x5eed).random_range(-2.0..2.0);
    scramble(&base, seed.wrapping_add(17), mu1).unwrap()
}

fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

fn interior(u1: f64, u2: f64, t: f64) -> f64 {
    u1 + (u2 - u1) * (0.05 + 0.9 * t)
}

/// Sum of |summands| of psi1, the natural scale for relative errors.
fn psi1_scale(spec: &SpectralData, eta: f64) -> f64 {
    spec.psi1_with_scale(eta).map(|(_, m)| m).unwrap_or(f64::INFINITY)
}

pub fn check_reflections(spec: &SpectralData, seed: u64) -> Check {
    let mut r = rng(seed);
    let span = 2.0 * spec.lambda.amax().max(1.0);
    let ctx: Vec<_> = Branch::ALL.iter().map(|&b| branch_interval(spec, b)).collect();
    let mut checked = 0;
    while checked < 100 {
        let eta = r.random_range(-span..span);
        let (Ok(p), Ok(pm)) = (spec.psi1(eta), spec.psi1(-eta)) else {
            continue;
        };
        let tol = 1e-10 * psi1_scale(spec, eta).max(psi1_scale(spec, -eta));
        let expect = [p, -pm, pm, -p];
        for (c, want) in ctx.iter().zip(expect) {
            let got = psi_eval(c, eta).map_err(|e| e.to_string())?;
            if (got - want).abs() > tol {
                return Err(format!("{} at {eta}: {got} vs {want}", c.branch));
            }
        }
        checked += 1;
    }
    Ok(())
}

pub fn check_derivatives(spec: &SpectralData, seed: u64) -> Check {
    let mut r = rng(seed);
    for b in Branch::ALL {
        let c = branch_interval(spec, b);
        if !(c.u1 < c.u2) {
            continue;
        }
        let h = 1e-6 * (c.u2 - c.u1);
        for _ in 0..10 {
            let eta = interior(c.u1, c.u2, r.random::<f64>());
            let fd = (psi_eval(&c, eta + h).unwrap() - psi_eval(&c, eta - h).unwrap()) / (2.0 * h);
            let (d, m) = c.psi_prime_with_scale(eta).unwrap();
            // Relative to the derivative, floored where psi' itself cancels.
            if rel_err(fd, d, d.abs().max(1e-3 * m)) > 1e-5 {
                return Err(format!("{b} at {eta}: fd {fd} vs {d}"));
            }
        }
    }
    Ok(())
}

/// `psi1(eta) = g(y1(eta))` with `g` evaluated on the undecomposed data.
pub fn check_composition(tp: &TransformedProblem, seed: u64) -> Check {
    let spec = spectral_decompose(tp).map_err(|e| e.to_string())?;
    let mut r = rng(seed);
    let (a, b) = (&tp.a, &tp.b);
    let span = 2.0 * spec.lambda.amax().max(1.0);
    let mut checked = 0;
    while checked < 20 {
        let eta = r.random_range(-span..span);
        let (Ok(psi), Ok(y)) = (spec.psi1(eta), spec.y1(eta)) else {
            continue;
        };
        let quad = y.dot(&(a * &y));
        let lin = 2.0 * b.dot(&y);
        let g = quad + lin + tp.c;
        let scale = quad.abs() + lin.abs() + tp.c.abs();
        if rel_err(psi, g, scale) > 1e-10 {
            return Err(format!("at {eta}: psi1 {psi} vs g(y1) {g}"));
        }
        checked += 1;
    }
    Ok(())
}

pub fn check_phi_monotone(spec: &SpectralData) -> Check {
    let n = spec.n();
    if spec.r[0].abs() <= spec.edge_tol() {
        return Ok(());
    }
    let (lo, hi) = (
        if n >= 2 {
            -spec.lambda[1]
        } else {
            -spec.lambda[0] - 100.0
        },
        -spec.lambda[0],
    );
    if !(lo < hi) {
        return Ok(());
    }
    let mut prev = f64::INFINITY;
    for k in 1..50 {
        let eta = lo + (hi - lo) * k as f64 / 50.0;
        let v = spec.phi1(eta).map_err(|e| e.to_string())?;
        if v >= prev {
            return Err(format!("phi1 not decreasing at {eta}: {v} >= {prev}"));
        }
        prev = v;
    }
    Ok(())
}

pub fn check_psi1_prime_signs(spec: &SpectralData) -> Check {
    let c = branch_interval(spec, Branch::Psi1);
    if !(c.u1 < c.u2) || c.tied {
        return Ok(());
    }
    let mut signs = Vec::new();
    for k in 1..2000 {
        let eta = c.u1 + (c.u2 - c.u1) * k as f64 / 2000.0;
        let Ok((d, m)) = c.psi_prime_with_scale(eta) else {
            continue;
        };
        if d.abs() > 1e-12 * m && signs.last() != Some(&(d > 0.0)) {
            signs.push(d > 0.0);
        }
    }
    match signs.as_slice() {
        [] | [_] | [true, false] => Ok(()),
        other => Err(format!("sign pattern of psi1' is {other:?}")),
    }
}

pub fn check_determinant(spec: &SpectralData, seed: u64) -> Check {
    let n = spec.n();
    if n < 2 {
        return Ok(());
    }
    let (lo, hi) = (-spec.lambda[1], -spec.lambda[0]);
    if !(lo < hi) || spec.r[0].abs() <= spec.edge_tol() {
        return Ok(());
    }
    let mut r = rng(seed);
    for _ in 0..5 {
        let eta = interior(lo, hi, r.random::<f64>());
        let (lhs, rhs) = reduced_hessian_determinant_check(spec, eta).map_err(|e| e.to_string())?;
        let tol = 1e-8 * rhs.abs();
        if (lhs - rhs).abs() > tol {
            return Err(format!("at {eta}: det B1 {lhs} vs h1 phi1 {rhs}"));
        }
    }
    Ok(())
}

pub fn check_b1_sign(spec: &SpectralData, seed: u64) -> Check {
    let n = spec.n();
    if n < 2 {
        return Ok(());
    }
    let (lo, hi) = (-spec.lambda[1], -spec.lambda[0]);
    if !(lo < hi) || spec.r[0].abs() <= spec.edge_tol() {
        return Ok(());
    }
    let mut r = rng(seed);
    for _ in 0..5 {
        let eta = interior(lo, hi, r.random::<f64>());
        let phi = spec.phi1(eta).unwrap();
        let b1 = reduced_hessian(spec, eta);
        let ev = b1.clone().symmetric_eigenvalues();
        let min = ev.min();
        if min.abs() <= 1e-9 * b1.norm() {
            continue;
        }
        if (min > 0.0) != (phi < 0.0) {
            return Err(format!("at {eta}: lambda_min(B1) {min}, phi1 {phi}"));
        }
    }
    Ok(())
}

pub fn check_pole_limit(spec: &SpectralData) -> Check {
    let c = branch_interval(spec, Branch::Psi1);
    if !c.is_viable() {
        return Ok(());
    }
    let v = psi_eval(&c, c.u2 - 1e-6).map_err(|e| e.to_string())?;
    if v < -1e4 {
        Ok(())
    } else {
        Err(format!("psi1 near the pole is {v}"))
    }
}

/// Psi1 sign of the derivative at a returned root, used by rootfind checks.
pub fn slope_at(c: &lngm::BranchContext<'_>, eta: f64) -> f64 {
    psi_prime_eval(c, eta).unwrap()
}
