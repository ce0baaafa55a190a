//! Brute-force reference for small instances.
//!
//! [`scan_all_kkt`] finds every KKT point by sweeping the multiplier over the
//! whole real line instead of the four bisection intervals, solving the
//! shifted linear system directly at every sample. [`empirical_local_check`]
//! tests local minimality by sampling feasible points near a candidate.
//! Neither uses the secular-function code of the solver.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pencil::{build_transform, detect_joint_definiteness, pull_back, DEFAULT_DEFINITENESS_TOL};
use crate::problem::{sorted_eigen, ConstraintKind, ProblemInstance};
use crate::verifier::{check_strict_lngm, is_global_candidate, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    GlobalMin,
    Lngm,
    OtherStationary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub x: Vec<f64>,
    pub mu: f64,
    /// The shift `eta` at which the point was found; absent for points with
    /// zero multiplier.
    pub eta: Option<f64>,
    pub classification: Classification,
    pub f0_value: f64,
}

impl StationaryPoint {
    pub fn x(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.x)
    }
}

const ROOT_TOL: f64 = 1e-12;

/// Every KKT point of a jointly definite instance, sorted by objective
/// value.
///
/// In normalized coordinates a KKT point with multiplier `mu != 0` is
/// `y = -(A + eta I)^{-1} b` with `eta = sgn/mu` and `g(y) = 0`, so the
/// points are the zeros of `G(eta) = g(y(eta))`. `G` is sampled on every
/// interval between eigenvalue poles and on both tails, each sign change is
/// bisected, and the degenerate points at `eta = -lambda_i` with `r_i = 0`
/// and the point `y = 0` with `mu = 0` are added separately.
pub fn scan_all_kkt(inst: &ProblemInstance, grid_points: usize) -> Result<Vec<StationaryPoint>> {
    let det = detect_joint_definiteness(inst.a0(), inst.a1(), DEFAULT_DEFINITENESS_TOL)?;
    if !det.is_definite() {
        return Err(Error::NotJointlyDefinite);
    }
    let (t, tp) = build_transform(inst, &det)?;
    let n = inst.n();
    let sgn = t.sgn.value();
    let (lambda, vecs) = sorted_eigen(&tp.a)?;
    let a = &tp.a;
    let b = &tp.b;
    let g = |y: &DVector<f64>| y.dot(&(a * y)) + 2.0 * b.dot(y) + tp.c;
    let y_at = |eta: f64| -> Option<DVector<f64>> {
        let m = a + DMatrix::identity(n, n) * eta;
        m.lu().solve(&(-b))
    };
    let big = lambda.iter().fold(1.0f64, |m, l| m.max(l.abs()));
    let pole_gap = 1e-12 * big;

    let mut poles: Vec<f64> = lambda.iter().map(|l| -l).collect();
    poles.sort_by(f64::total_cmp);
    poles.dedup_by(|x, y| (*x - *y).abs() <= pole_gap);

    let intervals = poles.len() + 1;
    let per = (grid_points / intervals).max(64);
    let mut etas: Vec<f64> = Vec::new();
    let first = poles[0];
    let last = poles[poles.len() - 1];
    let span = (last - first).max(1.0);
    let mut segments: Vec<Vec<f64>> = Vec::new();
    // Left tail, compactified through s/(1-s).
    segments.push(
        (1..per)
            .rev()
            .map(|k| {
                let s = k as f64 / per as f64;
                first - span * s / (1.0 - s)
            })
            .collect(),
    );
    for w in poles.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        segments.push(
            (1..per)
                .map(|k| {
                    let s = k as f64 / per as f64;
                    lo + (hi - lo) * 0.5 * (1.0 - (std::f64::consts::PI * s).cos())
                })
                .collect(),
        );
    }
    segments.push(
        (1..per)
            .map(|k| {
                let s = k as f64 / per as f64;
                last + span * s / (1.0 - s)
            })
            .collect(),
    );

    for seg in &segments {
        let vals: Vec<Option<f64>> = seg.iter().map(|&e| y_at(e).map(|y| g(&y))).collect();
        for k in 0..seg.len() {
            let Some(vk) = vals[k] else { continue };
            if vk == 0.0 {
                etas.push(seg[k]);
                continue;
            }
            if k + 1 < seg.len() {
                if let Some(vn) = vals[k + 1] {
                    if vn != 0.0 && (vk > 0.0) != (vn > 0.0) {
                        if let Some(root) = bisect(|e| y_at(e).map(|y| g(&y)), seg[k], seg[k + 1], vk) {
                            etas.push(root);
                        }
                    }
                }
            }
        }
    }

    let mut points: Vec<(DVector<f64>, f64, Option<f64>)> = Vec::new();
    for &eta in &etas {
        if eta.abs() <= ROOT_TOL * big {
            continue;
        }
        if let Some(y) = y_at(eta) {
            points.push((y, sgn / eta, Some(eta)));
        }
    }

    // Degenerate points: eta = -lambda_i with b orthogonal to the eigenspace.
    let b_norm = b.norm().max(1.0);
    let r = vecs.transpose() * b;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && (lambda[j] - lambda[i]).abs() <= pole_gap {
            j += 1;
        }
        let li = lambda[i];
        let cluster_r = (i..j).map(|k| r[k] * r[k]).sum::<f64>().sqrt();
        if cluster_r <= 1e-12 * b_norm && li.abs() > pole_gap {
            let eta = -li;
            let mut yp = DVector::zeros(n);
            for k in (0..n).filter(|k| *k < i || *k >= j) {
                yp -= vecs.column(k) * (r[k] / (lambda[k] + eta));
            }
            let z2 = -g(&yp) / li;
            if z2 >= 0.0 {
                let z = vecs.column(i) * z2.sqrt();
                for s in [1.0, -1.0] {
                    points.push((&yp + &z * s, sgn / eta, Some(eta)));
                    if z2 == 0.0 {
                        break;
                    }
                }
            }
        }
        i = j;
    }

    // Zero y-space multiplier: sgn*y = 0 forces y = 0, a KKT point when it
    // lies on the constraint.
    let feas0 = 1e-12 * (1.0 + tp.c.abs());
    if tp.c.abs() <= feas0 {
        points.push((DVector::zeros(n), 0.0, None));
    }
    // Interior points of an inequality problem have x-space multiplier 0,
    // that is mu_y = -mu1.
    if inst.kind() == ConstraintKind::Inequality {
        if t.mu1 == 0.0 {
            if tp.c < -feas0 {
                points.push((DVector::zeros(n), 0.0, None));
            }
        } else {
            let eta = -sgn / t.mu1;
            if let Some(y) = y_at(eta) {
                if g(&y) < -1e-12 * (1.0 + tp.c.abs()) {
                    points.push((y, -t.mu1, Some(eta)));
                }
            }
        }
    }

    let tol = Tolerances::default();
    let mut out = Vec::new();
    for (y, mu_y, eta) in points {
        let (x, mu) = pull_back(&y, mu_y, &t);
        let mu = if mu_y == -t.mu1 { 0.0 } else { mu };
        if inst.kind() == ConstraintKind::Inequality && mu < 0.0 {
            continue;
        }
        let v = check_strict_lngm(inst, &x, mu, &tol)?;
        let f1 = inst.f1(&x);
        let feasible = match inst.kind() {
            ConstraintKind::Equality => f1.abs() <= v.feasibility_tol,
            ConstraintKind::Inequality => f1 <= v.feasibility_tol && (mu == 0.0 || f1.abs() <= v.feasibility_tol),
        };
        if !feasible || v.stationarity_residual > v.stationarity_tol {
            continue;
        }
        let classification = if is_global_candidate(inst, &x, mu, 1e-9) {
            Classification::GlobalMin
        } else if v.certified() {
            Classification::Lngm
        } else {
            Classification::OtherStationary
        };
        out.push(StationaryPoint {
            f0_value: inst.f0(&x),
            x: x.iter().copied().collect(),
            mu,
            eta,
            classification,
        });
    }
    out.sort_by(|p, q| p.f0_value.total_cmp(&q.f0_value));
    Ok(out)
}

fn bisect(f: impl Fn(f64) -> Option<f64>, mut lo: f64, mut hi: f64, f_lo: f64) -> Option<f64> {
    let lo_pos = f_lo > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ROOT_TOL * (1.0 + mid.abs()) || mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid)?;
        if v == 0.0 {
            return Some(mid);
        }
        if (v > 0.0) == lo_pos {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LocalCheck {
    LooksLocalMin,
    RefutedBy(Vec<f64>),
}

/// Samples feasible points within `radius` of `x` and looks for one with a
/// smaller objective.
///
/// Each sample perturbs `x` in a random direction, then moves along a second
/// random direction to the nearest point of `{f1 = 0}` (for inequality
/// constraints, points with `f1 <= 0` are used as they are). The line search
/// along the second direction solves the quadratic `f1(p + t e) = 0` in
/// closed form. Samples whose projection fails or leaves the ball are
/// skipped; more than 90% skipped is an error.
pub fn empirical_local_check(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    radius: f64,
    samples: usize,
    rng_seed: u64,
) -> Result<LocalCheck> {
    let n = inst.n();
    if x.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "point has length {}, expected {n}",
            x.len()
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {radius} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let f0x = inst.f0(x);
    let slack = 1e-10 * (1.0 + f0x.abs());
    let mut failed = 0usize;
    let unit = |rng: &mut ChaCha8Rng| -> DVector<f64> {
        loop {
            let d = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = d.norm();
            if norm > 0.0 {
                return d / norm;
            }
        }
    };
    for _ in 0..samples {
        let d = unit(&mut rng);
        let step = radius * rng.random_range(0.0f64..1.0).powf(1.0 / n as f64);
        let p = x + d * step;
        let fp = inst.f1(&p);
        let candidate = if inst.kind() == ConstraintKind::Inequality && fp <= 0.0 {
            Some(p)
        } else {
            let e = unit(&mut rng);
            project_along(inst, &p, &e)
        };
        let Some(q) = candidate else {
            failed += 1;
            continue;
        };
        if (&q - x).norm() > radius {
            failed += 1;
            continue;
        }
        if inst.f0(&q) < f0x - slack {
            return Ok(LocalCheck::RefutedBy(q.iter().copied().collect()));
        }
    }
    if samples > 0 && failed * 10 > samples * 9 {
        return Err(Error::Inconclusive { failed, samples });
    }
    Ok(LocalCheck::LooksLocalMin)
}

/// The point `p + t e` with `f1 = 0` and the smallest `|t|`.
fn project_along(inst: &ProblemInstance, p: &DVector<f64>, e: &DVector<f64>) -> Option<DVector<f64>> {
    let qa = e.dot(&(inst.a1() * e));
    let qb = 2.0 * (inst.a1() * p + inst.b1()).dot(e);
    let qc = inst.f1(p);
    let scale = qa.abs() + qb.abs() + qc.abs();
    let t = if qa.abs() <= 1e-14 * scale {
        if qb == 0.0 {
            return None;
        }
        -qc / qb
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let q = -0.5 * (qb + qb.signum() * disc.sqrt());
        let r1 = q / qa;
        let r2 = if q != 0.0 { qc / q } else { r1 };
        if r1.abs() <= r2.abs() {
            r1
        } else {
            r2
        }
    };
    t.is_finite().then(|| p + e * t)
}
