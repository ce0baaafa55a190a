//! Random instances, the curated example corpus, and the JSON file format.
//!
//! ```json
//! {"n": 2, "A0": [[1, 0], [0, 1]], "b0": [0, 0],
//!  "A1": [[-4, 0], [0, 1]], "b1": [1, 8], "c1": 45, "kind": "equality"}
//! ```
//!
//! Field order is irrelevant and unknown fields are rejected. Numbers are
//! written in shortest round-trip form, so reading a written file gives back
//! bit-identical values.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pencil::{Sign, TransformedProblem};
use crate::problem::{symmetrize, ConstraintKind, ProblemInstance};
use crate::secular::{branch_interval, spectral_decompose, Branch, SpectralData};

const MAX_ATTEMPTS: usize = 100;
/// The psi3 target needs at most one negative eigenvalue, which uniform
/// draws rarely give beyond `n = 5`.
const MAX_ATTEMPTS_PSI3: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n: usize,
    pub seed: u64,
    pub entry_range: (f64, f64),
    /// `Psi1` builds a constraint whose psi1 branch has a root; `Psi3` does
    /// the same for psi3, for use with the objective `-||y||^2`. The psi3
    /// target is only practical for `n <= 5`.
    pub target_branch: Branch,
    /// Position of the anchor inside the psi1 interval.
    pub anchor_fraction: f64,
}

impl GeneratorConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            entry_range: (-100.0, 100.0),
            target_branch: Branch::Psi1,
            anchor_fraction: 0.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "generator needs n >= 2, got {}",
                self.n
            )));
        }
        let (lo, hi) = self.entry_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!("bad entry range ({lo}, {hi})")));
        }
        if !(self.anchor_fraction > 0.0 && self.anchor_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "anchor fraction {} is not in (0, 1)",
                self.anchor_fraction
            )));
        }
        if !matches!(self.target_branch, Branch::Psi1 | Branch::Psi3) {
            return Err(Error::InvalidArgument("target branch must be psi1 or psi3".into()));
        }
        Ok(())
    }
}

/// A normalized instance with identity objective Hessian (`A0 = I` for the
/// psi1 target, `A0 = -I` for psi3) whose constraint is built so that the
/// targeted branch has a root certifying a local-nonglobal minimizer.
pub fn generate_random(cfg: &GeneratorConfig) -> Result<ProblemInstance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let psi3 = cfg.target_branch == Branch::Psi3;
    let budget = if psi3 { MAX_ATTEMPTS_PSI3 } else { MAX_ATTEMPTS };
    let symmetric_range = cfg.entry_range.0 == -cfg.entry_range.1;
    for attempt in 0..budget {
        rng.set_stream(attempt as u64);
        let (a, b) = draw(&mut rng, cfg);
        let mut tp = TransformedProblem {
            a,
            b,
            c: 0.0,
            sgn: Sign::Plus,
        };
        let mut spec = spectral_decompose(&tp)?;
        if psi3 && symmetric_range && cfg.n >= 2 && spec.lambda[1] <= 0.0 {
            // (-M, -b) is an equally likely draw.
            tp.a = -tp.a;
            tp.b = -tp.b;
            spec = spectral_decompose(&tp)?;
        }
        let c = if psi3 {
            psi3_constant(&spec)
        } else {
            psi1_constant(&spec, cfg.anchor_fraction)
        };
        let Some(c) = c else { continue };
        let sign = if psi3 { -1.0 } else { 1.0 };
        let n = cfg.n;
        return ProblemInstance::new(
            DMatrix::identity(n, n) * sign,
            DVector::zeros(n),
            tp.a,
            tp.b,
            c,
            ConstraintKind::Equality,
        );
    }
    Err(Error::GenerationBudget { attempts: budget })
}

fn draw(rng: &mut ChaCha8Rng, cfg: &GeneratorConfig) -> (DMatrix<f64>, DVector<f64>) {
    let (lo, hi) = cfg.entry_range;
    let n = cfg.n;
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(lo..hi));
    let b = DVector::from_fn(n, |_, _| rng.random_range(lo..hi));
    (symmetrize(&m), b)
}

fn edge_ok(spec: &SpectralData, r: f64) -> bool {
    r.abs() > 1e-6 * spec.b_norm()
}

/// `c` with `psi1(anchor) = 1`, or `None` if the draw must be rejected.
fn psi1_constant(spec: &SpectralData, fraction: f64) -> Option<f64> {
    let l = &spec.lambda;
    if !(l[0] < l[1].min(0.0)) || !edge_ok(spec, spec.r[0]) {
        return None;
    }
    let ctx = branch_interval(spec, Branch::Psi1);
    if !ctx.is_viable() {
        return None;
    }
    let anchor = ctx.u1 + fraction * (ctx.u2 - ctx.u1);
    let base = spec.psi1(anchor).ok()? - spec.c;
    Some(1.0 - base)
}

/// `c` with `psi3 = -1` at its minimum on the psi3 interval, or `None` if
/// the draw must be rejected. psi3 is convex-shaped there (its derivative
/// `2 eta phi1(-eta)` changes sign once), so the left root has negative
/// slope.
fn psi3_constant(spec: &SpectralData) -> Option<f64> {
    if spec.n() < 2 || !edge_ok(spec, spec.r[0]) {
        return None;
    }
    let ctx = branch_interval(spec, Branch::Psi3);
    if !ctx.is_viable() {
        return None;
    }
    // phi1(-eta) increases from -inf to +inf between the poles (or from
    // below zero when the interval starts at 0); find its zero. A refused
    // evaluation sits next to one of the poles, which fixes its sign.
    let (mut lo, mut hi) = (ctx.u1, ctx.u2);
    let phi = |eta: f64| spec.phi1(-eta);
    if ctx.u1 == 0.0 && spec.lambda[0] < 0.0 && phi(0.0).ok()? >= 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match phi(mid) {
            Ok(v) if v < 0.0 => lo = mid,
            Ok(_) => hi = mid,
            Err(_) if mid - ctx.u1 < ctx.u2 - mid => lo = mid,
            Err(_) => hi = mid,
        }
    }
    let eta_min = 0.5 * (lo + hi);
    let base = spec.psi1(-eta_min).ok()? - spec.c;
    let c = -1.0 - base;
    if spec.lambda[0] < 0.0 {
        let at_zero = spec.psi1(0.0).ok()? - spec.c + c;
        if at_zero <= 0.0 {
            return None;
        }
    }
    Some(c)
}

/// Maps a normalized instance to general coordinates through a random
/// congruence `y = L'(x - q)` and adds `-mu1 * f1` to the objective, so the
/// pencil is no longer trivially definite at `mu = 0`. Local-nonglobal
/// minimizers correspond one to one, with multipliers shifted by `mu1`.
pub fn scramble(inst: &ProblemInstance, seed: u64, mu1: f64) -> Result<ProblemInstance> {
    let n = inst.n();
    let a0 = inst.a0();
    let sgn = if a0[(0, 0)] < 0.0 { -1.0 } else { 1.0 };
    if (a0 - DMatrix::identity(n, n) * sgn).amax() > 0.0 || inst.b0().amax() > 0.0 {
        return Err(Error::InvalidArgument("scramble expects A0 = +-I and b0 = 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            rng.random_range(0.5..2.0)
        } else if i > j {
            rng.random_range(-0.5..0.5)
        } else {
            0.0
        }
    });
    let q = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let a = inst.a1();
    let a1 = symmetrize(&(&l * a * l.transpose()));
    let lb = &l * inst.b1();
    let a1q = &a1 * &q;
    let b1 = &lb - &a1q;
    let c1 = q.dot(&a1q) - 2.0 * lb.dot(&q) + inst.c1();
    let llt = symmetrize(&(&l * l.transpose()));
    let a0 = &llt * sgn - &a1 * mu1;
    let b0 = -(&llt * &q) * sgn - &b1 * mu1;
    ProblemInstance::new(a0, b0, a1, b1, c1, inst.kind())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExpectedStatus {
    Solved,
    NotJointlyDefinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Applicability {
    /// Solved end to end.
    Solver,
    /// Exercises the definiteness test only.
    DetectionOnly,
    /// A point to be checked by the verifier; the pencil is not definite.
    VerifierOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expected {
    pub status: ExpectedStatus,
    pub lngm_count: Option<usize>,
    pub multipliers: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Secular roots, in the same order as `multipliers`.
    pub etas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub description: &'static str,
    #[serde(skip)]
    pub instance: ProblemInstance,
    pub applicability: Applicability,
    pub expected: Expected,
}

fn entry(
    name: &'static str,
    description: &'static str,
    instance: ProblemInstance,
    applicability: Applicability,
    expected: Expected,
) -> CorpusEntry {
    CorpusEntry {
        name,
        description,
        instance,
        applicability,
        expected,
    }
}

fn solved(count: usize, multipliers: &[f64], points: &[&[f64]], etas: &[f64]) -> Expected {
    Expected {
        status: ExpectedStatus::Solved,
        lngm_count: Some(count),
        multipliers: multipliers.to_vec(),
        points: points.iter().map(|p| p.to_vec()).collect(),
        etas: etas.to_vec(),
    }
}

fn not_definite(points: &[&[f64]], multipliers: &[f64]) -> Expected {
    Expected {
        status: ExpectedStatus::NotJointlyDefinite,
        lngm_count: None,
        multipliers: multipliers.to_vec(),
        points: points.iter().map(|p| p.to_vec()).collect(),
        etas: Vec::new(),
    }
}

fn build(n: usize, a0: &[f64], b0: &[f64], a1: &[f64], b1: &[f64], c1: f64, kind: ConstraintKind) -> ProblemInstance {
    ProblemInstance::from_rows(n, a0, b0, a1, b1, c1, kind).expect("corpus data is well formed")
}

/// The worked examples and counterexamples, with their known outcomes.
pub fn corpus() -> Vec<CorpusEntry> {
    use ConstraintKind::{Equality as Eq, Inequality as Ineq};
    let i2 = [1.0, 0.0, 0.0, 1.0];
    let neg_i2 = [-1.0, 0.0, 0.0, -1.0];
    let hyper = [-4.0, 0.0, 0.0, 1.0];
    let hb = [1.0, 8.0];
    vec![
        entry(
            "remark-2.1",
            "min x1^2 - x2^2 s.t. -x1 + x2 <= 0; linear constraint, indefinite objective",
            build(2, &[1.0, 0.0, 0.0, -1.0], &[0.0, 0.0], &[0.0; 4], &[-0.5, 0.5], 0.0, Ineq),
            Applicability::DetectionOnly,
            not_definite(&[&[1.0, 1.0]], &[]),
        ),
        entry(
            "remark-2.2",
            "min x1^2 - 2x1 - x2^2 s.t. x1 x2 = 0; local-nonglobal minimizer (1, 0) with zero multiplier",
            build(2, &[1.0, 0.0, 0.0, -1.0], &[-1.0, 0.0], &[0.0, 0.5, 0.5, 0.0], &[0.0, 0.0], 0.0, Eq),
            Applicability::DetectionOnly,
            not_definite(&[&[1.0, 0.0]], &[0.0]),
        ),
        entry(
            "remark-2.3",
            "min x1 x2 - x2^2 s.t. -x1 x2 = 0; a continuum of nonstrict minimizers (a, 0)",
            build(2, &[0.0, 0.5, 0.5, -1.0], &[0.0, 0.0], &[0.0, -0.5, -0.5, 0.0], &[0.0, 0.0], 0.0, Eq),
            Applicability::DetectionOnly,
            not_definite(&[&[1.0, 0.0]], &[1.0]),
        ),
        entry(
            "problem-2.12",
            "min 2x1x2 - 2x2x3 + x3^2 - 2x1 s.t. 2x2x3 + 2x1 = 0; the origin is a KKT point with mu = 1 that is not a local minimizer",
            build(
                3,
                &[0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, -1.0, 1.0],
                &[-1.0, 0.0, 0.0],
                &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
                &[1.0, 0.0, 0.0],
                0.0,
                Eq,
            ),
            Applicability::VerifierOnly,
            not_definite(&[&[0.0, 0.0, 0.0]], &[1.0]),
        ),
        entry(
            "martinez-1d",
            "min x(1 - x) s.t. x - 1 <= 0; strict local-nonglobal minimizer at x = 1",
            build(1, &[-1.0], &[0.5], &[0.0], &[0.5], -1.0, Ineq),
            Applicability::Solver,
            solved(1, &[1.0], &[&[1.0]], &[]),
        ),
        entry(
            "martinez-1d-eq",
            "min x(1 - x) s.t. x - 1 = 0; the only feasible point is global",
            build(1, &[-1.0], &[0.5], &[0.0], &[0.5], -1.0, Eq),
            Applicability::Solver,
            solved(0, &[], &[], &[]),
        ),
        entry(
            "remark-3.3",
            "min -y^2 s.t. y(y - 1) = 0; local-nonglobal minimizer y = 0 with zero multiplier",
            build(1, &[-1.0], &[0.0], &[1.0], &[-0.5], 0.0, Eq),
            Applicability::Solver,
            solved(1, &[0.0], &[&[0.0]], &[]),
        ),
        entry(
            "psi-roots-eq",
            "min ||x||^2 s.t. -4x1^2 + x2^2 + 2x1 + 16x2 + 45 = 0",
            build(2, &i2, &[0.0, 0.0], &hyper, &hb, 45.0, Eq),
            Applicability::Solver,
            solved(
                2,
                &[-2.8474, 0.2776],
                &[&[0.2298, -12.3303], &[2.5115, -1.7384]],
                &[0.3512, 3.6018],
            ),
        ),
        entry(
            "psi-roots-gtr",
            "min ||x||^2 - 4 f1(x) s.t. f1(x) = -4x1^2 + x2^2 + 2x1 + 16x2 + 45 <= 0",
            build(2, &[17.0, 0.0, 0.0, -3.0], &[-4.0, -32.0], &hyper, &hb, 45.0, Ineq),
            Applicability::Solver,
            solved(
                2,
                &[1.1526, 4.2776],
                &[&[0.2298, -12.3303], &[2.5115, -1.7384]],
                &[0.3512, 3.6018],
            ),
        ),
        entry(
            "psi-roots-max",
            "min -||x||^2 s.t. -4x1^2 + x2^2 + 2x1 + 16x2 + 45 = 0",
            build(2, &neg_i2, &[0.0, 0.0], &hyper, &hb, 45.0, Eq),
            Applicability::Solver,
            solved(1, &[-0.8454], &[&[0.3550, -3.6648]], &[1.1829]),
        ),
        entry(
            "psi-roots-max-gtr",
            "min -||x||^2 s.t. -4x1^2 + x2^2 + 2x1 + 16x2 + 45 <= 0; the equality candidate has a negative multiplier",
            build(2, &neg_i2, &[0.0, 0.0], &hyper, &hb, 45.0, Ineq),
            Applicability::Solver,
            solved(0, &[], &[], &[]),
        ),
        entry(
            "sphere",
            "min ||x||^2 s.t. ||x||^2 - 1 = 0; every feasible point is global",
            build(2, &i2, &[0.0, 0.0], &i2, &[0.0, 0.0], -1.0, Eq),
            Applicability::Solver,
            solved(0, &[], &[], &[]),
        ),
        entry(
            "ellipse",
            "min ||y||^2 s.t. y1^2 + 4y2^2 - 1 = 0; global minimizers +-(0, 1/2), local maximizers +-(1, 0)",
            build(2, &i2, &[0.0, 0.0], &[1.0, 0.0, 0.0, 4.0], &[0.0, 0.0], -1.0, Eq),
            Applicability::Solver,
            solved(0, &[], &[], &[]),
        ),
        entry(
            "infeasible-1d",
            "min x^2 s.t. x^2 + 1 <= 0; empty feasible set",
            build(1, &[1.0], &[0.0], &[1.0], &[0.0], 1.0, Ineq),
            Applicability::Solver,
            solved(0, &[], &[], &[]),
        ),
    ]
}

pub fn corpus_entry(name: &str) -> Option<CorpusEntry> {
    corpus().into_iter().find(|e| e.name == name)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    #[serde(rename = "A0")]
    a0: Vec<Vec<f64>>,
    b0: Vec<f64>,
    #[serde(rename = "A1")]
    a1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    c1: f64,
    kind: ConstraintKind,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(name: &str, n: usize, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!("{name} is not {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn instance_to_json(inst: &ProblemInstance) -> String {
    let file = InstanceFile {
        n: inst.n(),
        a0: rows(inst.a0()),
        b0: inst.b0().iter().copied().collect(),
        a1: rows(inst.a1()),
        b1: inst.b1().iter().copied().collect(),
        c1: inst.c1(),
        kind: inst.kind(),
    };
    serde_json::to_string_pretty(&file).expect("instance serializes")
}

pub fn instance_from_json(text: &str) -> Result<ProblemInstance> {
    let f: InstanceFile = serde_json::from_str(text)?;
    let n = f.n;
    if n == 0 {
        return Err(Error::DimensionMismatch("n must be at least 1".into()));
    }
    let a0 = matrix("A0", n, &f.a0)?;
    let a1 = matrix("A1", n, &f.a1)?;
    if f.b0.len() != n || f.b1.len() != n {
        return Err(Error::DimensionMismatch(format!("b0 and b1 must have length {n}")));
    }
    ProblemInstance::new(a0, DVector::from_vec(f.b0), a1, DVector::from_vec(f.b1), f.c1, f.kind)
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    instance_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_instance(inst: &ProblemInstance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, instance_to_json(inst) + "\n")?;
    Ok(())
}
