//! Problem data and the small amount of dense linear algebra shared by the
//! other modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Equality,
    Inequality,
}

/// `min x'A0x + 2b0'x` subject to `f1(x) = x'A1x + 2b1'x + c1 (= or <=) 0`.
///
/// Both matrices are replaced by their symmetric parts on construction; the
/// quadratic forms only see the symmetric part, so this loses nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    a0: DMatrix<f64>,
    b0: DVector<f64>,
    a1: DMatrix<f64>,
    b1: DVector<f64>,
    c1: f64,
    kind: ConstraintKind,
}

impl ProblemInstance {
    pub fn new(
        a0: DMatrix<f64>,
        b0: DVector<f64>,
        a1: DMatrix<f64>,
        b1: DVector<f64>,
        c1: f64,
        kind: ConstraintKind,
    ) -> Result<Self> {
        let n = a0.nrows();
        if n == 0 {
            return Err(Error::DimensionMismatch("n must be at least 1".into()));
        }
        if !a0.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "A0 is {}x{}, not square",
                a0.nrows(),
                a0.ncols()
            )));
        }
        if a1.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "A1 is {}x{}, expected {n}x{n}",
                a1.nrows(),
                a1.ncols()
            )));
        }
        if b0.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "b0 has length {}, expected {n}",
                b0.len()
            )));
        }
        if b1.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "b1 has length {}, expected {n}",
                b1.len()
            )));
        }
        check_finite(a0.iter(), "A0")?;
        check_finite(b0.iter(), "b0")?;
        check_finite(a1.iter(), "A1")?;
        check_finite(b1.iter(), "b1")?;
        check_finite(std::iter::once(&c1), "c1")?;
        Ok(Self {
            a0: symmetrize(&a0),
            b0,
            a1: symmetrize(&a1),
            b1,
            c1,
            kind,
        })
    }

    /// Builds an instance from row-major slices.
    pub fn from_rows(
        n: usize,
        a0: &[f64],
        b0: &[f64],
        a1: &[f64],
        b1: &[f64],
        c1: f64,
        kind: ConstraintKind,
    ) -> Result<Self> {
        if a0.len() != n * n || a1.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "matrices must hold {} entries",
                n * n
            )));
        }
        Self::new(
            DMatrix::from_row_slice(n, n, a0),
            DVector::from_column_slice(b0),
            DMatrix::from_row_slice(n, n, a1),
            DVector::from_column_slice(b1),
            c1,
            kind,
        )
    }

    pub fn n(&self) -> usize {
        self.a0.nrows()
    }
    pub fn a0(&self) -> &DMatrix<f64> {
        &self.a0
    }
    pub fn b0(&self) -> &DVector<f64> {
        &self.b0
    }
    pub fn a1(&self) -> &DMatrix<f64> {
        &self.a1
    }
    pub fn b1(&self) -> &DVector<f64> {
        &self.b1
    }
    pub fn c1(&self) -> f64 {
        self.c1
    }
    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn with_kind(&self, kind: ConstraintKind) -> Self {
        Self { kind, ..self.clone() }
    }

    /// Multiplies the objective by `s` and the constraint by `t`.
    pub fn scaled(&self, s: f64, t: f64) -> Self {
        Self {
            a0: &self.a0 * s,
            b0: &self.b0 * s,
            a1: &self.a1 * t,
            b1: &self.b1 * t,
            c1: self.c1 * t,
            kind: self.kind,
        }
    }

    /// The same constraint with the objective negated.
    pub fn negated_objective(&self) -> Self {
        Self {
            a0: -&self.a0,
            b0: -&self.b0,
            ..self.clone()
        }
    }

    pub fn f0(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.a0 * x)) + 2.0 * self.b0.dot(x)
    }

    pub fn f1(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.a1 * x)) + 2.0 * self.b1.dot(x) + self.c1
    }

    pub fn grad_f0(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.a0 * x + &self.b0) * 2.0
    }

    pub fn grad_f1(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.a1 * x + &self.b1) * 2.0
    }

    /// `A0 + mu*A1`.
    pub fn lagrangian_hessian(&self, mu: f64) -> DMatrix<f64> {
        &self.a0 + &self.a1 * mu
    }
}

fn check_finite<'a>(mut it: impl Iterator<Item = &'a f64>, what: &'static str) -> Result<()> {
    if it.all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Eigenpairs sorted by ascending eigenvalue.
pub(crate) fn sorted_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::Eigen)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}
