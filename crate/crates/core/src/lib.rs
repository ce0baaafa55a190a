//! Local-nonglobal minimizers of the generalized trust-region subproblem.
//!
//! The problems handled here are
//!
//! ```text
//! (GTR)   min x'A0x + 2b0'x   s.t.  x'A1x + 2b1'x + c1 <= 0
//! (GTRE)  min x'A0x + 2b0'x   s.t.  x'A1x + 2b1'x + c1  = 0
//! ```
//!
//! under the assumption that the pencil `A0 + mu*A1` is definite for some
//! real `mu`. The pipeline is:
//!
//! 1. [`pencil`] finds such a `mu` and a congruence `x = Q'y + q` that turns
//!    the Lagrangian Hessian into `+-I`;
//! 2. [`secular`] diagonalizes the transformed constraint and evaluates the
//!    four secular branches;
//! 3. [`rootfind`] runs the two bisection routines on those branches;
//! 4. [`solver`] assembles candidates, maps them back, and certifies each one
//!    with [`verifier`];
//! 5. [`oracle`] is an independent brute-force cross-check for small `n`.
//!
//! [`instance`] holds the random generator, the regression corpus and the
//! JSON file format; [`cli`] is the command-line frontend.

pub mod cli;
pub mod error;
pub mod instance;
pub mod oracle;
pub mod pencil;
pub mod problem;
pub mod rootfind;
pub mod secular;
pub mod solver;
pub mod verifier;

pub use error::{Error, Result};
pub use pencil::{
    build_transform, detect_joint_definiteness, pull_back, CongruenceTransform, Definiteness, DefinitenessResult, Sign,
    TransformedProblem,
};
pub use problem::{ConstraintKind, ProblemInstance};
pub use rootfind::{bisect_type2, bisect_type3, BisectionOutcome, Terminal};
pub use secular::{branch_interval, spectral_decompose, Branch, BranchContext, SpectralData};
pub use solver::{solve, solve_gtr, solve_gtre, solve_univariate, LngmCertificate, SolveReport};
pub use verifier::{check_strict_lngm, lagrangian_inertia, Inertia, VerificationVerdict};
