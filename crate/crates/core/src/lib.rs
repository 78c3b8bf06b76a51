//! Multivariate Birkhoff interpolation from directional derivatives of
//! arbitrary order.
//!
//! The sampling design pairs each derivative order `k = 0..=d` with a list of
//! (point, direction) nodes; when the order-`k` list has exactly
//! `dim L_n^k = C(k+n-1, n-1)` entries the scheme is *exact* and the
//! interpolation problem decouples into one homogeneous Vandermonde system
//! per degree. This crate provides:
//!
//! - [`polyspace`]: multi-index bookkeeping, polynomial evaluation and
//!   directional derivatives (exact coefficient expansion, no differencing);
//! - [`vandermonde`]: homogeneous Vandermonde matrices, regularity verdicts
//!   and the planar pairwise-determinant product formula;
//! - [`solver`]: the staged degree-descending solver, the dense full-system
//!   oracle, cardinal bases and grid-based norming-constant estimates;
//! - [`norming`]: Chebyshev–Markov constants, the norming-bound recurrence
//!   and Remez-derived homogeneous norming values;
//! - [`fit`]: minimax (Chebyshev-norm) fitting over arbitrary functional
//!   sets and the noisy-reconstruction experiment.

pub mod fit;
pub mod grid;
pub mod linalg;
pub mod norming;
pub mod polyspace;
pub mod simplex;
pub mod solver;
pub mod vandermonde;

/// Pivot-ratio threshold below which a factorization is reported singular.
///
/// Applied after direction normalization, so the verdict is invariant under
/// rescaling of any direction vector. Callers can tighten it through the
/// `*_with_tol` entry points.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-10;
