//! Minimax (Chebyshev-norm) polynomial fitting over an arbitrary functional
//! set, and the noisy-reconstruction robustness experiment.
//!
//! Given noisy measurements `psi_i` of the functionals `w_i`, the fitter
//! returns `argmin_P max_i |w_i(P) - psi_i|` through the LP of
//! [`crate::simplex`]. With polynomial truth the ideal approximation error
//! `E` is zero and every trial error obeys the `2 N h` robustness bound
//! when the norming estimate and the error are measured on the same grid.

use crate::grid::{generate_grid, GridError};
use crate::linalg::Matrix;
use crate::polyspace::{enumerate_basis, PolyError, Polynomial};
use crate::simplex::{solve_minimax, SimplexError};
use crate::solver::{estimate_norming_constant, Node, Scheme, SolverError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("fit needs at least one functional")]
    EmptyProblem,
    #[error("value count {got} does not match node count {expected}")]
    ValueCount { expected: usize, got: usize },
    #[error("noise amplitude h = {0} must be nonnegative")]
    NegativeNoise(f64),
    #[error("at least one trial is required")]
    ZeroTrials,
    #[error("truth polynomial has degree bound {truth} above the fit degree {degree}")]
    TruthDegree { truth: usize, degree: usize },
    #[error("black-box truth is only measurable through order-0 nodes (node {index} has order {order})")]
    BlackBoxOrder { index: usize, order: usize },
    #[error("scheme is not norming: functional rank {rank} below the space dimension {needed}")]
    SchemeNotNorming { rank: usize, needed: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// A (possibly overdetermined) Chebyshev fitting problem: minimize the worst
/// deviation of `w_i(P)` from `values[i]` over `P` of degree at most `degree`.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub scheme: Scheme,
    pub values: Vec<f64>,
    pub degree: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub polynomial: Polynomial,
    /// `max_i |w_i(P) - psi_i|`, recomputed from the returned polynomial.
    pub achieved_residual: f64,
    pub iterations: usize,
}

/// Functional-by-monomial matrix of the fit: row i is node i's functional
/// applied to the degree-`<= degree` monomial basis (ascending degree,
/// descending lex).
pub fn fit_matrix(scheme: &Scheme, degree: usize) -> Result<Matrix, FitError> {
    let basis = enumerate_basis(scheme.n(), degree)?;
    let mut m = Matrix::zeros(scheme.len(), basis.len());
    for (j, alpha) in basis.iter().enumerate() {
        let mut mono = Polynomial::zero(scheme.n(), degree)?;
        mono.set_coeff(alpha.clone(), 1.0)?;
        for i in 0..scheme.len() {
            m[(i, j)] = scheme.apply_functional(i, &mono)?;
        }
    }
    Ok(m)
}

/// Solves `argmin_P max_i |w_i(P) - psi_i|` by the dense exchange/simplex
/// procedure, with the optimality certificate checked at 1e-8.
pub fn minimax_fit(problem: &FitProblem) -> Result<FitResult, FitError> {
    let scheme = &problem.scheme;
    if scheme.is_empty() {
        return Err(FitError::EmptyProblem);
    }
    if problem.values.len() != scheme.len() {
        return Err(FitError::ValueCount {
            expected: scheme.len(),
            got: problem.values.len(),
        });
    }
    let m = fit_matrix(scheme, problem.degree)?;
    let sol = solve_minimax(&m, &problem.values)?;
    let basis = enumerate_basis(scheme.n(), problem.degree)?;
    let polynomial =
        Polynomial::from_basis_coeffs(scheme.n(), problem.degree, &basis, &sol.coeffs)?;
    let achieved_residual = max_deviation(scheme, &polynomial, &problem.values)?;
    Ok(FitResult {
        polynomial,
        achieved_residual,
        iterations: sol.iterations,
    })
}

fn max_deviation(scheme: &Scheme, p: &Polynomial, values: &[f64]) -> Result<f64, FitError> {
    let applied = scheme.apply_all(p)?;
    Ok(applied
        .iter()
        .zip(values)
        .fold(0.0f64, |a, (w, v)| a.max((w - v).abs())))
}

/// Ground truth for [`robust_experiment`].
pub enum Truth<'a> {
    /// Polynomial truth of degree at most the scheme degree: the ideal
    /// approximation is the truth itself and `E = 0`.
    Polynomial(&'a Polynomial),
    /// Black-box truth, measurable only through order-0 (evaluation) nodes;
    /// the ideal error `E` is estimated by a minimax fit on a grid sample.
    Function(&'a dyn Fn(&[f64]) -> f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    /// RNG stream index of this trial's noise draw.
    pub noise_seed: u64,
    /// Uniform residual achieved by the fitted polynomial on the samples.
    pub residual: f64,
    /// Grid estimate of the output error `||P_hat - P_bar||_G`.
    pub grid_error: f64,
    /// `2 N (E + h)` with the empirical norming estimate `N`.
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustReport {
    pub h: f64,
    pub seed: u64,
    pub grid_size: usize,
    /// Empirical norming estimate used in the bound.
    pub norming_estimate: f64,
    /// Grid estimate of the ideal approximation error; `None` for polynomial
    /// truth (exactly zero), `Some` (an estimate) for black-box truth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_estimate: Option<f64>,
    pub trials: Vec<TrialReport>,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

/// Grid points the black-box ideal approximation is fitted on; the LP grows
/// with the point count, so the estimate uses a capped subgrid.
const BLACK_BOX_FIT_POINTS: usize = 256;

/// Draws `trials` independent noise vectors uniform in `[-h, h]`, refits each
/// noisy sample set, and compares every observed grid error against the
/// `2 N (E + h)` bound. Trial `i` uses RNG stream `i` of the base seed, so
/// serial and parallel runs see identical noise.
pub fn robust_experiment(
    truth: &Truth,
    scheme: &Scheme,
    noise_h: f64,
    trials: usize,
    seed: u64,
    grid_size: usize,
) -> Result<RobustReport, FitError> {
    if noise_h < 0.0 {
        return Err(FitError::NegativeNoise(noise_h));
    }
    if trials == 0 {
        return Err(FitError::ZeroTrials);
    }
    let degree = scheme.d();
    let grid = generate_grid(scheme.domain(), scheme.n(), grid_size, seed)?;
    let norming_estimate = norming_estimate_for(scheme, grid_size, seed)?;

    let (clean, ideal, e_estimate) = match truth {
        Truth::Polynomial(p) => {
            if p.d() > degree {
                return Err(FitError::TruthDegree {
                    truth: p.d(),
                    degree,
                });
            }
            (scheme.apply_all(p)?, (*p).clone(), None)
        }
        Truth::Function(f) => {
            for (index, node) in scheme.nodes().iter().enumerate() {
                if node.order != 0 {
                    return Err(FitError::BlackBoxOrder {
                        index,
                        order: node.order,
                    });
                }
            }
            let clean: Vec<f64> = scheme.nodes().iter().map(|n| f(&n.point)).collect();
            // Ideal approximation estimated on a capped, evenly strided
            // sample of the grid (a lattice prefix would only cover a
            // corner of the domain).
            let stride = grid.len().div_ceil(BLACK_BOX_FIT_POINTS);
            let fit_points: Vec<&Vec<f64>> = grid.iter().step_by(stride.max(1)).collect();
            let ideal_scheme = Scheme::new(
                scheme.n(),
                degree,
                scheme.domain().clone(),
                fit_points
                    .iter()
                    .map(|x| Node::evaluation((*x).clone()))
                    .collect(),
            )?;
            let ideal_values: Vec<f64> = fit_points.iter().map(|x| f(x)).collect();
            let ideal_fit = minimax_fit(&FitProblem {
                scheme: ideal_scheme,
                values: ideal_values,
                degree,
            })?;
            let e = ideal_fit.achieved_residual;
            (clean, ideal_fit.polynomial, Some(e))
        }
    };
    let e = e_estimate.unwrap_or(0.0);

    let mut reports = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let noisy: Vec<f64> = clean
            .iter()
            .map(|v| {
                if noise_h > 0.0 {
                    v + rng.random_range(-noise_h..=noise_h)
                } else {
                    *v
                }
            })
            .collect();
        let fit = minimax_fit(&FitProblem {
            scheme: scheme.clone(),
            values: noisy,
            degree,
        })?;
        let diff = fit.polynomial.sub(&ideal)?;
        let mut grid_error = 0.0f64;
        for x in &grid {
            grid_error = grid_error.max(diff.eval(x)?.abs());
        }
        let bound = 2.0 * norming_estimate * (e + noise_h);
        let ratio = if bound > 0.0 {
            grid_error / bound
        } else if grid_error <= 1e-8 {
            0.0
        } else {
            f64::INFINITY
        };
        reports.push(TrialReport {
            noise_seed: trial as u64,
            residual: fit.achieved_residual,
            grid_error,
            bound,
            ratio,
        });
    }
    let max_ratio = reports.iter().fold(0.0f64, |a, t| a.max(t.ratio));
    let mean_ratio = reports.iter().map(|t| t.ratio).sum::<f64>() / reports.len() as f64;
    Ok(RobustReport {
        h: noise_h,
        seed,
        grid_size,
        norming_estimate,
        e_estimate,
        trials: reports,
        max_ratio,
        mean_ratio,
    })
}

/// Lebesgue norming estimate of the scheme itself when exact; otherwise of a
/// unisolvent functional subset (greedily chosen independent rows of the
/// dense matrix). A subset's constant dominates the full set's, so the
/// resulting `2 N h` bound stays valid for the whole scheme.
fn norming_estimate_for(scheme: &Scheme, grid_size: usize, seed: u64) -> Result<f64, FitError> {
    if scheme.is_exact() {
        return Ok(estimate_norming_constant(
            scheme,
            scheme.domain(),
            grid_size,
            seed,
        )?);
    }
    let m = fit_matrix(scheme, scheme.d())?;
    let p = m.cols();
    let chosen = crate::linalg::pivot_columns(&m.transpose(), 1e-10);
    if chosen.len() < p {
        return Err(FitError::SchemeNotNorming {
            rank: chosen.len(),
            needed: p,
        });
    }
    let sub = Matrix::from_rows(chosen.iter().map(|&i| m.row(i).to_vec()).collect())
        .map_err(SolverError::from)?;
    let lu = crate::linalg::lu_factor(&sub).map_err(SolverError::from)?;
    let basis = enumerate_basis(scheme.n(), scheme.d())?;
    let cardinals: Vec<Polynomial> = (0..p)
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            let coeffs = lu.solve(&e, 1e-12).map_err(SolverError::from)?;
            Ok(Polynomial::from_basis_coeffs(
                scheme.n(),
                scheme.d(),
                &basis,
                &coeffs,
            )?)
        })
        .collect::<Result<_, FitError>>()?;
    let grid = generate_grid(scheme.domain(), scheme.n(), grid_size, seed)?;
    let mut best = 0.0f64;
    for x in &grid {
        let mut s = 0.0;
        for l in &cardinals {
            s += l.eval(x)?.abs();
        }
        best = best.max(s);
    }
    Ok(best)
}

/// Internal least-squares cross-check (normal equations); the minimax
/// residual can never exceed the least-squares solution's worst deviation.
#[allow(dead_code)]
pub(crate) fn least_squares_max_deviation(
    m: &Matrix,
    values: &[f64],
) -> Result<f64, FitError> {
    let mt = m.transpose();
    let gram = mt.matmul(m).map_err(SolverError::from)?;
    let rhs = mt.mul_vec(values).map_err(SolverError::from)?;
    let lu = crate::linalg::lu_factor(&gram).map_err(SolverError::from)?;
    let coeffs = lu.solve(&rhs, 1e-14).map_err(SolverError::from)?;
    let fitted = m.mul_vec(&coeffs).map_err(SolverError::from)?;
    Ok(fitted
        .iter()
        .zip(values)
        .fold(0.0f64, |a, (f, v)| a.max((f - v).abs())))
}
