//! Small dense two-phase simplex, specialized to the Chebyshev-fit LP
//!
//! ```text
//! minimize t   subject to   -t <= (M c - psi)_i <= t
//! ```
//!
//! Free coefficients are split into positive parts, every row gets a slack,
//! and rows with negative right-hand sides get a phase-1 artificial. Bland's
//! rule keeps the pivoting deterministic and cycle-free; problem sizes here
//! are at most a few hundred constraints, so no factorization updates are
//! needed.

use crate::linalg::Matrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimplexError {
    #[error("constraint system is infeasible (phase-1 optimum {0:.3e} > 0)")]
    Infeasible(f64),
    #[error("objective unbounded below")]
    Unbounded,
    #[error("iteration limit {0} exceeded")]
    IterationLimit(usize),
    #[error("optimality certificate failed: reduced cost {0:.3e} below tolerance")]
    Certificate(f64),
    #[error("matrix rows {rows} do not match target count {targets}")]
    ShapeMismatch { rows: usize, targets: usize },
}

#[derive(Debug, Clone)]
pub struct MinimaxSolution {
    /// The minimizing coefficient vector `c`.
    pub coeffs: Vec<f64>,
    /// The optimal uniform residual `t = max_i |(M c - psi)_i|`.
    pub value: f64,
    pub iterations: usize,
}

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-9;
const CERT_TOL: f64 = 1e-8;
const MAX_ITER: usize = 200_000;

/// Minimizes `max_i |(M c - psi)_i|` over all coefficient vectors `c`.
///
/// Always feasible (c = 0, t = max |psi|) and bounded below by t >= 0, so
/// any failure is an internal error rather than a property of the input.
pub fn solve_minimax(m: &Matrix, targets: &[f64]) -> Result<MinimaxSolution, SimplexError> {
    if m.rows() != targets.len() {
        return Err(SimplexError::ShapeMismatch {
            rows: m.rows(),
            targets: targets.len(),
        });
    }
    let p = m.cols();
    let ncon = 2 * m.rows();

    // Column equilibration of the structural block.
    let col_scale: Vec<f64> = (0..p)
        .map(|j| {
            let s = (0..m.rows()).fold(0.0f64, |a, i| a.max(m[(i, j)].abs()));
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();

    // Columns: c+ (p), c- (p), t, slacks (ncon), artificials (appended).
    let t_col = 2 * p;
    let nstruct = 2 * p + 1;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(ncon);
    let mut rhs: Vec<f64> = Vec::with_capacity(ncon);
    for sign in [1.0f64, -1.0] {
        for i in 0..m.rows() {
            let mut row = vec![0.0; nstruct + ncon];
            for j in 0..p {
                let a = sign * m[(i, j)] / col_scale[j];
                row[j] = a;
                row[p + j] = -a;
            }
            row[t_col] = -1.0;
            row[nstruct + rows.len()] = 1.0; // slack
            rows.push(row);
            rhs.push(sign * targets[i]);
        }
    }

    // Flip rows with negative rhs; those slacks turn -1 and need artificials.
    let mut artificial_of_row: Vec<Option<usize>> = vec![None; ncon];
    let mut nart = 0;
    for r in 0..ncon {
        if rhs[r] < 0.0 {
            for x in rows[r].iter_mut() {
                *x = -*x;
            }
            rhs[r] = -rhs[r];
            artificial_of_row[r] = Some(nart);
            nart += 1;
        }
    }
    let nvars = nstruct + ncon + nart;
    let art_start = nstruct + ncon;
    let mut tab: Vec<Vec<f64>> = rows
        .into_iter()
        .enumerate()
        .map(|(r, mut row)| {
            row.resize(nvars, 0.0);
            if let Some(a) = artificial_of_row[r] {
                row[art_start + a] = 1.0;
            }
            row
        })
        .collect();
    let mut basis: Vec<usize> = (0..ncon)
        .map(|r| match artificial_of_row[r] {
            Some(a) => art_start + a,
            None => nstruct + r,
        })
        .collect();

    let mut iterations = 0;

    // Phase 1: drive the artificial sum to zero.
    if nart > 0 {
        let mut cost = vec![0.0; nvars];
        for c in cost.iter_mut().skip(art_start) {
            *c = 1.0;
        }
        let phase1 = run_simplex(
            &mut tab,
            &mut rhs,
            &mut basis,
            &cost,
            nvars,
            &mut iterations,
        )?;
        if phase1 > 1e-8 {
            return Err(SimplexError::Infeasible(phase1));
        }
        drop_artificials(&mut tab, &mut rhs, &mut basis, art_start);
    }

    // Phase 2: minimize t. Artificial columns are gone from consideration:
    // truncate them so they can never re-enter.
    for row in tab.iter_mut() {
        row.truncate(art_start);
    }
    let mut cost = vec![0.0; art_start];
    cost[t_col] = 1.0;
    let value = run_simplex(
        &mut tab,
        &mut rhs,
        &mut basis,
        &cost,
        art_start,
        &mut iterations,
    )?;

    let mut x = vec![0.0; art_start];
    for (r, &b) in basis.iter().enumerate() {
        x[b] = rhs[r];
    }
    let coeffs: Vec<f64> = (0..p)
        .map(|j| (x[j] - x[p + j]) / col_scale[j])
        .collect();
    Ok(MinimaxSolution {
        coeffs,
        value,
        iterations,
    })
}

/// Runs Bland-rule simplex to optimality for `min cost . x`; returns the
/// optimal objective value. The final sweep re-checks dual feasibility of
/// every column at the certification tolerance.
fn run_simplex(
    tab: &mut [Vec<f64>],
    rhs: &mut [f64],
    basis: &mut [usize],
    cost: &[f64],
    nvars: usize,
    iterations: &mut usize,
) -> Result<f64, SimplexError> {
    // Reduced-cost row z_j = c_j - c_B B^-1 A_j.
    let mut z = cost.to_vec();
    for (r, &b) in basis.iter().enumerate() {
        let cb = cost[b];
        if cb != 0.0 {
            for j in 0..nvars {
                z[j] -= cb * tab[r][j];
            }
        }
    }

    loop {
        // Bland: smallest improving column.
        let entering = (0..nvars).find(|&j| z[j] < -COST_EPS);
        let Some(j) = entering else {
            // Optimal. Certify dual feasibility at the reporting tolerance.
            if let Some(&bad) = z.iter().find(|&&r| r < -CERT_TOL) {
                return Err(SimplexError::Certificate(bad));
            }
            let obj = basis
                .iter()
                .enumerate()
                .map(|(r, &b)| cost[b] * rhs[r])
                .sum();
            return Ok(obj);
        };

        *iterations += 1;
        if *iterations > MAX_ITER {
            return Err(SimplexError::IterationLimit(MAX_ITER));
        }

        // Ratio test; ties broken by smallest basic variable index (Bland).
        let mut leave: Option<(usize, f64)> = None;
        for (r, row) in tab.iter().enumerate() {
            let a = row[j];
            if a > PIVOT_EPS {
                let ratio = rhs[r] / a;
                let better = match leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio - 1e-12
                            || (ratio <= lratio + 1e-12 && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            return Err(SimplexError::Unbounded);
        };

        pivot(tab, rhs, &mut z, r, j);
        basis[r] = j;
    }
}

fn pivot(tab: &mut [Vec<f64>], rhs: &mut [f64], z: &mut [f64], r: usize, j: usize) {
    let piv = tab[r][j];
    for x in tab[r].iter_mut() {
        *x /= piv;
    }
    rhs[r] /= piv;
    let prow = tab[r].clone();
    let prhs = rhs[r];
    for (i, row) in tab.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[j];
        if f == 0.0 {
            continue;
        }
        for (x, p) in row.iter_mut().zip(&prow) {
            *x -= f * p;
        }
        rhs[i] -= f * prhs;
    }
    let f = z[j];
    if f != 0.0 {
        for (zc, p) in z.iter_mut().zip(&prow) {
            *zc -= f * p;
        }
    }
}

/// After phase 1: pivot every basic artificial (value 0) onto some real
/// column, or delete its row as redundant.
fn drop_artificials(
    tab: &mut Vec<Vec<f64>>,
    rhs: &mut Vec<f64>,
    basis: &mut Vec<usize>,
    art_start: usize,
) {
    let mut r = 0;
    while r < tab.len() {
        if basis[r] < art_start {
            r += 1;
            continue;
        }
        let col = (0..art_start).find(|&c| tab[r][c].abs() > PIVOT_EPS);
        match col {
            Some(c) => {
                // Degenerate pivot: rhs[r] is zero, feasibility is kept.
                let piv = tab[r][c];
                for x in tab[r].iter_mut() {
                    *x /= piv;
                }
                rhs[r] /= piv;
                let prow = tab[r].clone();
                let prhs = rhs[r];
                for (i, row) in tab.iter_mut().enumerate() {
                    if i == r {
                        continue;
                    }
                    let f = row[c];
                    if f == 0.0 {
                        continue;
                    }
                    for (x, p) in row.iter_mut().zip(&prow) {
                        *x -= f * p;
                    }
                    rhs[i] -= f * prhs;
                }
                basis[r] = c;
                r += 1;
            }
            None => {
                tab.swap_remove(r);
                rhs.swap_remove(r);
                basis.swap_remove(r);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn constant_fit_is_the_midrange() {
        let m = mat(&[&[1.0], &[1.0], &[1.0]]);
        let sol = solve_minimax(&m, &[0.0, 1.0, 0.2]).unwrap();
        assert!((sol.coeffs[0] - 0.5).abs() < 1e-9, "{:?}", sol.coeffs);
        assert!((sol.value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn square_nonsingular_system_fits_exactly() {
        let m = mat(&[&[1.0, 0.0], &[1.0, 1.0]]);
        let sol = solve_minimax(&m, &[2.0, -1.0]).unwrap();
        assert!(sol.value < 1e-9);
        assert!((sol.coeffs[0] - 2.0).abs() < 1e-8);
        assert!((sol.coeffs[1] + 3.0).abs() < 1e-8);
    }

    #[test]
    fn line_through_three_points_balances_residuals() {
        // Fit a + b x to (0,0), (1,1), (2,0): optimum residual 0.5 with the
        // classic alternating sign pattern.
        let m = mat(&[&[1.0, 0.0], &[1.0, 1.0], &[1.0, 2.0]]);
        let sol = solve_minimax(&m, &[0.0, 1.0, 0.0]).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-9, "value {}", sol.value);
        let fitted: Vec<f64> = (0..3)
            .map(|i| sol.coeffs[0] + sol.coeffs[1] * i as f64)
            .collect();
        let residuals: Vec<f64> = fitted
            .iter()
            .zip([0.0, 1.0, 0.0])
            .map(|(f, y)| f - y)
            .collect();
        for r in &residuals {
            assert!(r.abs() <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn zero_targets_need_zero_coefficients() {
        let m = mat(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let sol = solve_minimax(&m, &[0.0, 0.0, 0.0]).unwrap();
        assert!(sol.value < 1e-12);
        for c in &sol.coeffs {
            assert!(c.abs() < 1e-9);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let m = mat(&[&[1.0]]);
        assert!(matches!(
            solve_minimax(&m, &[1.0, 2.0]),
            Err(SimplexError::ShapeMismatch { .. })
        ));
    }
}
