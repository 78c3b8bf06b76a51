//! Deterministic evaluation grids for norming estimates.
//!
//! Balls are filled with a Halton low-discrepancy sequence (rejection into
//! the ball, seed = start offset into the sequence); boxes get a uniform
//! lattice. Both are pure functions of (domain, size, seed), so repeated
//! runs and parallel reductions see byte-identical point sets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid size must be positive")]
    EmptyGrid,
    #[error("invalid domain: {0}")]
    BadDomain(String),
    #[error("ball rejection sampling stalled (dimension too high for {0} points)")]
    RejectionStalled(usize),
}

/// Evaluation domain `G`: a centered ball or an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Ball { radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn unit_ball() -> Self {
        Domain::Ball { radius: 1.0 }
    }

    pub fn unit_interval() -> Self {
        Domain::Box {
            lo: vec![0.0],
            hi: vec![1.0],
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), GridError> {
        match self {
            Domain::Ball { radius } => {
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(GridError::BadDomain(format!("ball radius {radius}")));
                }
            }
            Domain::Box { lo, hi } => {
                if lo.len() != n || hi.len() != n {
                    return Err(GridError::BadDomain(format!(
                        "box bounds have lengths {}/{} but dimension is {n}",
                        lo.len(),
                        hi.len()
                    )));
                }
                for (l, h) in lo.iter().zip(hi) {
                    if !(l.is_finite() && h.is_finite() && l <= h) {
                        return Err(GridError::BadDomain(format!("box bounds [{l}, {h}]")));
                    }
                }
            }
        }
        Ok(())
    }
}

impl Default for Domain {
    fn default() -> Self {
        Domain::unit_ball()
    }
}

/// Radical-inverse of `index` in the given base; the Halton coordinate.
fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(n);
    let mut c = 2u64;
    while primes.len() < n {
        if primes.iter().all(|&p| !c.is_multiple_of(p)) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// Deterministic grid of `grid_size` points covering the domain.
pub fn generate_grid(
    domain: &Domain,
    n: usize,
    grid_size: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, GridError> {
    if grid_size == 0 {
        return Err(GridError::EmptyGrid);
    }
    domain.validate(n)?;
    match domain {
        Domain::Ball { radius } => ball_grid(n, *radius, grid_size, seed),
        Domain::Box { lo, hi } => Ok(box_lattice(lo, hi, grid_size)),
    }
}

fn ball_grid(n: usize, radius: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, GridError> {
    if n == 1 {
        // A 1-D ball is the interval [-r, r]; the lattice includes the
        // endpoints, where interval suprema actually sit.
        return Ok(box_lattice(&[-radius], &[radius], count));
    }
    let primes = first_primes(n);
    let mut out = Vec::with_capacity(count);
    let mut index = seed + 1;
    let budget = 2000u64 * count as u64 + 1000;
    let stop = seed + 1 + budget;
    while out.len() < count {
        if index >= stop {
            return Err(GridError::RejectionStalled(count));
        }
        let x: Vec<f64> = primes.iter().map(|&p| 2.0 * halton(index, p) - 1.0).collect();
        index += 1;
        if x.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            out.push(x.iter().map(|c| c * radius).collect());
        }
    }
    Ok(out)
}

fn box_lattice(lo: &[f64], hi: &[f64], count: usize) -> Vec<Vec<f64>> {
    let n = lo.len();
    // Smallest per-axis count m with m^n >= count.
    let mut m = 1usize;
    while m.checked_pow(n as u32).is_none_or(|t| t < count) {
        m += 1;
    }
    let axes: Vec<Vec<f64>> = (0..n).map(|i| linspace(lo[i], hi[i], m)).collect();
    let total = m.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    let mut odo = vec![0usize; n];
    loop {
        out.push((0..n).map(|i| axes[i][odo[i]]).collect());
        let mut carry = n;
        for i in (0..n).rev() {
            odo[i] += 1;
            if odo[i] < m {
                carry = i;
                break;
            }
            odo[i] = 0;
        }
        if carry == n {
            break;
        }
    }
    out
}

fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..m)
        .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
        .collect()
}
