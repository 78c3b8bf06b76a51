//! Chebyshev–Markov constants, the norming-bound recurrence, and the
//! Remez-derived homogeneous norming values.
//!
//! The bound ladder: with `m_k = T_d^(k)(1)` and `kappa_k = theta_k / k!`,
//!
//! ```text
//! tau_d = kappa_d,    tau_k = kappa_k + (1 + m_k kappa_k) tau_{k+1},
//! ```
//!
//! whose closed form is `tau_k = sum_{l=k}^d kappa_l prod_{j=k}^{l-1}
//! (1 + m_j kappa_j)`; the overall norming constant is bounded by `tau_0`.
//! Both routes are evaluated and compared on every call.

use serde::Serialize;
use thiserror::Error;

use crate::polyspace::factorial;

#[derive(Debug, Error)]
pub enum NormingError {
    #[error("derivative order {k} and degree {d} out of range")]
    OutOfRange { k: usize, d: usize },
    #[error("integer Chebyshev coefficients overflow i128 at degree {d}, order {k}")]
    Overflow { d: usize, k: usize },
    #[error("theta list must have d+1 = {expected} entries, got {got}")]
    ThetaLength { expected: usize, got: usize },
    #[error("theta_{index} = {value} must be positive")]
    NonpositiveTheta { index: usize, value: f64 },
    #[error("recurrence and closed form disagree: {recurrence} vs {closed_form}")]
    IdentityMismatch { recurrence: f64, closed_form: f64 },
    #[error("remez density omega = {0} must lie in (0, 1]")]
    OmegaRange(f64),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("negative input: {name} = {value}")]
    NegativeInput { name: &'static str, value: f64 },
}

/// Integer coefficient array of `T_d` via `T_{j+1} = 2x T_j - T_{j-1}`.
fn chebyshev_coefficients(d: usize) -> Result<Vec<i128>, NormingError> {
    let overflow = |k| NormingError::Overflow { d, k };
    if d == 0 {
        return Ok(vec![1]);
    }
    let mut prev: Vec<i128> = vec![1];
    let mut cur: Vec<i128> = vec![0, 1];
    for _ in 1..d {
        let mut next = vec![0i128; cur.len() + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] = c.checked_mul(2).ok_or_else(|| overflow(0))?;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] = next[i].checked_sub(c).ok_or_else(|| overflow(0))?;
        }
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `m_k = T_d^(k)(1)`: the k-th derivative of the degree-d Chebyshev
/// polynomial at 1, computed by exact integer differentiation of the
/// coefficient array. Returns 0 for `k > d`.
pub fn chebyshev_derivative_at_one(d: usize, k: usize) -> Result<f64, NormingError> {
    if k > d {
        return Ok(0.0);
    }
    let mut coeffs = chebyshev_coefficients(d)?;
    for _ in 0..k {
        coeffs = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c.checked_mul(i as i128).ok_or(NormingError::Overflow { d, k }))
            .collect::<Result<_, _>>()?;
    }
    let mut sum: i128 = 0;
    for &c in &coeffs {
        sum = sum.checked_add(c).ok_or(NormingError::Overflow { d, k })?;
    }
    Ok(sum as f64)
}

/// The full ladder behind the norming bound.
#[derive(Debug, Clone, Serialize)]
pub struct NormingBoundTrace {
    pub d: usize,
    /// Markov constants `m_k = T_d^(k)(1)`, k = 0..=d.
    pub m: Vec<f64>,
    /// Input homogeneous norming constants `theta_k`.
    pub theta: Vec<f64>,
    /// `kappa_k = theta_k / k!`.
    pub kappa: Vec<f64>,
    /// Recurrence values indexed by k (`tau[k]` is `tau_k`; the recurrence
    /// runs from `tau[d]` down to `tau[0]`).
    pub tau: Vec<f64>,
    /// The bound `tau_0` on the norming constant of the assembled scheme.
    pub bound: f64,
}

const IDENTITY_RTOL: f64 = 1e-12;

/// Fills the (m, kappa, tau) ladder for the given `theta_0..theta_d` and
/// returns the norming bound `tau_0`. The recurrence and its closed form are
/// both evaluated and must agree to 1e-12 relative.
pub fn norming_bound(theta: &[f64], d: usize) -> Result<NormingBoundTrace, NormingError> {
    if theta.len() != d + 1 {
        return Err(NormingError::ThetaLength {
            expected: d + 1,
            got: theta.len(),
        });
    }
    for (index, &value) in theta.iter().enumerate() {
        // NaN fails the finiteness check.
        if value <= 0.0 || !value.is_finite() {
            return Err(NormingError::NonpositiveTheta { index, value });
        }
    }
    let m: Vec<f64> = (0..=d)
        .map(|k| chebyshev_derivative_at_one(d, k))
        .collect::<Result<_, _>>()?;
    let kappa: Vec<f64> = theta
        .iter()
        .enumerate()
        .map(|(k, &t)| t / factorial(k))
        .collect();

    let mut tau = vec![0.0; d + 1];
    tau[d] = kappa[d];
    for k in (0..d).rev() {
        tau[k] = kappa[k] + (1.0 + m[k] * kappa[k]) * tau[k + 1];
    }

    // Closed form, independently accumulated.
    let closed = closed_form_tau(&kappa, &m, 0);
    let recurrence = tau[0];
    if (closed - recurrence).abs() > IDENTITY_RTOL * recurrence.abs().max(1.0) {
        return Err(NormingError::IdentityMismatch {
            recurrence,
            closed_form: closed,
        });
    }

    Ok(NormingBoundTrace {
        d,
        m,
        theta: theta.to_vec(),
        kappa,
        tau,
        bound: recurrence,
    })
}

/// `sum_{l=k}^d kappa_l prod_{j=k}^{l-1} (1 + m_j kappa_j)`, the closed form
/// of the recurrence (empty product = 1).
pub fn closed_form_tau(kappa: &[f64], m: &[f64], k: usize) -> f64 {
    let d = kappa.len() - 1;
    let mut sum = 0.0;
    for l in k..=d {
        let mut prod = 1.0;
        for j in k..l {
            prod *= 1.0 + m[j] * kappa[j];
        }
        sum += kappa[l] * prod;
    }
    sum
}

/// The Remez-derived homogeneous norming value: `T_d` at
/// `(1 + (1-omega)^(1/n)) / (1 - (1-omega)^(1/n))`, for a direction set
/// whose metric-entropy density is `omega` (user-supplied scalar).
/// `omega = 1` gives exactly 1.
pub fn remez_theta(omega: f64, n: usize, d: usize) -> Result<f64, NormingError> {
    if n == 0 {
        return Err(NormingError::ZeroDimension);
    }
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(NormingError::OmegaRange(omega));
    }
    let t = (1.0 - omega).powf(1.0 / n as f64);
    let arg = (1.0 + t) / (1.0 - t);
    Ok(chebyshev_at_least_one(d, arg))
}

/// `T_d(x)` for `x >= 1` through the cosh closed form; the monomial form
/// loses digits and overflows for the large arguments small omega produces.
/// Degrees 0 and 1 are returned exactly.
fn chebyshev_at_least_one(d: usize, x: f64) -> f64 {
    match d {
        0 => 1.0,
        1 => x,
        _ => (d as f64 * x.acosh()).cosh(),
    }
}

/// The reconstruction robustness bound `2 N (E + h)`.
pub fn robustness_bound(n_const: f64, e: f64, h: f64) -> Result<f64, NormingError> {
    for (name, value) in [("N", n_const), ("E", e), ("h", h)] {
        if value < 0.0 {
            return Err(NormingError::NegativeInput { name, value });
        }
    }
    Ok(2.0 * n_const * (e + h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Closed-form product oracle: `T_d^(k)(1) = prod_{j=0}^{k-1}
    /// (d^2 - j^2) / (2j + 1)`.
    fn markov_product(d: usize, k: usize) -> f64 {
        let d2 = (d * d) as f64;
        (0..k).fold(1.0, |acc, j| {
            acc * (d2 - (j * j) as f64) / (2 * j + 1) as f64
        })
    }

    #[test]
    fn chebyshev_derivative_samples() {
        for d in 0..=30 {
            assert_eq!(chebyshev_derivative_at_one(d, 0).unwrap(), 1.0);
        }
        // T_3 = 4x^3 - 3x, derivative at 1 is 9 = d^2.
        assert_eq!(chebyshev_derivative_at_one(3, 1).unwrap(), 9.0);
        // T_2 = 2x^2 - 1, second derivative 4.
        assert_eq!(chebyshev_derivative_at_one(2, 2).unwrap(), 4.0);
        assert_eq!(chebyshev_derivative_at_one(3, 7).unwrap(), 0.0);
    }

    #[test]
    fn derivatives_match_product_oracle() {
        for d in 1..=20 {
            for k in 0..=d {
                let got = chebyshev_derivative_at_one(d, k).unwrap();
                let want = markov_product(d, k);
                assert!(
                    (got - want).abs() <= 1e-10 * want.abs().max(1.0),
                    "d={d} k={k}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn markov_first_derivative_is_degree_squared() {
        for d in 1..=30 {
            assert_eq!(chebyshev_derivative_at_one(d, 1).unwrap(), (d * d) as f64);
        }
    }

    #[test]
    fn markov_constants_increase_then_plateau() {
        // m_k is strictly increasing until k = d-1 and m_d = m_{d-1}:
        // the step ratio (d^2 - k^2)/(2k+1) hits exactly 1 at k = d-1.
        for d in 1..=20 {
            let m: Vec<f64> = (0..=d)
                .map(|k| chebyshev_derivative_at_one(d, k).unwrap())
                .collect();
            for k in 0..d.saturating_sub(1) {
                assert!(m[k] < m[k + 1], "d={d}: m_{k} = {} !< {}", m[k], m[k + 1]);
            }
            if d >= 1 {
                assert_eq!(m[d], m[d - 1], "d={d}");
            }
        }
    }

    #[test]
    fn deep_derivative_overflow_is_an_error() {
        assert!(matches!(
            chebyshev_derivative_at_one(34, 34),
            Err(NormingError::Overflow { .. })
        ));
    }

    #[test]
    fn bound_worked_examples() {
        let t = norming_bound(&[2.5], 0).unwrap();
        assert_eq!(t.bound, 2.5);

        // d=1, theta=(1,1): m=(1,1), kappa=(1,1), bound = 1 + 2*1 = 3.
        let t = norming_bound(&[1.0, 1.0], 1).unwrap();
        assert_eq!(t.m, vec![1.0, 1.0]);
        assert_eq!(t.kappa, vec![1.0, 1.0]);
        assert_eq!(t.bound, 3.0);

        // d=2, theta=(1,1,1): m=(1,4,4), kappa=(1,1,0.5),
        // tau_2 = 0.5, tau_1 = 1 + 5*0.5 = 3.5, tau_0 = 1 + 2*3.5 = 8.
        let t = norming_bound(&[1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(t.m, vec![1.0, 4.0, 4.0]);
        assert_eq!(t.kappa, vec![1.0, 1.0, 0.5]);
        assert_eq!(t.tau, vec![8.0, 3.5, 0.5]);
        assert_eq!(t.bound, 8.0);
    }

    #[test]
    fn bound_rejects_nonpositive_theta() {
        assert!(matches!(
            norming_bound(&[1.0, 0.0], 1),
            Err(NormingError::NonpositiveTheta { index: 1, .. })
        ));
        assert!(matches!(
            norming_bound(&[1.0], 2),
            Err(NormingError::ThetaLength { .. })
        ));
    }

    #[test]
    fn recurrence_matches_closed_form_on_random_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..200 {
            let d = rng.random_range(0..=20);
            let theta: Vec<f64> = (0..=d).map(|_| rng.random_range(0.1..10.0)).collect();
            let trace = norming_bound(&theta, d).unwrap();
            // Every tau_k, not just tau_0.
            for k in 0..=d {
                let closed = closed_form_tau(&trace.kappa, &trace.m, k);
                assert!(
                    (closed - trace.tau[k]).abs() <= 1e-12 * trace.tau[k].abs().max(1.0),
                    "d={d} k={k}: {closed} vs {}",
                    trace.tau[k]
                );
            }
            // Ladder sanity.
            assert!(trace.tau.iter().all(|&t| t >= 0.0));
            assert!(trace.bound >= trace.kappa[0]);
        }
    }

    #[test]
    fn remez_theta_samples() {
        assert_eq!(remez_theta(1.0, 1, 5).unwrap(), 1.0);
        assert_eq!(remez_theta(1.0, 3, 12).unwrap(), 1.0);
        // (2 - omega)/omega = 3 at omega = 1/2; T_1(3) = 3 exactly.
        assert_eq!(remez_theta(0.5, 1, 1).unwrap(), 3.0);
        assert!(matches!(
            remez_theta(0.0, 1, 1),
            Err(NormingError::OmegaRange(_))
        ));
        assert!(matches!(
            remez_theta(1.5, 1, 1),
            Err(NormingError::OmegaRange(_))
        ));
        // Diverges as omega -> 0+.
        let big = remez_theta(1e-9, 2, 4).unwrap();
        assert!(big > 1e10);
    }

    #[test]
    fn remez_theta_monotone_in_omega_and_degree() {
        for n in [1usize, 2, 3] {
            let omegas: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
            for d in 1..=20 {
                for w in omegas.windows(2) {
                    let hi = remez_theta(w[0], n, d).unwrap();
                    let lo = remez_theta(w[1], n, d).unwrap();
                    assert!(hi >= lo, "n={n} d={d}: theta({}) < theta({})", w[0], w[1]);
                }
            }
            for &omega in &omegas {
                for d in 1..20 {
                    let a = remez_theta(omega, n, d).unwrap();
                    let b = remez_theta(omega, n, d + 1).unwrap();
                    assert!(b >= a, "omega={omega} n={n}: d={d} not monotone");
                }
            }
        }
    }

    #[test]
    fn robustness_bound_samples() {
        assert!((robustness_bound(2.0, 0.1, 0.05).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(robustness_bound(7.0, 0.0, 0.0).unwrap(), 0.0);
        let once = robustness_bound(3.0, 0.0, 0.2).unwrap();
        let twice = robustness_bound(3.0, 0.0, 0.4).unwrap();
        assert_eq!(twice, 2.0 * once);
        assert!(matches!(
            robustness_bound(-1.0, 0.0, 0.0),
            Err(NormingError::NegativeInput { name: "N", .. })
        ));
    }

    #[test]
    fn trace_serializes_all_ladder_values() {
        let trace = norming_bound(&[1.0, 1.0, 1.0], 2).unwrap();
        let json = serde_json::to_value(&trace).unwrap();
        assert_eq!(json["bound"], 8.0);
        assert_eq!(json["m"].as_array().unwrap().len(), 3);
        assert_eq!(json["tau"][0], 8.0);
    }
}
