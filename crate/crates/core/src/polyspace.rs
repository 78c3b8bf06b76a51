//! Multi-index enumeration, polynomial representation and evaluation,
//! homogeneous components, and directional derivatives of arbitrary order.
//!
//! Derivatives are computed by exact coefficient expansion of `P(v + t u)`
//! (multinomial algebra), never by numerical differencing, so the Euler
//! identity `D^k_u P_k(v) = k! P_k(u)` holds to rounding error.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("ambient dimension must be at least 1")]
    ZeroDimension,
    #[error("combinatorial count overflows the platform word size")]
    Overflow,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degree {k} out of range 0..={d}")]
    DegreeOutOfRange { k: usize, d: usize },
    #[error("multi-index {alpha:?} has total degree above the bound {d}")]
    IndexAboveDegree { alpha: Vec<usize>, d: usize },
    #[error("duplicate multi-index {alpha:?} in coefficient list")]
    DuplicateIndex { alpha: Vec<usize> },
    #[error("order-{order} derivative along the zero direction is undefined")]
    DegenerateNode { order: usize },
}

/// Exponent vector indexing one monomial: `x^alpha = x_1^{a_1} ... x_n^{a_n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(exponents: Vec<usize>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponents(&self) -> &[usize] {
        &self.0
    }

    /// Total degree `|alpha|`.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// The multi-index power `x^alpha`, with the convention `0^0 = 1`.
    pub fn power(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

/// `N_{n,k}`, the dimension of the space of degree-`k` homogeneous
/// polynomials in `n` variables: `C(k+n-1, n-1)`.
pub fn homogeneous_dim(n: usize, k: usize) -> Result<usize, PolyError> {
    if n == 0 {
        return Err(PolyError::ZeroDimension);
    }
    let top = k.checked_add(n - 1).ok_or(PolyError::Overflow)?;
    binomial(top, n - 1)
}

/// Dimension of the full space of polynomials of degree at most `d`:
/// `C(d+n, n)`.
pub fn poly_space_dim(n: usize, d: usize) -> Result<usize, PolyError> {
    if n == 0 {
        return Err(PolyError::ZeroDimension);
    }
    let top = d.checked_add(n).ok_or(PolyError::Overflow)?;
    binomial(top, n)
}

fn binomial(n: usize, r: usize) -> Result<usize, PolyError> {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 1..=r {
        acc = acc
            .checked_mul((n - r + i) as u128)
            .ok_or(PolyError::Overflow)?
            / i as u128;
    }
    usize::try_from(acc).map_err(|_| PolyError::Overflow)
}

/// All multi-indices with `|alpha| = k` in `n` variables, in strict
/// descending lexicographic order (first coordinate most significant).
///
/// This is the column-ordering convention for every matrix in the crate.
pub fn enumerate_multi_indices(n: usize, k: usize) -> Result<Vec<MultiIndex>, PolyError> {
    let count = homogeneous_dim(n, k)?;
    let mut out = Vec::with_capacity(count);
    let mut prefix = Vec::with_capacity(n);
    fill_indices(n, k, &mut prefix, &mut out);
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

fn fill_indices(n: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
    if n == 1 {
        prefix.push(k);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for e in (0..=k).rev() {
        prefix.push(e);
        fill_indices(n - 1, k - e, prefix, out);
        prefix.pop();
    }
}

/// Monomial basis of the degree-`<= d` space: ascending degree, descending
/// lexicographic within each degree. Used as the column order of the dense
/// full-system matrix.
pub fn enumerate_basis(n: usize, d: usize) -> Result<Vec<MultiIndex>, PolyError> {
    let mut out = Vec::with_capacity(poly_space_dim(n, d)?);
    for k in 0..=d {
        out.extend(enumerate_multi_indices(n, k)?);
    }
    Ok(out)
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, i| a * i as f64)
}

fn binomial_f64(n: usize, r: usize) -> f64 {
    let r = r.min(n - r);
    let mut acc = 1.0;
    for i in 1..=r {
        acc = acc * (n - r + i) as f64 / i as f64;
    }
    acc
}

/// Real polynomial of degree at most `d` in `n` variables, stored as a map
/// from multi-indices to coefficients. The zero polynomial is the empty map;
/// setting a coefficient to exactly zero removes the key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRepr", into = "PolynomialRepr")]
pub struct Polynomial {
    n: usize,
    d: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(n: usize, d: usize) -> Result<Self, PolyError> {
        if n == 0 {
            return Err(PolyError::ZeroDimension);
        }
        Ok(Polynomial {
            n,
            d,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn from_coeffs<I>(n: usize, d: usize, coeffs: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut p = Polynomial::zero(n, d)?;
        for (alpha, c) in coeffs {
            if p.coeffs.contains_key(&alpha) {
                return Err(PolyError::DuplicateIndex {
                    alpha: alpha.0.clone(),
                });
            }
            p.set_coeff(alpha, c)?;
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.coeffs.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(a, &c)| (a, c))
    }

    pub fn set_coeff(&mut self, alpha: MultiIndex, c: f64) -> Result<(), PolyError> {
        if alpha.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: alpha.len(),
            });
        }
        if alpha.order() > self.d {
            return Err(PolyError::IndexAboveDegree {
                alpha: alpha.0.clone(),
                d: self.d,
            });
        }
        if c == 0.0 {
            self.coeffs.remove(&alpha);
        } else {
            self.coeffs.insert(alpha, c);
        }
        Ok(())
    }

    /// Builds a polynomial from a coefficient slice aligned with a basis list.
    pub fn from_basis_coeffs(
        n: usize,
        d: usize,
        basis: &[MultiIndex],
        coeffs: &[f64],
    ) -> Result<Self, PolyError> {
        let mut p = Polynomial::zero(n, d)?;
        for (alpha, &c) in basis.iter().zip(coeffs) {
            p.set_coeff(alpha.clone(), c)?;
        }
        Ok(p)
    }

    /// Evaluates `sum a_alpha x^alpha`.
    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        if x.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.coeffs.iter().map(|(a, c)| c * a.power(x)).sum())
    }

    /// The homogeneous component `P_k`: exactly the terms with `|alpha| = k`.
    pub fn homogeneous_component(&self, k: usize) -> Result<Polynomial, PolyError> {
        if k > self.d {
            return Err(PolyError::DegreeOutOfRange { k, d: self.d });
        }
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(a, _)| a.order() == k)
            .map(|(a, &c)| (a.clone(), c))
            .collect();
        Ok(Polynomial {
            n: self.n,
            d: self.d,
            coeffs,
        })
    }

    /// The tail `sum_{l >= k} P_l`, an ordinary polynomial whose coefficients
    /// below degree `k` are absent.
    pub fn tail_from(&self, k: usize) -> Polynomial {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(a, _)| a.order() >= k)
            .map(|(a, &c)| (a.clone(), c))
            .collect();
        Polynomial {
            n: self.n,
            d: self.d,
            coeffs,
        }
    }

    /// Coefficients `c_0..c_d` of the univariate restriction `t -> P(v + t u)`,
    /// by exact multinomial expansion.
    pub fn restrict_to_line(&self, v: &[f64], u: &[f64]) -> Result<Vec<f64>, PolyError> {
        if v.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        if u.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: u.len(),
            });
        }
        let mut out = vec![0.0; self.d + 1];
        let mut acc: Vec<f64> = Vec::with_capacity(self.d + 1);
        let mut factor: Vec<f64> = Vec::with_capacity(self.d + 1);
        for (alpha, &a) in &self.coeffs {
            acc.clear();
            acc.push(1.0);
            for (i, &e) in alpha.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                // (v_i + u_i t)^e by the binomial theorem.
                factor.clear();
                for j in 0..=e {
                    factor
                        .push(binomial_f64(e, j) * v[i].powi((e - j) as i32) * u[i].powi(j as i32));
                }
                acc = convolve(&acc, &factor);
            }
            for (j, c) in acc.iter().enumerate() {
                out[j] += a * c;
            }
        }
        Ok(out)
    }

    /// `D^k_u P(v)`, the k-th derivative of `t -> P(v + t u)` at `t = 0`.
    ///
    /// Order 0 is plain evaluation and ignores the direction entirely.
    pub fn directional_derivative(
        &self,
        v: &[f64],
        u: &[f64],
        k: usize,
    ) -> Result<f64, PolyError> {
        if k == 0 {
            return self.eval(v);
        }
        if u.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: u.len(),
            });
        }
        if u.iter().all(|&c| c == 0.0) {
            return Err(PolyError::DegenerateNode { order: k });
        }
        if k > self.d {
            return Ok(0.0);
        }
        let line = self.restrict_to_line(v, u)?;
        Ok(factorial(k) * line[k])
    }

    /// Coefficientwise difference; degree bound is the max of the operands'.
    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        if self.n != other.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut out = Polynomial::zero(self.n, self.d.max(other.d))?;
        for (a, c) in self.coeffs() {
            out.set_coeff(a.clone(), c)?;
        }
        for (a, c) in other.coeffs() {
            let cur = out.coeff(a);
            out.set_coeff(a.clone(), cur - c)?;
        }
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> Polynomial {
        let mut out = self.clone();
        if factor == 0.0 {
            out.coeffs.clear();
            return out;
        }
        for c in out.coeffs.values_mut() {
            *c *= factor;
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0f64, |a, c| a.max(c.abs()))
    }
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// JSON form: `{"n":2,"d":2,"coeffs":[{"alpha":[2,0],"c":2.0},...]}`.
/// Omitted multi-indices mean zero; a duplicated one is a parse error.
#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    n: usize,
    d: usize,
    coeffs: Vec<CoeffEntry>,
}

#[derive(Serialize, Deserialize)]
struct CoeffEntry {
    alpha: Vec<usize>,
    c: f64,
}

impl TryFrom<PolynomialRepr> for Polynomial {
    type Error = PolyError;

    fn try_from(repr: PolynomialRepr) -> Result<Self, PolyError> {
        Polynomial::from_coeffs(
            repr.n,
            repr.d,
            repr.coeffs
                .into_iter()
                .map(|e| (MultiIndex::new(e.alpha), e.c)),
        )
    }
}

impl From<Polynomial> for PolynomialRepr {
    fn from(p: Polynomial) -> PolynomialRepr {
        let mut entries: Vec<(MultiIndex, f64)> =
            p.coeffs.iter().map(|(a, &c)| (a.clone(), c)).collect();
        // Ascending degree, descending lex within a degree.
        entries.sort_by(|(a, _), (b, _)| a.order().cmp(&b.order()).then_with(|| b.cmp(a)));
        PolynomialRepr {
            n: p.n,
            d: p.d,
            coeffs: entries
                .into_iter()
                .map(|(a, c)| CoeffEntry { alpha: a.0, c })
                .collect(),
        }
    }
}
