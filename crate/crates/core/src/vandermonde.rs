//! Homogeneous Vandermonde matrices `A_{n,k}`, per-degree regularity
//! verdicts, and the planar pairwise-determinant product formula.
//!
//! The verdict for a direction list depends only on the directions, not on
//! their lengths, so directions are normalized to unit length before
//! factorization; the reported determinant is scaled back to the raw
//! directions (row scaling multiplies the determinant by `prod |s_i|^k`).

use crate::linalg::{lu_factor, LinalgError, Matrix};
use crate::polyspace::{enumerate_multi_indices, homogeneous_dim, PolyError};
use crate::solver::Scheme;
use crate::DEFAULT_PIVOT_TOL;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VandermondeError {
    #[error("direction {index} has length {got}, expected dimension {expected}")]
    DirectionDimension {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("direction {index} is the zero vector (degree {k} >= 1)")]
    ZeroDirection { index: usize, k: usize },
    #[error("direction list has {got} entries, the square degree-{k} case needs {expected}")]
    Cardinality {
        k: usize,
        expected: usize,
        got: usize,
    },
    #[error("planar product formula requires n = 2, got n = {0}")]
    NotPlanar(usize),
    #[error("scheme is not exact: orders with wrong node counts: {0:?} (order, got, expected)")]
    SchemeShape(Vec<(usize, usize, usize)>),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The direction list `Z~_k` extracted from the order-`k` nodes of a scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DirectionSetRepr", into = "DirectionSetRepr")]
pub struct DirectionSet {
    n: usize,
    k: usize,
    directions: Vec<Vec<f64>>,
}

impl DirectionSet {
    pub fn new(n: usize, k: usize, directions: Vec<Vec<f64>>) -> Result<Self, VandermondeError> {
        for (i, u) in directions.iter().enumerate() {
            if u.len() != n {
                return Err(VandermondeError::DirectionDimension {
                    index: i,
                    expected: n,
                    got: u.len(),
                });
            }
            if k >= 1 && u.iter().all(|&c| c == 0.0) {
                return Err(VandermondeError::ZeroDirection { index: i, k });
            }
        }
        Ok(DirectionSet { n, k, directions })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    /// Euclidean lengths of the raw directions.
    pub fn norms(&self) -> Vec<f64> {
        self.directions
            .iter()
            .map(|u| u.iter().map(|c| c * c).sum::<f64>().sqrt())
            .collect()
    }

    /// Unit-length copy. Degree 0 is left untouched: the single constant
    /// monomial evaluates to 1 regardless of the direction.
    pub fn normalized(&self) -> DirectionSet {
        if self.k == 0 {
            return self.clone();
        }
        let directions = self
            .directions
            .iter()
            .map(|u| {
                let norm = u.iter().map(|c| c * c).sum::<f64>().sqrt();
                u.iter().map(|c| c / norm).collect()
            })
            .collect();
        DirectionSet {
            n: self.n,
            k: self.k,
            directions,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DirectionSetRepr {
    n: usize,
    k: usize,
    directions: Vec<Vec<f64>>,
}

impl TryFrom<DirectionSetRepr> for DirectionSet {
    type Error = VandermondeError;
    fn try_from(r: DirectionSetRepr) -> Result<Self, VandermondeError> {
        DirectionSet::new(r.n, r.k, r.directions)
    }
}

impl From<DirectionSet> for DirectionSetRepr {
    fn from(ds: DirectionSet) -> Self {
        DirectionSetRepr {
            n: ds.n,
            k: ds.k,
            directions: ds.directions,
        }
    }
}

/// `[A_{n,k}]_{i,j} = s_i^{alpha_j}`, columns in the descending-lex multi-index
/// order of [`enumerate_multi_indices`]. Requires the square cardinality.
pub fn build_homogeneous_vandermonde(ds: &DirectionSet) -> Result<Matrix, VandermondeError> {
    let expected = homogeneous_dim(ds.n, ds.k)?;
    if ds.len() != expected {
        return Err(VandermondeError::Cardinality {
            k: ds.k,
            expected,
            got: ds.len(),
        });
    }
    let indices = enumerate_multi_indices(ds.n, ds.k)?;
    let mut m = Matrix::zeros(expected, expected);
    for (i, s) in ds.directions.iter().enumerate() {
        for (j, alpha) in indices.iter().enumerate() {
            m[(i, j)] = alpha.power(s);
        }
    }
    Ok(m)
}

/// Determinant verdict for one degree, in sign/log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetResult {
    /// -1, 0 or +1; zero only for an exactly vanishing pivot.
    pub sign: i8,
    /// `ln |det A_{n,k}(Z~_k)|` of the raw (unnormalized) matrix;
    /// `-inf` when the sign is 0.
    pub log_abs: f64,
    /// Pivot ratio of the length-normalized matrix.
    pub conditioning: f64,
    /// True iff the pivot ratio exceeds the threshold.
    pub regular: bool,
}

pub fn vandermonde_determinant(ds: &DirectionSet) -> Result<DetResult, VandermondeError> {
    vandermonde_determinant_with_tol(ds, DEFAULT_PIVOT_TOL)
}

pub fn vandermonde_determinant_with_tol(
    ds: &DirectionSet,
    tol: f64,
) -> Result<DetResult, VandermondeError> {
    let normalized = ds.normalized();
    let matrix = build_homogeneous_vandermonde(&normalized)?;
    let lu = lu_factor(&matrix)?;
    let conditioning = lu.pivot_ratio();
    let sign = lu.det_sign();
    // det(raw) = det(normalized) * prod_i |s_i|^k.
    let scale: f64 = ds.norms().iter().map(|r| r.ln()).sum::<f64>() * ds.k as f64;
    Ok(DetResult {
        sign,
        log_abs: lu.det_log_abs() + scale,
        conditioning,
        regular: conditioning > tol,
    })
}

/// Sign/log value of a product of pairwise 2x2 determinants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarDet {
    pub sign: i8,
    pub log_abs: f64,
}

/// Planar closed form: `det A_{2,k} = prod_{i<j} det[u_i, u_j]`, accumulated
/// in sign/log form over the raw directions. Requires `n = 2` and the square
/// cardinality `k + 1`.
pub fn planar_product_determinant(ds: &DirectionSet) -> Result<PlanarDet, VandermondeError> {
    if ds.n != 2 {
        return Err(VandermondeError::NotPlanar(ds.n));
    }
    let expected = ds.k + 1;
    if ds.len() != expected {
        return Err(VandermondeError::Cardinality {
            k: ds.k,
            expected,
            got: ds.len(),
        });
    }
    let mut sign = 1i8;
    let mut log_abs = 0.0;
    for i in 0..ds.len() {
        for j in (i + 1)..ds.len() {
            let (a, b) = (&ds.directions[i], &ds.directions[j]);
            let det = a[0] * b[1] - a[1] * b[0];
            if det == 0.0 {
                return Ok(PlanarDet {
                    sign: 0,
                    log_abs: f64::NEG_INFINITY,
                });
            }
            if det < 0.0 {
                sign = -sign;
            }
            log_abs += det.abs().ln();
        }
    }
    Ok(PlanarDet { sign, log_abs })
}

/// Agreement of the planar product formula with the factorized determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarCheck {
    pub product_sign: i8,
    /// `ln` of the product magnitude; `None` when the product is zero.
    pub product_log_abs: Option<f64>,
    /// Log magnitudes agree to 1e-8 relative (or both determinants vanish).
    pub log_agrees: bool,
    /// Signs agree. A mismatch is reported as a warning, never a failure:
    /// the lex column order fixes the factorized sign but the product
    /// formula's sign convention is not pinned down.
    pub sign_agrees: bool,
}

/// Per-degree slice of a regularity report.
#[derive(Debug, Clone, Serialize)]
pub struct DegreeReport {
    pub k: usize,
    pub regular: bool,
    /// Pivot ratio of the normalized factorization; 1.0 for the trivial k = 0.
    pub conditioning: f64,
    pub det_sign: i8,
    /// `ln |det|`; `None` when the determinant is exactly zero.
    pub det_log_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planar: Option<PlanarCheck>,
}

/// Verdict of [`check_scheme_regularity`]: the scheme is regular iff every
/// per-degree homogeneous Vandermonde matrix is.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub n: usize,
    pub d: usize,
    pub pivot_tolerance: f64,
    pub regular: bool,
    pub failing_degrees: Vec<usize>,
    pub per_degree: Vec<DegreeReport>,
}

const PLANAR_LOG_RTOL: f64 = 1e-8;

/// Checks an exact scheme degree by degree. Degree 0 is trivially regular
/// (a single evaluation functional); for each k >= 1 the verdict is the
/// nonsingularity of `A_{n,k}(Z~_k)`. In the plane the pairwise product
/// formula is evaluated alongside and cross-checked against the factorized
/// determinant.
pub fn check_scheme_regularity(scheme: &Scheme) -> Result<RegularityReport, VandermondeError> {
    check_scheme_regularity_with_tol(scheme, DEFAULT_PIVOT_TOL)
}

pub fn check_scheme_regularity_with_tol(
    scheme: &Scheme,
    tol: f64,
) -> Result<RegularityReport, VandermondeError> {
    let violations = scheme.exact_shape_violations();
    if !violations.is_empty() {
        return Err(VandermondeError::SchemeShape(violations));
    }
    let mut per_degree = Vec::with_capacity(scheme.d() + 1);
    per_degree.push(DegreeReport {
        k: 0,
        regular: true,
        conditioning: 1.0,
        det_sign: 1,
        det_log_abs: Some(0.0),
        planar: None,
    });
    for k in 1..=scheme.d() {
        let ds = scheme.direction_set(k)?;
        let det = vandermonde_determinant_with_tol(&ds, tol)?;
        let planar = if scheme.n() == 2 {
            let product = planar_product_determinant(&ds)?;
            let log_agrees = if det.sign == 0 || product.sign == 0 {
                det.sign == 0 && product.sign == 0
            } else {
                (product.log_abs - det.log_abs).abs()
                    <= PLANAR_LOG_RTOL * det.log_abs.abs().max(1.0)
            };
            Some(PlanarCheck {
                product_sign: product.sign,
                product_log_abs: product.sign.ne(&0).then_some(product.log_abs),
                log_agrees,
                sign_agrees: product.sign == det.sign,
            })
        } else {
            None
        };
        per_degree.push(DegreeReport {
            k,
            regular: det.regular,
            conditioning: det.conditioning,
            det_sign: det.sign,
            det_log_abs: det.sign.ne(&0).then_some(det.log_abs),
            planar,
        });
    }
    let failing_degrees: Vec<usize> = per_degree
        .iter()
        .filter(|r| !r.regular)
        .map(|r| r.k)
        .collect();
    Ok(RegularityReport {
        n: scheme.n(),
        d: scheme.d(),
        pivot_tolerance: tol,
        regular: failing_degrees.is_empty(),
        failing_degrees,
        per_degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;
    use crate::solver::{Node, Scheme};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ds(n: usize, k: usize, dirs: &[&[f64]]) -> DirectionSet {
        DirectionSet::new(n, k, dirs.iter().map(|d| d.to_vec()).collect()).unwrap()
    }

    #[test]
    fn build_samples() {
        let m = build_homogeneous_vandermonde(&ds(2, 1, &[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(m, Matrix::identity(2));

        let m =
            build_homogeneous_vandermonde(&ds(2, 2, &[&[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]))
                .unwrap();
        assert_eq!(m.row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(m.row(1), &[1.0, 1.0, 1.0]);
        assert_eq!(m.row(2), &[0.0, 0.0, 1.0]);

        let m = build_homogeneous_vandermonde(&ds(1, 3, &[&[2.0]])).unwrap();
        assert_eq!(m.row(0), &[8.0]);

        assert!(matches!(
            build_homogeneous_vandermonde(&ds(2, 2, &[&[1.0, 0.0], &[0.0, 1.0]])),
            Err(VandermondeError::Cardinality { .. })
        ));
    }

    #[test]
    fn determinant_samples() {
        // Repeated direction: equal rows.
        let r = vandermonde_determinant(&ds(2, 2, &[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]))
            .unwrap();
        assert!(!r.regular);
        assert_eq!(r.sign, 0);

        // Direct 3x3 determinant of the raw matrix is 1.
        let r = vandermonde_determinant(&ds(2, 2, &[&[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]))
            .unwrap();
        assert!(r.regular);
        assert_eq!(r.sign, 1);
        assert!(r.log_abs.abs() < 1e-12, "log|det| = {}", r.log_abs);

        // Proportional directions are singular at k = 1.
        let r = vandermonde_determinant(&ds(2, 1, &[&[1.0, 0.0], &[2.0, 0.0]])).unwrap();
        assert!(!r.regular);

        assert!(matches!(
            DirectionSet::new(2, 1, vec![vec![0.0, 0.0], vec![1.0, 0.0]]),
            Err(VandermondeError::ZeroDirection { .. })
        ));
    }

    #[test]
    fn verdict_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let k = rng.random_range(1..=4);
            let dirs: Vec<Vec<f64>> = (0..k + 1)
                .map(|_| loop {
                    let v = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                    if v.iter().map(|c| c * c).sum::<f64>() > 1e-4 {
                        break v;
                    }
                })
                .collect();
            let base = DirectionSet::new(2, k, dirs.clone()).unwrap();
            let before = vandermonde_determinant(&base).unwrap();
            let mut scaled = dirs;
            let i = rng.random_range(0..scaled.len());
            let c = rng.random_range(0.1..10.0) * if rng.random_range(0..2) == 0 { -1.0 } else { 1.0 };
            for x in &mut scaled[i] {
                *x *= c;
            }
            let after =
                vandermonde_determinant(&DirectionSet::new(2, k, scaled).unwrap()).unwrap();
            assert_eq!(before.regular, after.regular);
            // Determinant scales by c^k: log magnitudes shift accordingly.
            let shift = (c.abs().ln()) * k as f64;
            assert!(
                (after.log_abs - before.log_abs - shift).abs() < 1e-8,
                "log shift {} expected {}",
                after.log_abs - before.log_abs,
                shift
            );
        }
    }

    #[test]
    fn planar_product_samples() {
        let p = planar_product_determinant(&ds(2, 1, &[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(p.sign, 1);
        assert!(p.log_abs.abs() < 1e-15);

        let p = planar_product_determinant(&ds(2, 2, &[&[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]))
            .unwrap();
        assert_eq!(p.sign, 1);
        assert!(p.log_abs.abs() < 1e-15); // product 1*1*1

        let p = planar_product_determinant(&ds(2, 2, &[&[1.0, 2.0], &[-2.0, -4.0], &[0.0, 1.0]]))
            .unwrap();
        assert_eq!(p.sign, 0);

        assert!(matches!(
            planar_product_determinant(&ds(3, 1, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]])),
            Err(VandermondeError::NotPlanar(3))
        ));
    }

    #[test]
    fn planar_product_matches_factorized_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let k = rng.random_range(1..=6);
            let dirs: Vec<Vec<f64>> = (0..k + 1)
                .map(|_| {
                    let a = rng.random_range(-2.0..2.0f64);
                    let b = rng.random_range(-2.0..2.0f64);
                    if a.abs() + b.abs() < 1e-3 {
                        vec![1.0, 0.5]
                    } else {
                        vec![a, b]
                    }
                })
                .collect();
            let set = DirectionSet::new(2, k, dirs).unwrap();
            let det = vandermonde_determinant(&set).unwrap();
            let product = planar_product_determinant(&set).unwrap();
            if det.sign == 0 || product.sign == 0 {
                assert_eq!(det.sign, product.sign);
                continue;
            }
            assert!(
                (det.log_abs - product.log_abs).abs() <= 1e-8 * det.log_abs.abs().max(1.0),
                "lu {} vs product {}",
                det.log_abs,
                product.log_abs
            );
        }
    }

    fn exact_scheme_2d(order2: &[[f64; 2]; 3]) -> Scheme {
        // Exact n=2, d=2 scheme: 1 + 2 + 3 nodes.
        let nodes = vec![
            Node::evaluation(vec![0.1, 0.2]),
            Node::derivative(1, vec![0.3, -0.1], vec![1.0, 0.0]),
            Node::derivative(1, vec![-0.2, 0.5], vec![0.0, 1.0]),
            Node::derivative(2, vec![0.0, 0.0], order2[0].to_vec()),
            Node::derivative(2, vec![0.4, 0.4], order2[1].to_vec()),
            Node::derivative(2, vec![-0.3, 0.2], order2[2].to_vec()),
        ];
        Scheme::new(2, 2, Domain::unit_ball(), nodes).unwrap()
    }

    #[test]
    fn generic_directions_are_always_regular() {
        // Direction sets off the singular variety have measure zero: a
        // thousand sphere draws never hit it.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut sphere_dir = |n: usize| loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0f64)).collect();
            let norm2: f64 = v.iter().map(|c| c * c).sum();
            if norm2 > 1e-3 && norm2 <= 1.0 {
                let norm = norm2.sqrt();
                break v.iter().map(|c| c / norm).collect::<Vec<f64>>();
            }
        };
        for i in 0..1000 {
            let n = 1 + i % 3;
            let k = 1 + (i / 3) % 4;
            let count = homogeneous_dim(n, k).unwrap();
            let dirs: Vec<Vec<f64>> = (0..count).map(|_| sphere_dir(n)).collect();
            let det = vandermonde_determinant(&DirectionSet::new(n, k, dirs).unwrap()).unwrap();
            assert!(det.regular, "draw {i}: n={n} k={k} irregular");
        }
    }

    #[test]
    fn scheme_regularity_verdicts() {
        let regular = exact_scheme_2d(&[[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let report = check_scheme_regularity(&regular).unwrap();
        assert!(report.regular);
        assert!(report.failing_degrees.is_empty());
        assert_eq!(report.per_degree.len(), 3);
        for deg in &report.per_degree {
            assert!(deg.regular);
            if deg.k >= 1 {
                let planar = deg.planar.as_ref().unwrap();
                assert!(planar.log_agrees);
            }
        }

        let broken = exact_scheme_2d(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let report = check_scheme_regularity(&broken).unwrap();
        assert!(!report.regular);
        assert_eq!(report.failing_degrees, vec![2]);
    }

    #[test]
    fn report_reads_only_directions() {
        let a = exact_scheme_2d(&[[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let mut moved_nodes = a.nodes().to_vec();
        for node in &mut moved_nodes {
            node.point = node.point.iter().map(|c| c + 3.7).collect();
        }
        let b = Scheme::new(2, 2, Domain::unit_ball(), moved_nodes).unwrap();
        let ra = check_scheme_regularity(&a).unwrap();
        let rb = check_scheme_regularity(&b).unwrap();
        assert_eq!(
            serde_json::to_string(&ra).unwrap(),
            serde_json::to_string(&rb).unwrap()
        );
    }

    #[test]
    fn shape_violations_list_offending_orders() {
        let nodes = vec![
            Node::evaluation(vec![0.0, 0.0]),
            Node::derivative(1, vec![0.0, 0.0], vec![1.0, 0.0]),
            Node::derivative(2, vec![0.0, 0.0], vec![1.0, 0.0]),
            Node::derivative(2, vec![0.0, 0.0], vec![1.0, 1.0]),
            Node::derivative(2, vec![0.0, 0.0], vec![0.0, 1.0]),
        ];
        let s = Scheme::new(2, 2, Domain::unit_ball(), nodes).unwrap();
        match check_scheme_regularity(&s) {
            Err(VandermondeError::SchemeShape(v)) => {
                assert_eq!(v, vec![(1, 1, 2)]);
            }
            other => panic!("expected shape error, got {other:?}"),
        }
    }
}
