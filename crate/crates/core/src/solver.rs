//! The staged degree-descending interpolation solver, the dense full-system
//! oracle, cardinal bases and grid-based norming-constant estimation.
//!
//! An *exact* scheme carries exactly `N_{n,k}` order-`k` nodes for each
//! `k = 0..=d`. On such schemes the top homogeneous component is pinned down
//! by the order-`d` equations alone (`D^d_u P(v) = d! P_d(u)`), and each
//! lower component follows from a Vandermonde solve against samples
//! corrected by the derivatives of the already-recovered tail.

use crate::grid::{generate_grid, Domain, GridError};
use crate::linalg::{lu_factor, null_vector, LinalgError, Matrix};
use crate::polyspace::{
    enumerate_basis, enumerate_multi_indices, factorial, homogeneous_dim, poly_space_dim,
    MultiIndex, PolyError, Polynomial,
};
use crate::vandermonde::{
    build_homogeneous_vandermonde, check_scheme_regularity_with_tol, DirectionSet,
    VandermondeError,
};
use crate::DEFAULT_PIVOT_TOL;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("node {index}: point has length {got}, expected {expected}")]
    PointDimension {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("node {index}: direction has length {got}, expected {expected}")]
    DirectionDimension {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("node {index}: order {order} requires a nonzero direction")]
    MissingDirection { index: usize, order: usize },
    #[error("node {index}: order {order} exceeds the scheme degree {d}")]
    OrderAboveDegree {
        index: usize,
        order: usize,
        d: usize,
    },
    #[error("scheme is not exact: orders with wrong node counts: {0:?} (order, got, expected)")]
    SchemeShape(Vec<(usize, usize, usize)>),
    #[error("sample count {got} does not match node count {expected}")]
    SampleCount { expected: usize, got: usize },
    #[error("scheme is singular: smallest failing degree {degree}")]
    SingularDegree { degree: usize },
    #[error("direction set is singular (pivot ratio {ratio:.3e})")]
    SingularDirections { ratio: f64 },
    #[error("full solve needs node count {dim} = dim P_n^d, got {nodes}")]
    NonSquare { nodes: usize, dim: usize },
    #[error("polynomial dimension {poly} does not match scheme dimension {scheme}")]
    PolyDimension { poly: usize, scheme: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Vandermonde(#[from] VandermondeError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// One sampling functional: the order-`k` derivative at `point` along
/// `direction`, i.e. `w(P) = D^k_u P(v)`. Order 0 is plain evaluation and
/// ignores the direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub order: usize,
    pub point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
}

impl Node {
    pub fn evaluation(point: Vec<f64>) -> Node {
        Node {
            order: 0,
            point,
            direction: None,
        }
    }

    pub fn derivative(order: usize, point: Vec<f64>, direction: Vec<f64>) -> Node {
        Node {
            order,
            point,
            direction: Some(direction),
        }
    }
}

/// A sampling design: per-order node lists over `R^n` for degree-`d`
/// interpolation, plus the evaluation domain used by norming estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeRepr", into = "SchemeRepr")]
pub struct Scheme {
    n: usize,
    d: usize,
    domain: Domain,
    nodes: Vec<Node>,
}

impl Scheme {
    pub fn new(n: usize, d: usize, domain: Domain, nodes: Vec<Node>) -> Result<Self, SolverError> {
        if n == 0 {
            return Err(SolverError::Poly(PolyError::ZeroDimension));
        }
        for (index, node) in nodes.iter().enumerate() {
            if node.point.len() != n {
                return Err(SolverError::PointDimension {
                    index,
                    expected: n,
                    got: node.point.len(),
                });
            }
            if node.order > d {
                return Err(SolverError::OrderAboveDegree {
                    index,
                    order: node.order,
                    d,
                });
            }
            if node.order >= 1 {
                match &node.direction {
                    None => {
                        return Err(SolverError::MissingDirection {
                            index,
                            order: node.order,
                        })
                    }
                    Some(u) => {
                        if u.len() != n {
                            return Err(SolverError::DirectionDimension {
                                index,
                                expected: n,
                                got: u.len(),
                            });
                        }
                        if u.iter().all(|&c| c == 0.0) {
                            return Err(SolverError::MissingDirection {
                                index,
                                order: node.order,
                            });
                        }
                    }
                }
            }
        }
        Ok(Scheme { n, d, domain, nodes })
    }

    /// Univariate scheme sampling one order-`k` derivative per `k = 0..=d`,
    /// all at the same point (the Taylor design).
    pub fn taylor_univariate(d: usize, at: f64, domain: Domain) -> Scheme {
        let nodes = (0..=d)
            .map(|k| {
                if k == 0 {
                    Node::evaluation(vec![at])
                } else {
                    Node::derivative(k, vec![at], vec![1.0])
                }
            })
            .collect();
        Scheme::new(1, d, domain, nodes).expect("taylor scheme is well-formed")
    }

    /// Univariate scheme with the order-`k` derivative taken at `k/d`
    /// (equidistant points in [0, 1]).
    pub fn equidistant_univariate(d: usize, domain: Domain) -> Scheme {
        let points: Vec<f64> = (0..=d)
            .map(|k| if d == 0 { 0.0 } else { k as f64 / d as f64 })
            .collect();
        Scheme::univariate_with_points(&points, domain)
    }

    /// Univariate scheme with the order-`k` derivative taken at `points[k]`,
    /// `d = points.len() - 1`. Permuting the point sequence reassigns which
    /// point carries which derivative order.
    pub fn univariate_with_points(points: &[f64], domain: Domain) -> Scheme {
        assert!(!points.is_empty(), "at least one point is required");
        let d = points.len() - 1;
        let nodes = points
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if k == 0 {
                    Node::evaluation(vec![v])
                } else {
                    Node::derivative(k, vec![v], vec![1.0])
                }
            })
            .collect();
        Scheme::new(1, d, domain, nodes).expect("univariate scheme is well-formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Orders whose node counts differ from the exact cardinality `N_{n,k}`,
    /// as (order, got, expected) triples.
    pub fn exact_shape_violations(&self) -> Vec<(usize, usize, usize)> {
        let mut counts = vec![0usize; self.d + 1];
        for node in &self.nodes {
            counts[node.order] += 1;
        }
        (0..=self.d)
            .filter_map(|k| {
                let expected = homogeneous_dim(self.n, k).ok()?;
                (counts[k] != expected).then_some((k, counts[k], expected))
            })
            .collect()
    }

    /// Exactly `N_{n,k}` order-`k` nodes for every `k = 0..=d`.
    pub fn is_exact(&self) -> bool {
        self.exact_shape_violations().is_empty()
    }

    pub fn node_indices_of_order(&self, k: usize) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, node)| node.order == k)
            .map(|(i, _)| i)
            .collect()
    }

    /// The direction list `Z~_k` of the order-`k` nodes, in node order.
    /// Order-0 nodes contribute a placeholder unit direction (never used
    /// beyond the trivially regular constant stage).
    pub fn direction_set(&self, k: usize) -> Result<DirectionSet, VandermondeError> {
        let dirs = self
            .nodes
            .iter()
            .filter(|node| node.order == k)
            .map(|node| node.direction.clone().unwrap_or_else(|| unit_e1(self.n)))
            .collect();
        DirectionSet::new(self.n, k, dirs)
    }

    /// Applies the node-`i` functional `w_i(P) = D^k_u P(v)`.
    pub fn apply_functional(&self, i: usize, p: &Polynomial) -> Result<f64, SolverError> {
        if p.n() != self.n {
            return Err(SolverError::PolyDimension {
                poly: p.n(),
                scheme: self.n,
            });
        }
        let node = &self.nodes[i];
        let e1 = unit_e1(self.n);
        let u = node.direction.as_deref().unwrap_or(&e1);
        Ok(p.directional_derivative(&node.point, u, node.order)?)
    }

    /// All functionals applied in node order.
    pub fn apply_all(&self, p: &Polynomial) -> Result<Vec<f64>, SolverError> {
        (0..self.nodes.len())
            .map(|i| self.apply_functional(i, p))
            .collect()
    }
}

fn unit_e1(n: usize) -> Vec<f64> {
    let mut u = vec![0.0; n];
    u[0] = 1.0;
    u
}

#[derive(Serialize, Deserialize)]
struct SchemeRepr {
    n: usize,
    d: usize,
    #[serde(default = "Domain::unit_ball")]
    domain: Domain,
    nodes: Vec<Node>,
}

impl TryFrom<SchemeRepr> for Scheme {
    type Error = SolverError;
    fn try_from(r: SchemeRepr) -> Result<Self, SolverError> {
        Scheme::new(r.n, r.d, r.domain, r.nodes)
    }
}

impl From<Scheme> for SchemeRepr {
    fn from(s: Scheme) -> SchemeRepr {
        SchemeRepr {
            n: s.n,
            d: s.d,
            domain: s.domain,
            nodes: s.nodes,
        }
    }
}

/// Sample values aligned index-for-index with the scheme's nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub values: Vec<f64>,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Self {
        SampleSet { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Staged solve of an exact regular scheme, descending from degree `d`.
///
/// At each stage `k` the homogeneous Lagrange system
/// `P_k(u_{k,j}) = (psi_{k,j} - D^k tail(v_{k,j})) / k!` is solved through
/// the degree-`k` Vandermonde matrix, the constant being recovered last at
/// the single order-0 node. Fails with the smallest irregular degree if any
/// stage is singular.
pub fn solve_staged(scheme: &Scheme, samples: &SampleSet) -> Result<Polynomial, SolverError> {
    solve_staged_with_tol(scheme, samples, DEFAULT_PIVOT_TOL)
}

pub fn solve_staged_with_tol(
    scheme: &Scheme,
    samples: &SampleSet,
    tol: f64,
) -> Result<Polynomial, SolverError> {
    let violations = scheme.exact_shape_violations();
    if !violations.is_empty() {
        return Err(SolverError::SchemeShape(violations));
    }
    if samples.len() != scheme.len() {
        return Err(SolverError::SampleCount {
            expected: scheme.len(),
            got: samples.len(),
        });
    }
    let report = check_scheme_regularity_with_tol(scheme, tol)?;
    if let Some(&degree) = report.failing_degrees.first() {
        return Err(SolverError::SingularDegree { degree });
    }

    let n = scheme.n;
    let d = scheme.d;
    let mut p = Polynomial::zero(n, d)?;
    for k in (1..=d).rev() {
        let idx = scheme.node_indices_of_order(k);
        let ds = scheme.direction_set(k)?;
        let norms = ds.norms();
        let matrix = build_homogeneous_vandermonde(&ds.normalized())?;
        let lu = lu_factor(&matrix)?;
        let kfact = factorial(k);
        // The matrix holds unit directions, so the right-hand side carries
        // the |u|^k of P_k(u) = |u|^k P_k(u/|u|).
        let rhs: Vec<f64> = idx
            .iter()
            .zip(&norms)
            .map(|(&i, &norm)| {
                let node = &scheme.nodes[i];
                let u = node.direction.as_deref().expect("order >= 1 has direction");
                let tail_term = p.directional_derivative(&node.point, u, k)?;
                Ok((samples.values[i] - tail_term) / (kfact * norm.powi(k as i32)))
            })
            .collect::<Result<_, SolverError>>()?;
        let coeffs = lu.solve(&rhs, tol)?;
        for (alpha, &c) in enumerate_multi_indices(n, k)?.into_iter().zip(&coeffs) {
            p.set_coeff(alpha, c)?;
        }
    }
    let idx0 = scheme.node_indices_of_order(0);
    let i0 = idx0[0];
    let constant = samples.values[i0] - p.eval(&scheme.nodes[i0].point)?;
    p.set_coeff(MultiIndex::zero(n), constant)?;
    Ok(p)
}

/// Outcome of the dense full-system solve.
#[derive(Debug, Clone)]
pub enum FullStatus {
    Solved(Polynomial),
    /// Rank-deficient system; carries a nonzero polynomial annihilated by
    /// every functional of the scheme.
    Singular { null_vector: Polynomial },
}

#[derive(Debug, Clone)]
pub struct FullSolution {
    pub status: FullStatus,
    /// Pivot ratio of the row-equilibrated dense matrix.
    pub conditioning: f64,
}

impl FullSolution {
    pub fn polynomial(&self) -> Option<&Polynomial> {
        match &self.status {
            FullStatus::Solved(p) => Some(p),
            FullStatus::Singular { .. } => None,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.status, FullStatus::Singular { .. })
    }
}

/// Dense matrix of the full system: entry (i, j) is functional `i` applied to
/// monomial `j`, columns ordered by ascending degree then descending lex.
/// Accepts any scheme shape (used both as the brute-force solving oracle and
/// as a singularity probe).
pub fn full_matrix(scheme: &Scheme) -> Result<Matrix, SolverError> {
    let basis = enumerate_basis(scheme.n, scheme.d)?;
    let mut m = Matrix::zeros(scheme.len(), basis.len());
    for (j, alpha) in basis.iter().enumerate() {
        let mut mono = Polynomial::zero(scheme.n, scheme.d)?;
        mono.set_coeff(alpha.clone(), 1.0)?;
        for i in 0..scheme.len() {
            m[(i, j)] = scheme.apply_functional(i, &mono)?;
        }
    }
    Ok(m)
}

/// Numerical rank of the dense system matrix, for schemes of any node count
/// (the singularity probe companion to [`solve_full`]).
pub fn full_rank(scheme: &Scheme) -> Result<usize, SolverError> {
    let mut m = full_matrix(scheme)?;
    m.equilibrate_rows();
    Ok(crate::linalg::rank(&m, DEFAULT_PIVOT_TOL))
}

/// Brute-force solve of the full dense system; the oracle for
/// [`solve_staged`]. Requires a square system (node count = dim of the
/// polynomial space). Rank deficiency is reported with a null polynomial
/// instead of a solution.
pub fn solve_full(scheme: &Scheme, samples: &SampleSet) -> Result<FullSolution, SolverError> {
    solve_full_with_tol(scheme, samples, DEFAULT_PIVOT_TOL)
}

pub fn solve_full_with_tol(
    scheme: &Scheme,
    samples: &SampleSet,
    tol: f64,
) -> Result<FullSolution, SolverError> {
    let dim = poly_space_dim(scheme.n, scheme.d)?;
    if scheme.len() != dim {
        return Err(SolverError::NonSquare {
            nodes: scheme.len(),
            dim,
        });
    }
    if samples.len() != scheme.len() {
        return Err(SolverError::SampleCount {
            expected: scheme.len(),
            got: samples.len(),
        });
    }
    let mut m = full_matrix(scheme)?;
    // Rows mix k! scales across derivative orders; equilibrate so rank and
    // pivot thresholds mean the same thing on every row.
    let factors = m.equilibrate_rows();
    let basis = enumerate_basis(scheme.n, scheme.d)?;
    let lu = lu_factor(&m)?;
    let conditioning = lu.pivot_ratio();
    // Rank deficiency is decided by the same reduction that extracts the
    // null vector, so the two can never disagree.
    if crate::linalg::rank(&m, tol) < dim {
        let nv = null_vector(&m, tol).expect("rank deficiency leaves a free column");
        let null_poly = Polynomial::from_basis_coeffs(scheme.n, scheme.d, &basis, &nv)?;
        return Ok(FullSolution {
            status: FullStatus::Singular {
                null_vector: null_poly,
            },
            conditioning,
        });
    }
    let rhs: Vec<f64> = samples
        .values
        .iter()
        .zip(&factors)
        .map(|(v, f)| v * f)
        .collect();
    let coeffs = lu.solve(&rhs, tol)?;
    Ok(FullSolution {
        status: FullStatus::Solved(Polynomial::from_basis_coeffs(
            scheme.n, scheme.d, &basis, &coeffs,
        )?),
        conditioning,
    })
}

/// Cardinal (dual) basis of an exact regular scheme: `w_i(l_j) = delta_ij`,
/// obtained from one staged solve per unit sample vector.
pub fn cardinal_basis(scheme: &Scheme) -> Result<Vec<Polynomial>, SolverError> {
    cardinal_basis_with_tol(scheme, DEFAULT_PIVOT_TOL)
}

pub fn cardinal_basis_with_tol(scheme: &Scheme, tol: f64) -> Result<Vec<Polynomial>, SolverError> {
    let m = scheme.len();
    (0..m)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            solve_staged_with_tol(scheme, &SampleSet::new(e), tol)
        })
        .collect()
}

/// Grid maximum of the Lebesgue function `sum_j |l_j(x)|` of an exact
/// regular scheme: the norming constant of the scheme's functional set
/// restricted to the grid, hence a lower bound converging from below as the
/// grid refines.
pub fn estimate_norming_constant(
    scheme: &Scheme,
    domain: &Domain,
    grid_size: usize,
    seed: u64,
) -> Result<f64, SolverError> {
    let basis = cardinal_basis(scheme)?;
    let grid = generate_grid(domain, scheme.n, grid_size, seed)?;
    lebesgue_max(&basis, &grid)
}

fn lebesgue_max(basis: &[Polynomial], grid: &[Vec<f64>]) -> Result<f64, SolverError> {
    let mut best = 0.0f64;
    for x in grid {
        let mut s = 0.0;
        for l in basis {
            s += l.eval(x)?.abs();
        }
        best = best.max(s);
    }
    Ok(best)
}

/// Grid estimate of the homogeneous norming constant `theta_k` of a square
/// direction set: the Lebesgue function of the cardinal basis of `L_n^k`
/// against evaluation at the (pre-normalized) directions, maximized over the
/// grid. Directions are normalized to unit length first, which makes the
/// estimate scale-invariant by construction.
pub fn estimate_direction_theta(
    ds: &DirectionSet,
    domain: &Domain,
    grid_size: usize,
    seed: u64,
) -> Result<f64, SolverError> {
    let normalized = ds.normalized();
    let matrix = build_homogeneous_vandermonde(&normalized)?;
    let lu = lu_factor(&matrix)?;
    let ratio = lu.pivot_ratio();
    if ratio <= DEFAULT_PIVOT_TOL {
        return Err(SolverError::SingularDirections { ratio });
    }
    let m = normalized.len();
    let indices = enumerate_multi_indices(ds.n(), ds.k())?;
    let cardinals: Vec<Polynomial> = (0..m)
        .map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            let coeffs = lu.solve(&e, DEFAULT_PIVOT_TOL)?;
            Ok(Polynomial::from_basis_coeffs(
                ds.n(),
                ds.k(),
                &indices,
                &coeffs,
            )?)
        })
        .collect::<Result<_, SolverError>>()?;
    let grid = generate_grid(domain, ds.n(), grid_size, seed)?;
    lebesgue_max(&cardinals, &grid)
}
