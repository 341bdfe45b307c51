//! Signed graphs and their Laplacians.
//!
//! A signed graph carries real edge weights of either sign. Its Laplacian
//! `L = D W D^T` always annihilates the all-ones vector, but unlike the unsigned case it
//! can be indefinite or have a kernel larger than `span{1}` while the graph is connected.
//! This module assembles Laplacians, computes spectral pseudoinverses and coranks,
//! eliminates internal nodes by Schur complement (Kron reduction), evaluates effective
//! resistances, and synthesizes singular Laplacians with a single negative edge.
//!
//! Node indices are 0-based throughout the library API.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SymmetricSpectrum, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(tail: usize, head: usize, weight: f64) -> Self {
        Self { tail, head, weight }
    }
}

/// Graph with signed edge weights. Parallel edges are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedGraph {
    n_nodes: usize,
    edges: Vec<Edge>,
}

impl SignedGraph {
    pub fn new(n_nodes: usize, edges: Vec<Edge>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::NoNodes);
        }
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for (k, e) in edges.iter().enumerate() {
            for node in [e.tail, e.head] {
                if node >= n_nodes {
                    return Err(Error::NodeOutOfRange { edge: k, node, n_nodes });
                }
            }
            if e.tail == e.head {
                return Err(Error::SelfLoop { edge: k, node: e.tail });
            }
        }
        Ok(Self { n_nodes, edges })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Number of connected components of the underlying undirected graph, ignoring weights.
    pub fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n_nodes).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut count = self.n_nodes;
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.tail), find(&mut parent, e.head));
            if a != b {
                parent[a] = b;
                count -= 1;
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.components() == 1
    }

    pub fn has_negative_edges(&self) -> bool {
        self.edges.iter().any(|e| e.weight < 0.0)
    }

    pub fn laplacian(&self) -> Laplacian {
        assemble_laplacian(self)
    }
}

/// Dense symmetric Laplacian together with the rank tolerance used to interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    matrix: DMatrix<f64>,
    rank_tolerance: f64,
}

impl Laplacian {
    /// Wraps `matrix`, checking symmetry and zero row sums.
    pub fn from_matrix(matrix: DMatrix<f64>, rank_tolerance: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotLaplacian("matrix is not square".into()));
        }
        let scale = matrix.amax().max(1.0);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::NotLaplacian(format!("asymmetry {asym:.3e}")));
        }
        for (i, row) in matrix.row_iter().enumerate() {
            let s: f64 = row.iter().sum();
            if s.abs() > rank_tolerance * scale {
                return Err(Error::NotLaplacian(format!("row {i} sums to {s:.3e}")));
            }
        }
        Ok(Self { matrix, rank_tolerance })
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>, rank_tolerance: f64) -> Self {
        Self { matrix, rank_tolerance }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tolerance
    }

    pub fn with_rank_tolerance(mut self, tol: f64) -> Self {
        self.rank_tolerance = tol;
        self
    }

    pub fn spectrum(&self) -> SymmetricSpectrum {
        SymmetricSpectrum::new(&self.matrix)
    }

    pub fn corank(&self) -> usize {
        corank(&self.matrix, self.rank_tolerance)
    }

    pub fn pseudoinverse(&self) -> DMatrix<f64> {
        linalg::symmetric_pinv(&self.matrix, self.rank_tolerance)
    }
}

/// `L = D W D^T`.
pub fn assemble_laplacian(graph: &SignedGraph) -> Laplacian {
    let n = graph.n_nodes();
    let mut l = DMatrix::zeros(n, n);
    for e in graph.edges() {
        let (i, j, w) = (e.tail, e.head, e.weight);
        l[(i, i)] += w;
        l[(j, j)] += w;
        l[(i, j)] -= w;
        l[(j, i)] -= w;
    }
    Laplacian::from_matrix_unchecked(l, DEFAULT_RANK_TOL)
}

pub fn pseudoinverse(l: &Laplacian) -> DMatrix<f64> {
    l.pseudoinverse()
}

/// Number of eigenvalues with `|λ| < tol * max(1, |λ|_max)`.
pub fn corank(m: &DMatrix<f64>, tol: f64) -> usize {
    SymmetricSpectrum::new(m).count_zero(tol)
}

/// Partition of the nodes into boundary (terminal) and central (internal) nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodePartition {
    boundary: Vec<usize>,
    central: Vec<usize>,
}

impl NodePartition {
    /// Builds the partition from the ordered boundary list; central nodes are the
    /// remaining nodes in ascending order.
    pub fn new(n_nodes: usize, boundary: Vec<usize>) -> Result<Self> {
        if boundary.is_empty() {
            return Err(Error::InvalidPartition("boundary set is empty".into()));
        }
        let mut seen = vec![false; n_nodes];
        for &b in &boundary {
            if b >= n_nodes {
                return Err(Error::InvalidPartition(format!("node {b} out of range")));
            }
            if seen[b] {
                return Err(Error::InvalidPartition(format!("node {b} listed twice")));
            }
            seen[b] = true;
        }
        let central = (0..n_nodes).filter(|&i| !seen[i]).collect();
        Ok(Self { boundary, central })
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn central(&self) -> &[usize] {
        &self.central
    }

    pub fn n_nodes(&self) -> usize {
        self.boundary.len() + self.central.len()
    }

    pub fn gather_boundary(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.boundary.len(), self.boundary.iter().map(|&i| z[i]))
    }

    pub fn gather_central(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.central.len(), self.central.iter().map(|&i| z[i]))
    }

    /// Full-length vector from boundary and central parts.
    pub fn scatter(&self, zb: &DVector<f64>, zc: &DVector<f64>) -> DVector<f64> {
        let mut z = DVector::zeros(self.n_nodes());
        for (k, &i) in self.boundary.iter().enumerate() {
            z[i] = zb[k];
        }
        for (k, &i) in self.central.iter().enumerate() {
            z[i] = zc[k];
        }
        z
    }

    /// Embeds a boundary vector, with zeros at central nodes.
    pub fn embed_boundary(&self, zb: &DVector<f64>) -> DVector<f64> {
        self.scatter(zb, &DVector::zeros(self.central.len()))
    }

    pub(crate) fn block(&self, m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
    }
}

/// Kron reduction `L/L_CC = L_BB - L_BC L_CC^{-1} L_CB`, indexed in boundary order.
pub fn kron_reduce(l: &Laplacian, partition: &NodePartition) -> Result<Laplacian> {
    if partition.n_nodes() != l.dim() {
        return Err(Error::DimensionMismatch { expected: l.dim(), got: partition.n_nodes() });
    }
    let m = l.matrix();
    let (b, c) = (partition.boundary(), partition.central());
    let lbb = partition.block(m, b, b);
    if c.is_empty() {
        return Ok(Laplacian::from_matrix_unchecked(lbb, l.rank_tolerance()));
    }
    let lbc = partition.block(m, b, c);
    let lcc = partition.block(m, c, c);
    let spec = SymmetricSpectrum::new(&lcc);
    let smallest = spec.values.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if smallest < spec.threshold(l.rank_tolerance()) {
        return Err(Error::SingularInternalBlock { smallest });
    }
    let x = lcc.lu().solve(&lbc.transpose()).ok_or(Error::SingularInternalBlock { smallest })?;
    let red = &lbb - &lbc * x;
    let red = (&red + red.transpose()) * 0.5;
    Ok(Laplacian::from_matrix_unchecked(red, l.rank_tolerance()))
}

/// `e_i - e_j`.
pub fn incidence_vector(n: usize, i: usize, j: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e[j] = -1.0;
    e
}

/// `L†_ii + L†_jj - 2 L†_ij`. Requires a one-dimensional kernel.
pub fn effective_resistance(l: &Laplacian, i: usize, j: usize) -> Result<f64> {
    let n = l.dim();
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidArgument(format!("node pair ({i}, {j}) invalid for {n} nodes")));
    }
    let corank = l.corank();
    if corank != 1 {
        return Err(Error::DegenerateKernel { corank });
    }
    let p = l.pseudoinverse();
    Ok(p[(i, i)] + p[(j, j)] - 2.0 * p[(i, j)])
}

/// Witness that `L+ - k e_ij e_ij^T` is singular at `k = critical_gain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularGainCertificate {
    pub edge: (usize, usize),
    pub critical_gain: f64,
    /// Zero-mean, unit-norm kernel direction, first non-negligible entry positive.
    pub kernel_vector: Vec<f64>,
    pub effective_resistance: f64,
}

impl SingularGainCertificate {
    pub fn kernel(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.kernel_vector)
    }
}

fn require_positive_connected(graph: &SignedGraph, i: usize, j: usize) -> Result<()> {
    if let Some(e) = graph.edges().iter().find(|e| e.weight <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "positive subgraph has non-positive weight {} on edge ({}, {})",
            e.weight, e.tail, e.head
        )));
    }
    if !graph.is_connected() {
        return Err(Error::DisconnectedGraph { components: graph.components() });
    }
    let n = graph.n_nodes();
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidArgument(format!("node pair ({i}, {j}) invalid for {n} nodes")));
    }
    Ok(())
}

/// Gain of a negative edge `(i, j)` that makes `L+ - k e_ij e_ij^T` singular, with the
/// corresponding kernel vector `∝ L+† e_ij`.
pub fn singular_gain(graph_plus: &SignedGraph, i: usize, j: usize) -> Result<SingularGainCertificate> {
    require_positive_connected(graph_plus, i, j)?;
    let lp = graph_plus.laplacian();
    let pinv = lp.pseudoinverse();
    let e = incidence_vector(lp.dim(), i, j);
    let mut v = linalg::center(&(&pinv * &e));
    let r = v[i] - v[j];
    v /= v.norm();
    linalg::sign_normalize(&mut v);
    Ok(SingularGainCertificate {
        edge: (i, j),
        critical_gain: 1.0 / r,
        kernel_vector: v.iter().copied().collect(),
        effective_resistance: r,
    })
}

/// Definiteness class of `L = L+ - k e_ij e_ij^T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Definiteness {
    PositiveSemidefCorank1,
    SingularCorank2,
    IndefiniteCorank1,
}

impl std::fmt::Display for Definiteness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Definiteness::PositiveSemidefCorank1 => "PSD corank 1",
            Definiteness::SingularCorank2 => "PSD corank 2",
            Definiteness::IndefiniteCorank1 => "indefinite corank 1",
        })
    }
}

/// Classifies `L+ - k e_ij e_ij^T` by comparing `k` with `1/r_ij`; gains within
/// `DEFAULT_RANK_TOL` (relative) of the critical gain count as singular.
pub fn classify_definiteness(graph_plus: &SignedGraph, i: usize, j: usize, k: f64) -> Result<Definiteness> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("gain must be positive, got {k}")));
    }
    let cert = singular_gain(graph_plus, i, j)?;
    let ratio = k * cert.effective_resistance;
    Ok(if (ratio - 1.0).abs() <= DEFAULT_RANK_TOL {
        Definiteness::SingularCorank2
    } else if ratio < 1.0 {
        Definiteness::PositiveSemidefCorank1
    } else {
        Definiteness::IndefiniteCorank1
    })
}
