//! Small dense linear-algebra helpers shared by the analysis modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative rank tolerance.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct SymmetricSpectrum {
    pub values: DVector<f64>,
    /// Eigenvectors stored column-wise, in the order of `values`.
    pub vectors: DMatrix<f64>,
}

impl SymmetricSpectrum {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        if n == 0 {
            return Self { values: DVector::zeros(0), vectors: DMatrix::zeros(0, 0) };
        }
        let sym = (m + m.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Absolute cut below which an eigenvalue counts as zero.
    pub fn threshold(&self, tol: f64) -> f64 {
        tol * self.max_abs().max(1.0)
    }

    pub fn count_zero(&self, tol: f64) -> usize {
        let cut = self.threshold(tol);
        self.values.iter().filter(|v| v.abs() < cut).count()
    }

    /// Index of the eigenvalue closest to zero.
    pub fn index_closest_to_zero(&self) -> usize {
        (0..self.values.len()).min_by(|&a, &b| self.values[a].abs().total_cmp(&self.values[b].abs())).unwrap_or(0)
    }
}

/// Orthonormal basis of the complement of the all-ones vector (Helmert basis), as an
/// `n x (n-1)` matrix.
pub fn ones_complement_basis(n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n.saturating_sub(1));
    for k in 1..n {
        let kf = k as f64;
        let s = 1.0 / (kf * (kf + 1.0)).sqrt();
        for i in 0..k {
            q[(i, k - 1)] = s;
        }
        q[(k, k - 1)] = -kf * s;
    }
    q
}

/// Orthonormal basis of the orthogonal complement of `ones ∪ extra` in `R^dim`.
///
/// The returned matrix has `dim - 1 - extra.len()` columns. Vectors in `extra` must be
/// linearly independent of each other and of the all-ones vector.
pub fn complement_basis(dim: usize, extra: &[&DVector<f64>]) -> DMatrix<f64> {
    let mut span: Vec<DVector<f64>> = Vec::with_capacity(dim);
    let ones = DVector::from_element(dim, 1.0 / (dim as f64).sqrt());
    span.push(ones);
    for v in extra {
        let mut w = (*v).clone();
        orthogonalize(&mut w, &span);
        let nrm = w.norm();
        if nrm > 1e-12 {
            span.push(w / nrm);
        }
    }
    let fixed = span.len();
    let target = dim.saturating_sub(fixed);
    for i in 0..dim {
        if span.len() - fixed == target {
            break;
        }
        let mut w = DVector::zeros(dim);
        w[i] = 1.0;
        orthogonalize(&mut w, &span);
        let nrm = w.norm();
        if nrm > 1e-8 {
            span.push(w / nrm);
        }
    }
    let cols: Vec<DVector<f64>> = span.into_iter().skip(fixed).collect();
    if cols.is_empty() {
        DMatrix::zeros(dim, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

fn orthogonalize(w: &mut DVector<f64>, span: &[DVector<f64>]) {
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for q in span {
            let c = q.dot(w);
            w.axpy(-c, q, 1.0);
        }
    }
}

/// Subtracts the mean.
pub fn center(v: &DVector<f64>) -> DVector<f64> {
    if v.is_empty() {
        return v.clone();
    }
    let mean = v.mean();
    v.map(|x| x - mean)
}

/// Flips `v` so that its first entry that is not negligible is positive.
pub fn sign_normalize(v: &mut DVector<f64>) {
    let scale = v.amax();
    if scale == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-9 * scale) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Spectral Moore-Penrose pseudoinverse of a symmetric matrix.
pub fn symmetric_pinv(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let spec = SymmetricSpectrum::new(m);
    let cut = spec.threshold(tol);
    let mut out = DMatrix::zeros(n, n);
    for (k, &lam) in spec.values.iter().enumerate() {
        if lam.abs() >= cut {
            let q = spec.vectors.column(k);
            out += (q * q.transpose()) / lam;
        }
    }
    out
}

/// Settings for the damped Newton solver.
#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Absolute tolerance on the residual infinity norm.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Relative singular-value cut for declaring the Jacobian singular.
    pub singular_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, max_halvings: 30, singular_tol: 1e-13 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton with step halving on the residual infinity norm.
///
/// `eval` returns the residual and, when `want_jacobian` is set, the Jacobian. Once the
/// tolerance is met one extra polishing step is taken if it lowers the residual.
pub fn newton<F>(mut eval: F, x0: DVector<f64>, opts: &NewtonOptions) -> Result<NewtonOutcome>
where
    F: FnMut(&DVector<f64>, bool) -> Result<(DVector<f64>, Option<DMatrix<f64>>)>,
{
    let mut x = x0;
    if x.is_empty() {
        return Ok(NewtonOutcome { x, residual: 0.0, iterations: 0 });
    }
    let (mut r, _) = eval(&x, false)?;
    let mut res = inf_norm(&r);
    let mut iterations = 0;
    let mut polished = false;
    loop {
        if !res.is_finite() {
            return Err(Error::NoConvergence { iterations, residual: res });
        }
        if res <= opts.tol {
            if polished || res == 0.0 {
                break;
            }
            polished = true;
        } else if iterations >= opts.max_iter {
            return Err(Error::NoConvergence { iterations, residual: res });
        }
        let (_, jac) = eval(&x, true)?;
        let jac = jac.expect("jacobian requested");
        let step = solve_checked(&jac, &(-&r), opts.singular_tol)?;
        if polished {
            let trial = &x + &step;
            let (rt, _) = eval(&trial, false)?;
            let rest = inf_norm(&rt);
            if rest < res {
                x = trial;
                res = rest;
            }
            break;
        }
        iterations += 1;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = &x + &step * t;
            if let Ok((rt, _)) = eval(&trial, false) {
                let rest = inf_norm(&rt);
                if rest.is_finite() && rest < (1.0 - 1e-4 * t) * res {
                    accepted = Some((trial, rt, rest));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((xn, rn, resn)) => {
                x = xn;
                r = rn;
                res = resn;
            }
            None => return Err(Error::NoConvergence { iterations, residual: res }),
        }
    }
    Ok(NewtonOutcome { x, residual: res, iterations })
}

/// Solves `a x = b`, reporting near-singular systems instead of returning garbage.
pub fn solve_checked(a: &DMatrix<f64>, b: &DVector<f64>, singular_tol: f64) -> Result<DVector<f64>> {
    let sv = a.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > singular_tol * smax.max(1e-300)) {
        return Err(Error::SingularJacobian { smallest: smin });
    }
    a.clone().lu().solve(b).ok_or(Error::SingularJacobian { smallest: smin })
}

/// Serializes a `DVector` as a plain JSON array.
pub mod serde_dvector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Vec::<f64>::deserialize(d).map(DVector::from_vec)
    }
}

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}
