//! Network singularities and their Lyapunov-Schmidt reduction.
//!
//! At a singular equilibrium `L(z*)` has a two-dimensional kernel spanned by `1` and a
//! critical eigenvector `v`. Splitting `z = z* + x v + w` and solving the range equations
//! for `w` leaves one scalar equation `f(x, u, α) = 0` whose Taylor coefficients decide
//! the bifurcation type. The same construction applied to the Kron-reduced terminal
//! equations yields `f̂`, which agrees with `f` up to the scale `a_B`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::equilibrium::{check_conservation, solve_internal_with};
use crate::error::{Error, Result};
use crate::graph::{kron_reduce, singular_gain, SignedGraph};
use crate::linalg::{self, newton, serde_dvector, NewtonOptions, SymmetricSpectrum, DEFAULT_RANK_TOL};
use crate::network::{NetworkModel, ParamTarget, Parameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    #[serde(with = "serde_dvector")]
    pub z_star: DVector<f64>,
    #[serde(with = "serde_dvector")]
    pub u_star: DVector<f64>,
    pub alpha_star: Parameters,
    /// Critical eigenvector: mean-zero, unit norm and sign-normalized as detected;
    /// [`SingularityReport::scaled_to_edge`] rescales it.
    #[serde(with = "serde_dvector")]
    pub v: DVector<f64>,
    /// Unit, mean-zero boundary direction of `v_B`.
    #[serde(with = "serde_dvector")]
    pub v_hat: DVector<f64>,
    /// `v_B = a 1̂ + a_B v̂`.
    pub a: f64,
    pub a_b: f64,
    /// Eigenvalue of `L(z*)` on `1^⊥` closest to zero.
    pub critical_eigenvalue: f64,
    /// Next eigenvalue magnitude on `1^⊥`.
    pub spectral_gap: f64,
    /// Dimension of `ker L(z*)`, counting the all-ones direction.
    pub corank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Detection {
    Singular(Box<SingularityReport>),
    NotSingular { smallest: f64 },
}

impl Detection {
    pub fn report(self) -> Option<SingularityReport> {
        match self {
            Detection::Singular(r) => Some(*r),
            Detection::NotSingular { .. } => None,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, Detection::Singular(_))
    }
}

/// Eigen-decomposition of `L(z)` restricted to `1^⊥` (Helmert coordinates).
pub(crate) fn restricted_spectrum(net: &NetworkModel, z: &DVector<f64>) -> Result<(SymmetricSpectrum, DMatrix<f64>)> {
    let q = linalg::ones_complement_basis(net.n_nodes());
    let l = net.laplacian_at(z)?;
    let m = q.transpose() * l.matrix() * &q;
    Ok((SymmetricSpectrum::new(&m), q))
}

/// Tests `L(z)` for a second kernel direction.
///
/// An eigenvalue on `1^⊥` counts as zero when its magnitude is below
/// `tol * max(1, |λ|_max)`.
pub fn detect_singularity(net: &NetworkModel, z: &DVector<f64>, tol: f64) -> Result<Detection> {
    let n = net.n_nodes();
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z.len() });
    }
    if n < 2 {
        return Ok(Detection::NotSingular { smallest: f64::INFINITY });
    }
    let z_star = linalg::center(z);
    let (spec, q) = restricted_spectrum(net, &z_star)?;
    let zeros = spec.count_zero(tol);
    let idx = spec.index_closest_to_zero();
    let smallest = spec.values[idx];
    if zeros == 0 {
        return Ok(Detection::NotSingular { smallest });
    }
    if zeros > 1 {
        return Err(Error::AmbiguousKernel { dimension: zeros + 1 });
    }
    let spectral_gap =
        spec.values.iter().enumerate().filter(|&(i, _)| i != idx).fold(f64::INFINITY, |m, (_, v)| m.min(v.abs()));
    let mut v = &q * spec.vectors.column(idx);
    v /= v.norm();
    linalg::sign_normalize(&mut v);
    let (v_hat, a, a_b) = boundary_decomposition(net, &v)?;
    Ok(Detection::Singular(Box::new(SingularityReport {
        u_star: net.nodal_currents(&z_star)?,
        z_star,
        alpha_star: net.parameters().clone(),
        v,
        v_hat,
        a,
        a_b,
        critical_eigenvalue: smallest,
        spectral_gap,
        corank: 2,
    })))
}

/// Splits `v_B` into `a 1̂ + a_B v̂` with `v̂` unit and mean-zero, `a_B > 0`.
fn boundary_decomposition(net: &NetworkModel, v: &DVector<f64>) -> Result<(DVector<f64>, f64, f64)> {
    let vb = net.partition().gather_boundary(v);
    let a = vb.mean();
    let tilde = vb.add_scalar(-a);
    let a_b = tilde.norm();
    if !(a_b > 1e-8 * v.norm()) {
        return Err(Error::NotExternallySingular);
    }
    Ok((tilde / a_b, a, a_b))
}

impl SingularityReport {
    /// Copy with `v` rescaled so that `v_tail - v_head = 1 / c` on the given edge, where
    /// `c = -g'(y*)` is the magnitude of its differential conductance at `z*`. For a single
    /// negative edge at its critical gain this is `v = L+† e_ij`.
    pub fn scaled_to_edge(&self, net: &NetworkModel, edge: usize) -> Result<Self> {
        let spec = net.edges().get(edge).ok_or_else(|| Error::InvalidArgument(format!("no edge {edge}")))?;
        let model = net.models()[edge];
        let c = -model.derivative(self.z_star[spec.tail] - self.z_star[spec.head], 1);
        let gap = self.v[spec.tail] - self.v[spec.head];
        if !(c.abs() > 0.0) || gap.abs() < 1e-12 {
            return Err(Error::InvalidArgument(format!("edge {edge} does not carry the critical mode")));
        }
        self.rescaled(net, 1.0 / (c * gap))
    }

    /// Copy with `v` multiplied by `s`.
    pub fn rescaled(&self, net: &NetworkModel, s: f64) -> Result<Self> {
        let mut out = self.clone();
        out.v = &self.v * s;
        let (v_hat, a, a_b) = boundary_decomposition(net, &out.v)?;
        out.v_hat = v_hat;
        out.a = a;
        out.a_b = a_b;
        Ok(out)
    }

    pub fn boundary_currents(&self, net: &NetworkModel) -> DVector<f64> {
        net.partition().gather_boundary(&self.u_star)
    }
}

/// Complement used to split off the critical direction in the full equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Splitting {
    /// `w ⊥ {1, v}`.
    #[default]
    Orthogonal,
    /// `w ⊥ {1, ψ}` with `ψ = (v̂, 0)`; the remaining equation then lives at the terminals
    /// and the full and reduced functions coincide exactly.
    BoundaryAligned,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LsOptions {
    pub splitting: Splitting,
    pub newton: NewtonOptions,
}

/// Maps a scalar bifurcation parameter `λ` to a network parameter and boundary currents:
/// `param = origin + rate λ`, `u_B = u_base + λ u_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPath {
    pub target: Option<ParamTarget>,
    pub origin: f64,
    pub rate: f64,
    #[serde(with = "serde_dvector")]
    pub u_base: DVector<f64>,
    #[serde(with = "serde_dvector")]
    pub u_rate: DVector<f64>,
}

impl ParameterPath {
    /// `λ` drives `target` with `target = origin + λ` and fixed zero boundary currents.
    pub fn parameter(target: ParamTarget, origin: f64, n_boundary: usize) -> Self {
        Self {
            target: Some(target),
            origin,
            rate: 1.0,
            u_base: DVector::zeros(n_boundary),
            u_rate: DVector::zeros(n_boundary),
        }
    }

    /// `λ` scales boundary currents along `direction`, parameters fixed.
    pub fn currents(base: DVector<f64>, direction: DVector<f64>) -> Self {
        Self { target: None, origin: 0.0, rate: 0.0, u_base: base, u_rate: direction }
    }

    pub fn with_currents(mut self, base: DVector<f64>) -> Self {
        self.u_rate = DVector::zeros(base.len());
        self.u_base = base;
        self
    }

    /// Gain of the unique negative edge, centered at the singular point.
    pub fn default_for(net: &NetworkModel, report: &SingularityReport) -> Result<Self> {
        let neg = net.negative_edges();
        let edge = match neg.as_slice() {
            [e] => *e,
            [] => return Err(Error::InvalidArgument("network has no negative edge".into())),
            _ => {
                return Err(Error::InvalidArgument("several negative edges; declare the bifurcation parameter".into()))
            }
        };
        let target = net.gain_target(edge)?;
        let origin = net.target_value(&target)?;
        Ok(Self::parameter(target, origin, net.partition().boundary().len())
            .with_currents(report.boundary_currents(net)))
    }

    pub fn parameter_value(&self, lambda: f64) -> f64 {
        self.origin + self.rate * lambda
    }

    pub fn currents_at(&self, lambda: f64) -> DVector<f64> {
        &self.u_base + &self.u_rate * lambda
    }

    /// Network and boundary currents at `λ`.
    pub fn at(&self, net: &NetworkModel, lambda: f64) -> Result<(NetworkModel, DVector<f64>)> {
        let net = match &self.target {
            Some(t) => net.with_target(t, self.parameter_value(lambda))?,
            None => net.clone(),
        };
        Ok((net, self.currents_at(lambda)))
    }

    pub fn validate(&self, net: &NetworkModel) -> Result<()> {
        let nb = net.partition().boundary().len();
        for u in [&self.u_base, &self.u_rate] {
            if u.len() != nb {
                return Err(Error::DimensionMismatch { expected: nb, got: u.len() });
            }
            check_conservation(u)?;
        }
        if let Some(t) = &self.target {
            net.target_value(t)?;
        }
        Ok(())
    }
}

fn full_complement(net: &NetworkModel, report: &SingularityReport, splitting: Splitting) -> DMatrix<f64> {
    let n = net.n_nodes();
    match splitting {
        Splitting::Orthogonal => linalg::complement_basis(n, &[&report.v]),
        Splitting::BoundaryAligned => {
            let psi = net.partition().embed_boundary(&report.v_hat);
            linalg::complement_basis(n, &[&psi])
        }
    }
}

/// `f(x, u_B, α)` from the full network equations. `net` carries `α`.
pub fn ls_function_full(net: &NetworkModel, report: &SingularityReport, x: f64, u_b: &DVector<f64>) -> Result<f64> {
    ls_function_full_with(net, report, x, u_b, &LsOptions::default())
}

pub fn ls_function_full_with(
    net: &NetworkModel,
    report: &SingularityReport,
    x: f64,
    u_b: &DVector<f64>,
    opts: &LsOptions,
) -> Result<f64> {
    let nb = net.partition().boundary().len();
    if u_b.len() != nb {
        return Err(Error::DimensionMismatch { expected: nb, got: u_b.len() });
    }
    check_conservation(u_b)?;
    let u = net.partition().embed_boundary(u_b);
    let q = full_complement(net, report, opts.splitting);
    let base = &report.z_star + &report.v * x;
    let eval = |y: &DVector<f64>, want_jac: bool| {
        let z = &base + &q * y;
        let r = q.transpose() * (net.nodal_currents(&z)? - &u);
        let jac = if want_jac { Some(q.transpose() * net.laplacian_at(&z)?.matrix() * &q) } else { None };
        Ok((r, jac))
    };
    let y = newton(eval, DVector::zeros(q.ncols()), &opts.newton)?.x;
    let z = &base + &q * y;
    Ok(report.v.dot(&(net.nodal_currents(&z)? - u)))
}

/// `f̂(x̂, u_B, α)` from the Kron-reduced terminal equations, with
/// `z_B = z*_B + x̂ v̂ + ŵ`, `ŵ ⊥ {1̂, v̂}`.
pub fn ls_function_reduced(
    net: &NetworkModel,
    report: &SingularityReport,
    x_hat: f64,
    u_b: &DVector<f64>,
) -> Result<f64> {
    ls_function_reduced_with(net, report, x_hat, u_b, &NewtonOptions::default())
}

pub fn ls_function_reduced_with(
    net: &NetworkModel,
    report: &SingularityReport,
    x_hat: f64,
    u_b: &DVector<f64>,
    newton_opts: &NewtonOptions,
) -> Result<f64> {
    let part = net.partition();
    let nb = part.boundary().len();
    if u_b.len() != nb {
        return Err(Error::DimensionMismatch { expected: nb, got: u_b.len() });
    }
    check_conservation(u_b)?;
    let zb_star = part.gather_boundary(&report.z_star);
    let zc_star = part.gather_central(&report.z_star);
    let q = linalg::complement_basis(nb, &[&report.v_hat]);
    let base = &zb_star + &report.v_hat * x_hat;
    let terminal = |zb: &DVector<f64>, want_jac: bool| -> Result<(DVector<f64>, Option<DMatrix<f64>>)> {
        let zc = solve_internal_with(net, zb, &zc_star, newton_opts)?;
        let z = part.scatter(zb, &zc);
        let f_hat = part.gather_boundary(&net.nodal_currents(&z)?) - u_b;
        let l_hat = if want_jac { Some(kron_reduce(&net.laplacian_at(&z)?, part)?.into_matrix()) } else { None };
        Ok((f_hat, l_hat))
    };
    let eval = |y: &DVector<f64>, want_jac: bool| {
        let (f_hat, l_hat) = terminal(&(&base + &q * y), want_jac)?;
        Ok((q.transpose() * f_hat, l_hat.map(|l| q.transpose() * l * &q)))
    };
    let y = newton(eval, DVector::zeros(q.ncols()), newton_opts)?.x;
    let (f_hat, _) = terminal(&(&base + &q * y), false)?;
    Ok(report.v_hat.dot(&f_hat))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoefficientSource {
    FullEquations,
    KronReducedEquations,
    ClosedForm,
}

/// Derivatives of the reduced scalar function at the singular point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsCoefficients {
    pub f: f64,
    pub f_x: f64,
    pub f_lambda: f64,
    pub f_xx: f64,
    pub f_lambdax: f64,
    pub f_xxx: f64,
    pub source: CoefficientSource,
}

#[derive(Debug, Clone, Copy)]
pub struct FdOptions {
    /// Step in `x` and `λ`; defaults to `1e-3 max(1, ‖z*‖)`.
    pub step: Option<f64>,
    /// Relative tolerance of the Richardson consistency check.
    pub tol: f64,
    pub ls: LsOptions,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self { step: None, tol: 1e-4, ls: LsOptions::default() }
    }
}

fn stencil<F: FnMut(f64, f64) -> Result<f64>>(f: &mut F, h: f64) -> Result<[f64; 6]> {
    let f0 = f(0.0, 0.0)?;
    let (fp, fm) = (f(h, 0.0)?, f(-h, 0.0)?);
    let (f2p, f2m) = (f(2.0 * h, 0.0)?, f(-2.0 * h, 0.0)?);
    let (lp, lm) = (f(0.0, h)?, f(0.0, -h)?);
    let (pp, pm, mp, mm) = (f(h, h)?, f(h, -h)?, f(-h, h)?, f(-h, -h)?);
    Ok([
        f0,
        (fp - fm) / (2.0 * h),
        (lp - lm) / (2.0 * h),
        (fp - 2.0 * f0 + fm) / (h * h),
        (pp - pm - mp + mm) / (4.0 * h * h),
        (f2p - 2.0 * fp + 2.0 * fm - f2m) / (2.0 * h.powi(3)),
    ])
}

/// Richardson-checked central differences of `f(x, λ)`.
fn fd_coefficients<F: FnMut(f64, f64) -> Result<f64>>(mut f: F, h: f64, tol: f64) -> Result<[f64; 6]> {
    let coarse = stencil(&mut f, h)?;
    let fine = stencil(&mut f, 0.5 * h)?;
    const NAMES: [&str; 6] = ["f", "f_x", "f_lambda", "f_xx", "f_lambdax", "f_xxx"];
    let scale = coarse[1..].iter().chain(&fine[1..]).fold(1.0_f64, |m, c| m.max(c.abs()));
    let mut out = [0.0; 6];
    for k in 0..6 {
        if (coarse[k] - fine[k]).abs() > 10.0 * tol * scale {
            return Err(Error::IllConditionedStencil { quantity: NAMES[k], coarse: coarse[k], fine: fine[k] });
        }
        // every stencil is second order
        out[k] = if k == 0 { fine[0] } else { (4.0 * fine[k] - coarse[k]) / 3.0 };
    }
    Ok(out)
}

fn default_step(report: &SingularityReport) -> f64 {
    1e-3 * report.z_star.norm().max(1.0)
}

fn pack(c: [f64; 6], source: CoefficientSource) -> LsCoefficients {
    LsCoefficients { f: c[0], f_x: c[1], f_lambda: c[2], f_xx: c[3], f_lambdax: c[4], f_xxx: c[5], source }
}

/// Finite-difference Taylor coefficients of the full reduced function along `path`.
pub fn ls_coefficients_fd(
    net: &NetworkModel,
    report: &SingularityReport,
    path: &ParameterPath,
    opts: &FdOptions,
) -> Result<LsCoefficients> {
    path.validate(net)?;
    let h = opts.step.unwrap_or_else(|| default_step(report));
    let f = |x: f64, lambda: f64| {
        let (n, u) = path.at(net, lambda)?;
        ls_function_full_with(&n, report, x, &u, &opts.ls)
    };
    fd_coefficients(f, h, opts.tol).map(|c| pack(c, CoefficientSource::FullEquations))
}

/// Same as [`ls_coefficients_fd`] on the Kron-reduced equations, in the `x̂` coordinate.
pub fn ls_coefficients_fd_reduced(
    net: &NetworkModel,
    report: &SingularityReport,
    path: &ParameterPath,
    opts: &FdOptions,
) -> Result<LsCoefficients> {
    path.validate(net)?;
    let h = opts.step.unwrap_or_else(|| default_step(report));
    let f = |x: f64, lambda: f64| {
        let (n, u) = path.at(net, lambda)?;
        ls_function_reduced_with(&n, report, x, &u, &opts.ls.newton)
    };
    fd_coefficients(f, h, opts.tol).map(|c| pack(c, CoefficientSource::KronReducedEquations))
}

/// Closed-form coefficients for a network with one negative edge `(i, j)` and linear
/// resistors elsewhere, at the critical gain `k* = 1/r_ij`, `z* = 0`, with `v = L+† e_ij`
/// and `λ = k - k*`.
///
/// `f_xxx = -g'''(0) r³` drops the term fed by `f_xx` through the complement of the
/// kernel, so it matches the full equations only where `f_xx = 0`.
pub fn ls_coefficients_closed_form(net: &NetworkModel) -> Result<LsCoefficients> {
    let neg = net.negative_edges();
    let edge = match neg.as_slice() {
        [e] => *e,
        _ => return Err(Error::HypothesesViolated(format!("expected exactly one negative edge, found {}", neg.len()))),
    };
    let spec = &net.edges()[edge];
    let plus = net.positive_subgraph().map_err(|e| Error::HypothesesViolated(format!("positive subgraph: {e}")))?;
    if !plus.is_connected() {
        return Err(Error::HypothesesViolated("positive subgraph is disconnected".into()));
    }
    let cert = singular_gain(&plus, spec.tail, spec.head)?;
    let r = cert.effective_resistance;
    let model = net.models()[edge].with_gain(cert.critical_gain);
    // the internal block must stay invertible at the singular point
    let mut edges = plus.edges().to_vec();
    edges.push(crate::graph::Edge::new(spec.tail, spec.head, -cert.critical_gain));
    let l = SignedGraph::new(net.n_nodes(), edges)?.laplacian();
    if let Err(Error::SingularInternalBlock { .. }) = kron_reduce(&l, net.partition()) {
        return Err(Error::HypothesesViolated("internal block singular at the critical gain".into()));
    }
    let g = model.normalized().expect("negative edge");
    let (g2, g3) = (g.derivative(0.0, 2), g.derivative(0.0, 3));
    Ok(LsCoefficients {
        f: 0.0,
        f_x: 0.0,
        f_lambda: 0.0,
        f_xx: -g2 * r * r,
        f_lambdax: -r * r,
        f_xxx: -g3 * r.powi(3),
        source: CoefficientSource::ClosedForm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BifurcationKind {
    Transcritical,
    PitchforkSupercritical,
    PitchforkSubcritical,
    HighCodimension,
}

impl std::fmt::Display for BifurcationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BifurcationKind::Transcritical => "transcritical",
            BifurcationKind::PitchforkSupercritical => "pitchfork (supercritical)",
            BifurcationKind::PitchforkSubcritical => "pitchfork (subcritical)",
            BifurcationKind::HighCodimension => "high codimension",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationClass {
    pub kind: BifurcationKind,
    pub certificate: LsCoefficients,
}

pub const DEFAULT_TOL_CLASS: f64 = 1e-4;

/// Recognition of transcritical and pitchfork bifurcations from the coefficients.
///
/// A coefficient counts as zero below `tol_class * max(1, |f_λx|, |f_xx|, |f_xxx|)`.
/// A pitchfork is supercritical when `f_xxx` and `f_λx` have opposite signs.
pub fn classify_bifurcation(coeffs: &LsCoefficients, tol_class: f64) -> Result<BifurcationClass> {
    let c = coeffs;
    let scale = [c.f_lambdax, c.f_xx, c.f_xxx].iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let thr = tol_class * scale;
    if !(c.f.abs() <= thr && c.f_x.abs() <= thr) {
        return Err(Error::InconsistentCertificate(format!("f = {:.3e}, f_x = {:.3e}", c.f, c.f_x)));
    }
    let nz = |v: f64| v.abs() > thr;
    let kind = if nz(c.f_xx) && nz(c.f_lambdax) {
        BifurcationKind::Transcritical
    } else if !nz(c.f_xx) && nz(c.f_xxx) && nz(c.f_lambdax) {
        if c.f_xxx.signum() != c.f_lambdax.signum() {
            BifurcationKind::PitchforkSupercritical
        } else {
            BifurcationKind::PitchforkSubcritical
        }
    } else {
        BifurcationKind::HighCodimension
    };
    Ok(BifurcationClass { kind, certificate: *coeffs })
}

/// `‖L(z)† u_dir‖`: potential response per unit current injected along `u_dir`.
pub fn ultrasensitivity_gain(net: &NetworkModel, z: &DVector<f64>, u_dir: &DVector<f64>) -> Result<f64> {
    let n = net.n_nodes();
    if u_dir.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u_dir.len() });
    }
    let l = net.laplacian_at(z)?.with_rank_tolerance(DEFAULT_RANK_TOL);
    Ok((l.pseudoinverse() * u_dir).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_relative_eq;

    fn fig1_report(k: f64, beta: f64) -> (NetworkModel, SingularityReport) {
        let net = fixtures::fig1_with(k, beta);
        let rep = detect_singularity(&net, &DVector::zeros(5), DEFAULT_RANK_TOL).unwrap().report().unwrap();
        (net, rep)
    }

    #[test]
    fn detects_example_singularity() {
        let (_, rep) = fig1_report(0.5, 0.5);
        let expected = DVector::from_vec(vec![2.0, -3.0, -3.0, 7.0, -3.0]).normalize();
        assert!((rep.v.clone() - &expected).amax() < 1e-10);
        let vh = DVector::from_vec(vec![2.0, -1.0, -1.0]) / 6f64.sqrt();
        assert!((rep.v_hat.clone() - vh).amax() < 1e-10);
        // v_B = (2, -3, -3)/√80: mean -4/(3√80), centered norm (5/3)√6/√80
        assert_relative_eq!(rep.a, -4.0 / (3.0 * 80f64.sqrt()), epsilon = 1e-12);
        assert_relative_eq!(rep.a_b, 5.0 * 6f64.sqrt() / (3.0 * 80f64.sqrt()), epsilon = 1e-12);
        assert_eq!(rep.corank, 2);
    }

    #[test]
    fn regular_point_is_not_singular() {
        let net = fixtures::fig1_with(0.3, 0.5);
        assert!(!detect_singularity(&net, &DVector::zeros(5), DEFAULT_RANK_TOL).unwrap().is_singular());
    }

    #[test]
    fn ls_function_vanishes_to_first_order_at_singularity() {
        let (net, rep) = fig1_report(0.5, 0.5);
        let ub = DVector::zeros(3);
        assert!(ls_function_full(&net, &rep, 0.0, &ub).unwrap().abs() < 1e-14);
        let h = 1e-4;
        let fx = (ls_function_full(&net, &rep, h, &ub).unwrap() - ls_function_full(&net, &rep, -h, &ub).unwrap())
            / (2.0 * h);
        assert!(fx.abs() < 1e-6);
        assert!(ls_function_reduced(&net, &rep, 0.0, &ub).unwrap().abs() < 1e-14);
    }

    #[test]
    fn closed_form_example_values() {
        let c = ls_coefficients_closed_form(&fixtures::fig1_with(0.5, 0.5)).unwrap();
        assert_relative_eq!(c.f_xx, -4.0 * 0.5f64.tanh(), epsilon = 1e-12);
        assert_relative_eq!(c.f_lambdax, -4.0, epsilon = 1e-12);
        let c0 = ls_coefficients_closed_form(&fixtures::fig1_with(0.5, 0.0)).unwrap();
        assert!(c0.f_xx.abs() < 1e-14);
        assert_relative_eq!(c0.f_xxx, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_cubic_sign() {
        for c in [0.4, -0.4] {
            let co = ls_coefficients_closed_form(&fixtures::fig1_cubic(0.5, c)).unwrap();
            assert_eq!(co.f_xx, 0.0);
            // g''' = -6c, r = 2
            assert_relative_eq!(co.f_xxx, 6.0 * c * 8.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn fd_matches_closed_form_on_example() {
        let (net, rep) = fig1_report(0.5, 0.5);
        let rep = rep.scaled_to_edge(&net, fixtures::FIG1_NEGATIVE_EDGE).unwrap();
        let path = ParameterPath::default_for(&net, &rep).unwrap();
        let fd = ls_coefficients_fd(&net, &rep, &path, &FdOptions::default()).unwrap();
        let cf = ls_coefficients_closed_form(&net).unwrap();
        assert_relative_eq!(fd.f_xx, cf.f_xx, max_relative = 1e-3);
        assert_relative_eq!(fd.f_lambdax, cf.f_lambdax, max_relative = 1e-3);
        assert!(fd.f.abs() < 1e-12 && fd.f_x.abs() < 1e-8 && fd.f_lambda.abs() < 1e-8);
    }

    #[test]
    fn classification_rules() {
        let zero = LsCoefficients {
            f: 0.0,
            f_x: 0.0,
            f_lambda: 0.0,
            f_xx: 0.0,
            f_lambdax: 0.0,
            f_xxx: 0.0,
            source: CoefficientSource::ClosedForm,
        };
        assert_eq!(classify_bifurcation(&zero, 1e-4).unwrap().kind, BifurcationKind::HighCodimension);
        let tc = LsCoefficients { f_xx: -1.8, f_lambdax: -4.0, ..zero };
        assert_eq!(classify_bifurcation(&tc, 1e-4).unwrap().kind, BifurcationKind::Transcritical);
        let sup = LsCoefficients { f_xxx: 4.0, f_lambdax: -4.0, ..zero };
        assert_eq!(classify_bifurcation(&sup, 1e-4).unwrap().kind, BifurcationKind::PitchforkSupercritical);
        let sub = LsCoefficients { f_xxx: -4.0, f_lambdax: -4.0, ..zero };
        assert_eq!(classify_bifurcation(&sub, 1e-4).unwrap().kind, BifurcationKind::PitchforkSubcritical);
        let bad = LsCoefficients { f_x: 0.5, ..tc };
        assert!(matches!(classify_bifurcation(&bad, 1e-4), Err(Error::InconsistentCertificate(_))));
    }

    #[test]
    fn classification_ignores_eigenvector_sign() {
        let (net, rep) = fig1_report(0.5, 0.5);
        let path = ParameterPath::default_for(&net, &rep).unwrap();
        let flipped = rep.rescaled(&net, -1.0).unwrap();
        let a = ls_coefficients_fd(&net, &rep, &path, &FdOptions::default()).unwrap();
        let b = ls_coefficients_fd(&net, &flipped, &path, &FdOptions::default()).unwrap();
        assert_relative_eq!(a.f_xx, -b.f_xx, max_relative = 1e-6);
        assert_eq!(classify_bifurcation(&a, 1e-4).unwrap().kind, classify_bifurcation(&b, 1e-4).unwrap().kind);
    }

    #[test]
    fn linear_network_has_no_singularity_and_constant_gain() {
        let net = fixtures::linear_path(4);
        let u = DVector::from_vec(vec![1.0, 0.0, 0.0, -1.0]) / 2f64.sqrt();
        let g0 = ultrasensitivity_gain(&net, &DVector::zeros(4), &u).unwrap();
        let g1 = ultrasensitivity_gain(&net, &DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]), &u).unwrap();
        assert_relative_eq!(g0, g1, epsilon = 1e-12);
    }
}
