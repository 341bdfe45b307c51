//! Bifurcation diagrams by pseudo-arclength continuation.
//!
//! Equilibria are followed in the grounded chart (last node held at zero) as curves of
//! `G(w, λ) = 0` in `R^n`, with a secant-free tangent predictor and a bordered Newton
//! corrector. Stability is read off the eigenvalues of `L(z)` on `1^⊥`, which is the
//! linearization of the gradient flow with equal capacitances at every node. Crossings
//! of zero by one of those eigenvalues are refined by bisection and classified as
//! branch points or folds; branch points spawn new branches.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::equilibrium::{check_conservation, drop_index, drop_row_col, insert_zero};
use crate::error::{Error, Result};
use crate::linalg::{self, newton, serde_dvector, NewtonOptions};
use crate::network::NetworkModel;
use crate::singularity::{detect_singularity, restricted_spectrum, ParameterPath};

pub const DEFAULT_TOL_STAB: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub lambda: f64,
    #[serde(with = "serde_dvector")]
    pub z: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationPath {
    pub lambda_range: (f64, f64),
    pub parameter_map: ParameterPath,
    pub initial_points: Vec<Seed>,
    pub step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Boundary direction used for the diagram ordinate `x = p^T z_B`. When absent the
    /// critical direction `v̂` of the first special point is used.
    #[serde(default)]
    pub projection: Option<Vec<f64>>,
}

impl ContinuationPath {
    pub fn new(lambda_range: (f64, f64), parameter_map: ParameterPath) -> Self {
        Self {
            lambda_range,
            parameter_map,
            initial_points: Vec::new(),
            step: 1e-2,
            min_step: 1e-6,
            max_step: 5e-2,
            projection: None,
        }
    }

    pub fn with_seed(mut self, lambda: f64, z: DVector<f64>) -> Self {
        self.initial_points.push(Seed { lambda, z });
        self
    }

    pub fn with_projection(mut self, p: DVector<f64>) -> Self {
        self.projection = Some(p.iter().copied().collect());
        self
    }

    fn validate(&self, net: &NetworkModel) -> Result<()> {
        let (a, b) = self.lambda_range;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid lambda range [{a}, {b}]")));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.step && self.step <= self.max_step) {
            return Err(Error::InvalidArgument("steps must satisfy 0 < min_step <= step <= max_step".into()));
        }
        self.parameter_map.validate(net)?;
        for s in &self.initial_points {
            if s.z.len() != net.n_nodes() {
                return Err(Error::DimensionMismatch { expected: net.n_nodes(), got: s.z.len() });
            }
        }
        if let Some(p) = &self.projection {
            let nb = net.partition().boundary().len();
            if p.len() != nb {
                return Err(Error::DimensionMismatch { expected: nb, got: p.len() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    pub newton: NewtonOptions,
    pub tol_stab: f64,
    pub branch_switching: bool,
    /// Offset along the second kernel direction when leaving a branch point.
    pub switch_delta: f64,
    pub max_points: usize,
    pub max_branches: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions { tol: 1e-10, max_iter: 15, max_halvings: 10, singular_tol: 1e-13 },
            tol_stab: DEFAULT_TOL_STAB,
            branch_switching: true,
            switch_delta: 1e-4,
            max_points: 20_000,
            max_branches: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    /// An eigenvalue on `1^⊥` lies within the stability tolerance of zero.
    Marginal,
}

impl Stability {
    pub fn is_stable(self) -> bool {
        self == Stability::Stable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub lambda: f64,
    /// Mean-zero node potentials.
    #[serde(with = "serde_dvector")]
    pub z: DVector<f64>,
    pub x: f64,
    pub stability: Stability,
}

impl Sample {
    pub fn stable(&self) -> bool {
        self.stability.is_stable()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    RangeBoundary,
    StepUnderflow,
    MaxPoints,
    ClosedLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    pub samples: Vec<Sample>,
    /// How the first and the last sample were reached.
    pub endpoints: (Termination, Termination),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecialKind {
    BranchPoint,
    Fold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialPoint {
    pub lambda: f64,
    #[serde(with = "serde_dvector")]
    pub z: DVector<f64>,
    pub x: f64,
    pub kind: SpecialKind,
    /// Branch on which the point was found.
    pub branch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub branches: Vec<Branch>,
    pub special_points: Vec<SpecialPoint>,
    /// Boundary direction used for `x`.
    #[serde(with = "serde_dvector")]
    pub projection: DVector<f64>,
}

impl BifurcationDiagram {
    pub fn branch_points(&self) -> impl Iterator<Item = &SpecialPoint> {
        self.special_points.iter().filter(|p| p.kind == SpecialKind::BranchPoint)
    }

    pub fn folds(&self) -> impl Iterator<Item = &SpecialPoint> {
        self.special_points.iter().filter(|p| p.kind == SpecialKind::Fold)
    }
}

/// Stability of the equilibrium `z` under the equal-capacitance gradient flow.
pub fn stability_of(net: &NetworkModel, z: &DVector<f64>, tol_stab: f64) -> Result<Stability> {
    let (spec, _) = restricted_spectrum(net, z)?;
    Ok(classify_spectrum(spec.values.as_slice(), tol_stab))
}

fn classify_spectrum(values: &[f64], tol_stab: f64) -> Stability {
    if values.iter().all(|&v| v > tol_stab) {
        Stability::Stable
    } else if values.iter().any(|&v| v < -tol_stab) {
        Stability::Unstable
    } else {
        Stability::Marginal
    }
}

/// `F(z, u(λ), α(λ)) = 0` in the grounded chart, unknowns `p = (w, λ)`.
struct System<'a> {
    net: &'a NetworkModel,
    path: &'a ParameterPath,
    ground: usize,
}

impl<'a> System<'a> {
    fn new(net: &'a NetworkModel, path: &'a ParameterPath) -> Self {
        Self { net, path, ground: net.n_nodes() - 1 }
    }

    fn dim(&self) -> usize {
        self.net.n_nodes()
    }

    fn lambda(p: &DVector<f64>) -> f64 {
        p[p.len() - 1]
    }

    fn z(&self, p: &DVector<f64>) -> DVector<f64> {
        insert_zero(&p.rows(0, p.len() - 1).into_owned(), self.ground)
    }

    fn point(&self, z: &DVector<f64>, lambda: f64) -> DVector<f64> {
        let w = drop_index(&z.add_scalar(-z[self.ground]), self.ground);
        let m = w.len();
        w.insert_row(m, lambda)
    }

    fn residual_at(&self, z: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
        let (net, ub) = self.path.at(self.net, lambda)?;
        let u = net.partition().embed_boundary(&ub);
        Ok(drop_index(&(net.nodal_currents(z)? - u), self.ground))
    }

    fn residual(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        self.residual_at(&self.z(p), Self::lambda(p))
    }

    /// `[G_w  G_λ]`, with `G_λ` by central differences.
    fn jacobian(&self, p: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let lambda = Self::lambda(p);
        let z = self.z(p);
        let (net, _) = self.path.at(self.net, lambda)?;
        let gw = drop_row_col(net.laplacian_at(&z)?.matrix(), self.ground);
        let h = 1e-6 * lambda.abs().max(1.0);
        let gl = (self.residual_at(&z, lambda + h)? - self.residual_at(&z, lambda - h)?) / (2.0 * h);
        let mut j = DMatrix::zeros(n - 1, n);
        j.view_mut((0, 0), (n - 1, n - 1)).copy_from(&gw);
        j.set_column(n - 1, &gl);
        Ok(j)
    }

    /// Newton on `G = 0` with the extra row `c^T (p - anchor) = 0`.
    fn correct(&self, pred: &DVector<f64>, c: &DVector<f64>, opts: &NewtonOptions) -> Result<(DVector<f64>, usize)> {
        let eval = |p: &DVector<f64>, want_jac: bool| {
            let g = self.residual(p)?;
            let m = g.len();
            let r = g.insert_row(m, c.dot(&(p - pred)));
            let jac = if want_jac {
                let j = self.jacobian(p)?;
                Some(j.insert_row(self.dim() - 1, 0.0).tap_row(self.dim() - 1, c))
            } else {
                None
            };
            Ok((r, jac))
        };
        let out = newton(eval, pred.clone(), opts)?;
        Ok((out.x, out.iterations))
    }

    /// Equilibrium at fixed `λ`.
    fn solve_at(&self, z0: &DVector<f64>, lambda: f64, opts: &NewtonOptions) -> Result<DVector<f64>> {
        let n = self.dim();
        let mut e = DVector::zeros(n);
        e[n - 1] = 1.0;
        let pred = self.point(z0, lambda);
        self.correct(&pred, &e, opts).map(|(p, _)| p)
    }

    /// Unit tangent with `orient^T t > 0`.
    fn tangent(&self, p: &DVector<f64>, orient: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        let a = self.jacobian(p)?.insert_row(n - 1, 0.0).tap_row(n - 1, orient);
        let mut rhs = DVector::zeros(n);
        rhs[n - 1] = 1.0;
        let t = a.lu().solve(&rhs).ok_or(Error::SingularJacobian { smallest: 0.0 })?;
        Ok(t.normalize())
    }

    /// Right null vectors of `[G_w G_λ]`, sorted by singular value.
    fn null_directions(&self, p: &DVector<f64>, count: usize) -> Result<Vec<DVector<f64>>> {
        let n = self.dim();
        let j = self.jacobian(p)?.insert_row(n - 1, 0.0);
        let svd = j.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        Ok(idx.iter().take(count).map(|&i| vt.row(i).transpose()).collect())
    }

    fn augmented_det(&self, p: &DVector<f64>, t: &DVector<f64>) -> Result<f64> {
        let n = self.dim();
        Ok(self.jacobian(p)?.insert_row(n - 1, 0.0).tap_row(n - 1, t).determinant())
    }

    fn spectrum(&self, p: &DVector<f64>) -> Result<Vec<f64>> {
        let (net, _) = self.path.at(self.net, Self::lambda(p))?;
        let (spec, _) = restricted_spectrum(&net, &self.z(p))?;
        Ok(spec.values.iter().copied().collect())
    }
}

trait TapRow {
    fn tap_row(self, i: usize, row: &DVector<f64>) -> Self;
}

impl TapRow for DMatrix<f64> {
    fn tap_row(mut self, i: usize, row: &DVector<f64>) -> Self {
        self.set_row(i, &row.transpose());
        self
    }
}

fn negative_count(values: &[f64]) -> usize {
    values.iter().filter(|&&v| v < 0.0).count()
}

struct Half {
    points: Vec<DVector<f64>>,
    end: Termination,
}

fn trace_half(
    sys: &System,
    path: &ContinuationPath,
    p0: &DVector<f64>,
    t0: &DVector<f64>,
    opts: &TraceOptions,
) -> Result<Half> {
    let (lo, hi) = path.lambda_range;
    let mut p = p0.clone();
    let mut t = t0.clone();
    let mut s = path.step;
    let mut points = Vec::new();
    let inside = |l: f64| l >= lo - 1e-14 && l <= hi + 1e-14;
    loop {
        if points.len() >= opts.max_points {
            return Ok(Half { points, end: Termination::MaxPoints });
        }
        let pred = &p + &t * s;
        let attempt = sys.correct(&pred, &t, &opts.newton).and_then(|(q, it)| {
            let tq = sys.tangent(&q, &t)?;
            Ok((q, it, tq))
        });
        let accepted = match attempt {
            Ok((q, it, tq)) if tq.dot(&t) > 0.9 && (&q - &p).norm() < 2.0 * s => Some((q, it, tq)),
            _ => None,
        };
        let Some((q, iterations, tq)) = accepted else {
            s *= 0.5;
            if s < path.min_step {
                return Ok(Half { points, end: Termination::StepUnderflow });
            }
            continue;
        };
        let lq = System::lambda(&q);
        if !inside(lq) {
            let lb = if lq > hi { hi } else { lo };
            let lp = System::lambda(&p);
            let theta = if (lq - lp).abs() > 0.0 { (lb - lp) / (lq - lp) } else { 1.0 };
            let guess = sys.z(&(&p + (&q - &p) * theta));
            match sys.solve_at(&guess, lb, &opts.newton) {
                Ok(pb) if (&pb - &p).norm() > 1e-12 => points.push(pb),
                Ok(_) => {}
                Err(_) => {
                    s *= 0.5;
                    if s < path.min_step {
                        return Ok(Half { points, end: Termination::StepUnderflow });
                    }
                    continue;
                }
            }
            return Ok(Half { points, end: Termination::RangeBoundary });
        }
        let closed = points.len() > 10 && (&q - p0).norm() < 0.5 * s;
        points.push(q.clone());
        if closed {
            return Ok(Half { points, end: Termination::ClosedLoop });
        }
        p = q;
        t = tq;
        if iterations <= 3 {
            s = (2.0 * s).min(path.max_step);
        }
    }
}

struct RawBranch {
    points: Vec<DVector<f64>>,
    endpoints: (Termination, Termination),
}

/// Traces the curve through `p0` in both directions along `t0`.
fn trace_through(
    sys: &System,
    path: &ContinuationPath,
    p0: &DVector<f64>,
    t0: &DVector<f64>,
    opts: &TraceOptions,
) -> Result<RawBranch> {
    let fwd = trace_half(sys, path, p0, t0, opts)?;
    let back = trace_half(sys, path, p0, &(-t0), opts)?;
    let (lo, hi) = path.lambda_range;
    let l0 = System::lambda(p0);
    let on_edge = (l0 - lo).abs() < 1e-12 || (l0 - hi).abs() < 1e-12;
    let start_end = if back.points.is_empty() && on_edge { Termination::RangeBoundary } else { back.end };
    let end_end = if fwd.points.is_empty() && on_edge { Termination::RangeBoundary } else { fwd.end };
    if fwd.points.is_empty() && back.points.is_empty() {
        return Err(Error::StepUnderflow { min_step: path.min_step });
    }
    let mut points: Vec<DVector<f64>> = back.points.into_iter().rev().collect();
    points.push(p0.clone());
    points.extend(fwd.points);
    Ok(RawBranch { points, endpoints: (start_end, end_end) })
}

/// Bisection along the chord `a -> b` for a change in the number of negative
/// eigenvalues; each trial point is corrected back onto the curve.
fn refine(sys: &System, a: &DVector<f64>, b: &DVector<f64>, opts: &TraceOptions) -> Result<DVector<f64>> {
    let neg_a = negative_count(&sys.spectrum(a)?);
    let chord = b - a;
    let len = chord.norm();
    let c = &chord / len;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut best = b.clone();
    let fail = || Error::RefinementFailure { lambda: System::lambda(a) };
    for _ in 0..80 {
        if (hi - lo) * len < 1e-11 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let pred = a + &chord * mid;
        let (q, _) = sys.correct(&pred, &c, &opts.newton).map_err(|_| fail())?;
        if negative_count(&sys.spectrum(&q)?) == neg_a {
            lo = mid;
        } else {
            hi = mid;
            best = q;
        }
    }
    Ok(best)
}

/// Tangent at every point, oriented along the point order.
fn branch_tangents(sys: &System, pts: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let m = pts.len();
    (0..m)
        .map(|i| {
            let (a, b) = (if i > 0 { i - 1 } else { i }, if i + 1 < m { i + 1 } else { i });
            let chord = &pts[b] - &pts[a];
            let orient = if chord.norm() > 0.0 { chord } else { DVector::from_element(pts[i].len(), 1.0) };
            sys.tangent(&pts[i], &orient).or_else(|_| Ok(orient.normalize()))
        })
        .collect()
}

/// Refined point, its kind and the tangent there.
type RawSpecial = (DVector<f64>, SpecialKind, DVector<f64>);

fn special_points_raw(sys: &System, pts: &[DVector<f64>], opts: &TraceOptions) -> Result<Vec<RawSpecial>> {
    if pts.len() < 2 {
        return Ok(Vec::new());
    }
    let spectra: Vec<Vec<f64>> = pts.iter().map(|p| sys.spectrum(p)).collect::<Result<_>>()?;
    let marginal: Vec<bool> =
        spectra.iter().map(|s| classify_spectrum(s, opts.tol_stab) == Stability::Marginal).collect();
    let counts: Vec<usize> = spectra.iter().map(|s| negative_count(s)).collect();
    let tangents = branch_tangents(sys, pts)?;
    let mut out = Vec::new();
    for i in 0..pts.len() - 1 {
        if counts[i] == counts[i + 1] {
            continue;
        }
        let p = if marginal[i] {
            pts[i].clone()
        } else if marginal[i + 1] {
            pts[i + 1].clone()
        } else {
            refine(sys, &pts[i], &pts[i + 1], opts)?
        };
        // compare the augmented determinant on samples clear of the singular point
        let mut l = i;
        while marginal[l] && l > 0 {
            l -= 1;
        }
        let mut r = i + 1;
        while marginal[r] && r + 1 < pts.len() {
            r += 1;
        }
        let dl = sys.augmented_det(&pts[l], &tangents[l])?;
        let dr = sys.augmented_det(&pts[r], &tangents[r])?;
        let kind = if dl.signum() != dr.signum() { SpecialKind::BranchPoint } else { SpecialKind::Fold };
        let t = sys.tangent(&p, &tangents[i]).unwrap_or_else(|_| tangents[i].clone());
        out.push((p, kind, t));
    }
    Ok(out)
}

fn to_points(sys: &System, branch: &Branch) -> Vec<DVector<f64>> {
    branch.samples.iter().map(|s| sys.point(&s.z, s.lambda)).collect()
}

/// Locates branch points and folds between consecutive samples of `branch`.
pub fn detect_special_points(
    net: &NetworkModel,
    path: &ContinuationPath,
    branch: &Branch,
    opts: &TraceOptions,
) -> Result<Vec<SpecialPoint>> {
    let sys = System::new(net, &path.parameter_map);
    let proj = projection_or_default(net, path, &[]);
    let raw = special_points_raw(&sys, &to_points(&sys, branch), opts)?;
    Ok(raw
        .into_iter()
        .map(|(p, kind, _)| {
            let z = linalg::center(&sys.z(&p));
            SpecialPoint { lambda: System::lambda(&p), x: project(net, &proj, &z), z, kind, branch: branch.id }
        })
        .collect())
}

fn project(net: &NetworkModel, proj: &DVector<f64>, z: &DVector<f64>) -> f64 {
    proj.dot(&net.partition().gather_boundary(z))
}

fn projection_or_default(
    net: &NetworkModel,
    path: &ContinuationPath,
    found: &[(NetworkModel, DVector<f64>)],
) -> DVector<f64> {
    if let Some(p) = &path.projection {
        return DVector::from_column_slice(p);
    }
    for (n, z) in found {
        if let Ok(Some(rep)) = detect_singularity(n, z, 1e-6).map(|d| d.report()) {
            return rep.v_hat;
        }
    }
    let nb = net.partition().boundary().len();
    let mut e = DVector::zeros(nb);
    e[0] = 1.0;
    let c = linalg::center(&e);
    let nrm = c.norm();
    if nrm > 0.0 {
        c / nrm
    } else {
        e
    }
}

fn near(a: &DVector<f64>, b: &DVector<f64>, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

/// Whether every point of `cand` lies close to the polyline of `existing`.
fn covered(cand: &[DVector<f64>], existing: &[DVector<f64>], tol: f64) -> bool {
    cand.iter().all(|p| {
        existing.windows(2).any(|w| {
            let d = &w[1] - &w[0];
            let l2 = d.norm_squared();
            let t = if l2 > 0.0 { ((p - &w[0]).dot(&d) / l2).clamp(0.0, 1.0) } else { 0.0 };
            (p - (&w[0] + d * t)).norm() <= tol
        }) || existing.iter().any(|q| (p - q).norm() <= tol)
    })
}

/// Traces the bifurcation diagram from the seeds of `path`. Without seeds the tracer
/// starts from the equilibrium connected to `z = 0` at the lower end of the range.
pub fn trace(net: &NetworkModel, path: &ContinuationPath) -> Result<BifurcationDiagram> {
    trace_with(net, path, &TraceOptions::default())
}

pub fn trace_with(net: &NetworkModel, path: &ContinuationPath, opts: &TraceOptions) -> Result<BifurcationDiagram> {
    path.validate(net)?;
    check_conservation(&path.parameter_map.u_base)?;
    let sys = System::new(net, &path.parameter_map);
    let n = sys.dim();
    let seeds = if path.initial_points.is_empty() {
        vec![Seed { lambda: path.lambda_range.0, z: DVector::zeros(n) }]
    } else {
        path.initial_points.clone()
    };

    let mut raw: Vec<RawBranch> = Vec::new();
    for seed in &seeds {
        let p0 = sys
            .solve_at(&seed.z, seed.lambda, &opts.newton)
            .map_err(|_| Error::SeedDivergence { lambda: seed.lambda })?;
        if raw.iter().any(|b| covered(std::slice::from_ref(&p0), &b.points, 5e-3)) {
            continue;
        }
        let mut t0 = sys.null_directions(&p0, 1)?.remove(0);
        if t0[n - 1] < 0.0 {
            t0 = -t0;
        }
        let b = trace_through(&sys, path, &p0, &t0, opts)?;
        if raw.iter().any(|r| covered(&b.points, &r.points, 5e-3)) {
            continue;
        }
        raw.push(b);
    }

    let mut specials: Vec<(DVector<f64>, SpecialKind, usize)> = Vec::new();
    let mut switched: Vec<DVector<f64>> = Vec::new();
    let mut next = 0;
    while next < raw.len() {
        let found = special_points_raw(&sys, &raw[next].points, opts)?;
        for (p, kind, t) in found {
            if specials.iter().any(|(q, k, _)| *k == kind && near(q, &p, 1e-3)) {
                continue;
            }
            specials.push((p.clone(), kind, next));
            if kind != SpecialKind::BranchPoint || !opts.branch_switching || raw.len() >= opts.max_branches {
                continue;
            }
            if switched.iter().any(|q| near(q, &p, 1e-3)) {
                continue;
            }
            switched.push(p.clone());
            if let Some(b) = switch_branch(&sys, path, &p, &t, opts)? {
                if !raw.iter().any(|r| covered(&b.points, &r.points, 5e-3)) {
                    raw.push(b);
                }
            }
        }
        next += 1;
    }

    let found: Vec<(NetworkModel, DVector<f64>)> = specials
        .iter()
        .filter_map(|(p, _, _)| {
            let (nn, _) = path.parameter_map.at(net, System::lambda(p)).ok()?;
            Some((nn, linalg::center(&sys.z(p))))
        })
        .collect();
    let proj = projection_or_default(net, path, &found);

    let branches = raw
        .iter()
        .enumerate()
        .map(|(id, b)| {
            let samples = b
                .points
                .iter()
                .map(|p| {
                    let z = linalg::center(&sys.z(p));
                    let lambda = System::lambda(p);
                    let stability = classify_spectrum(&sys.spectrum(p)?, opts.tol_stab);
                    Ok(Sample { lambda, x: project(net, &proj, &z), z, stability })
                })
                .collect::<Result<Vec<Sample>>>()?;
            let mut branch = Branch { id, samples, endpoints: b.endpoints };
            // read every branch from its lower-λ end
            if let (Some(first), Some(last)) = (branch.samples.first(), branch.samples.last()) {
                if last.lambda < first.lambda {
                    branch.samples.reverse();
                    branch.endpoints = (branch.endpoints.1, branch.endpoints.0);
                }
            }
            Ok(branch)
        })
        .collect::<Result<Vec<_>>>()?;
    let special_points = specials
        .into_iter()
        .map(|(p, kind, branch)| {
            let z = linalg::center(&sys.z(&p));
            SpecialPoint { lambda: System::lambda(&p), x: project(net, &proj, &z), z, kind, branch }
        })
        .collect();
    Ok(BifurcationDiagram { branches, special_points, projection: proj })
}

/// Starts the second branch through the branch point `p` with known tangent `t`.
fn switch_branch(
    sys: &System,
    path: &ContinuationPath,
    p: &DVector<f64>,
    t: &DVector<f64>,
    opts: &TraceOptions,
) -> Result<Option<RawBranch>> {
    let kernel = sys.null_directions(p, 2)?;
    // component of the two-dimensional kernel orthogonal to the known tangent
    let mut d =
        kernel.iter().map(|k| k - t * t.dot(k)).max_by(|a, b| a.norm().total_cmp(&b.norm())).expect("two directions");
    if d.norm() < 1e-8 {
        return Ok(None);
    }
    d = d.normalize();
    let mut halves = Vec::new();
    for sign in [1.0, -1.0] {
        let dir = &d * sign;
        let pred = p + &dir * opts.switch_delta;
        let Ok((q, _)) = sys.correct(&pred, &dir, &opts.newton) else {
            halves.push(Half { points: Vec::new(), end: Termination::StepUnderflow });
            continue;
        };
        let tq = sys.tangent(&q, &dir)?;
        let mut h = trace_half(sys, path, &q, &tq, opts)?;
        h.points.insert(0, q);
        halves.push(h);
    }
    let fwd = halves.remove(0);
    let back = halves.remove(0);
    if fwd.points.len() + back.points.len() < 2 {
        return Ok(None);
    }
    let mut points: Vec<DVector<f64>> = back.points.into_iter().rev().collect();
    points.push(p.clone());
    points.extend(fwd.points);
    Ok(Some(RawBranch { points, endpoints: (back.end, fwd.end) }))
}

/// Equilibria of `branch` at the requested parameter values, one per pass of the branch
/// through each value, corrected at fixed `λ`.
pub fn resample_branch(
    net: &NetworkModel,
    path: &ContinuationPath,
    branch: &Branch,
    lambdas: &[f64],
    opts: &TraceOptions,
) -> Result<Vec<Sample>> {
    let sys = System::new(net, &path.parameter_map);
    let proj = path
        .projection
        .as_ref()
        .map(|p| DVector::from_column_slice(p))
        .unwrap_or_else(|| projection_or_default(net, path, &[]));
    let mut out = Vec::new();
    for &lam in lambdas {
        for w in branch.samples.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let (la, lb) = (a.lambda, b.lambda);
            let within = (la <= lam && lam < lb)
                || (lb < lam && lam <= la)
                || (lam == lb && w[1] == *branch.samples.last().unwrap());
            if !within {
                continue;
            }
            let theta = if lb != la { (lam - la) / (lb - la) } else { 0.0 };
            let guess = &a.z + (&b.z - &a.z) * theta;
            let p = sys.solve_at(&guess, lam, &opts.newton)?;
            let z = linalg::center(&sys.z(&p));
            let stability = classify_spectrum(&sys.spectrum(&p)?, opts.tol_stab);
            out.push(Sample { lambda: lam, x: project(net, &proj, &z), z, stability });
        }
    }
    Ok(out)
}

/// Sorted ordinates `x` of all branch passes through each `λ` of `lambdas`.
pub fn diagram_sections(
    net: &NetworkModel,
    path: &ContinuationPath,
    diagram: &BifurcationDiagram,
    lambdas: &[f64],
    opts: &TraceOptions,
) -> Result<Vec<Vec<f64>>> {
    let mut path = path.clone();
    path.projection = Some(diagram.projection.iter().copied().collect());
    let mut sections = vec![Vec::new(); lambdas.len()];
    for b in &diagram.branches {
        for s in resample_branch(net, &path, b, lambdas, opts)? {
            let k = lambdas.iter().position(|&l| l == s.lambda).expect("requested lambda");
            sections[k].push(s.x);
        }
    }
    for s in &mut sections {
        s.sort_by(f64::total_cmp);
        s.dedup_by(|a, b| (*a - *b).abs() < 1e-7);
    }
    Ok(sections)
}

/// Boundary-current scenarios of the three panels of the example diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fig2Panel {
    /// No boundary current.
    Top,
    /// Small current `1e-2 v̂` along the critical direction.
    Center,
    /// Current of magnitude 0.5 along `(0, 1, -1)/√2`, orthogonal to `v̂`.
    Bottom,
}

impl std::str::FromStr for Fig2Panel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2-top" | "top" => Ok(Fig2Panel::Top),
            "fig2-center" | "center" => Ok(Fig2Panel::Center),
            "fig2-bottom" | "bottom" => Ok(Fig2Panel::Bottom),
            other => Err(Error::InvalidArgument(format!("unknown preset `{other}`"))),
        }
    }
}

/// Range of the gain `k` in the example diagrams.
pub const FIG2_RANGE: (f64, f64) = (0.3, 0.7);

/// Boundary currents of a panel for a network whose critical boundary direction is `v_hat`.
pub fn fig2_currents(panel: Fig2Panel, v_hat: &DVector<f64>) -> DVector<f64> {
    match panel {
        Fig2Panel::Top => DVector::zeros(v_hat.len()),
        Fig2Panel::Center => v_hat * 1e-2,
        Fig2Panel::Bottom => {
            let mut u = DVector::zeros(v_hat.len());
            u[1] = 1.0;
            u[2] = -1.0;
            u * (0.5 / 2f64.sqrt())
        }
    }
}

/// Diagram of a panel for a network shaped like the example (gain parameter `k`, at
/// least three terminals, singular at `z = 0` for `k = 0.5`). With a single negative edge
/// `v̂` is oriented like the boundary part of `L+† e_ij`. The top panel is traced
/// from the origin; the other panels are seeded from the endpoints of the top diagram.
pub fn fig2_diagram(net: &NetworkModel, panel: Fig2Panel) -> Result<(ContinuationPath, BifurcationDiagram)> {
    use crate::network::ParamTarget;
    let singular = net.with_parameter("k", 0.5)?;
    let rep = detect_singularity(&singular, &DVector::zeros(net.n_nodes()), linalg::DEFAULT_RANK_TOL)?
        .report()
        .ok_or_else(|| Error::InvalidArgument("network is not singular at k = 0.5".into()))?;
    // orient v̂ like the boundary part of L+† e_ij of the negative edge
    let rep = match singular.negative_edges().as_slice() {
        [e] => rep.scaled_to_edge(&singular, *e)?,
        _ => rep,
    };
    let nb = net.partition().boundary().len();
    if nb < 3 {
        return Err(Error::InvalidArgument("the example panels need three terminals".into()));
    }
    let base = ParameterPath::parameter(ParamTarget::Named("k".into()), 0.0, nb);
    let top = ContinuationPath::new(FIG2_RANGE, base.clone()).with_projection(rep.v_hat.clone());
    let top_diagram = trace(net, &top)?;
    if panel == Fig2Panel::Top {
        return Ok((top, top_diagram));
    }
    let mut path = ContinuationPath::new(FIG2_RANGE, base.with_currents(fig2_currents(panel, &rep.v_hat)))
        .with_projection(rep.v_hat.clone());
    for b in &top_diagram.branches {
        for s in [b.samples.first(), b.samples.last()].into_iter().flatten() {
            path.initial_points.push(Seed { lambda: s.lambda, z: s.z.clone() });
        }
    }
    let diagram = trace(net, &path)?;
    Ok((path, diagram))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn stability_examples() {
        let z = DVector::zeros(5);
        assert_eq!(stability_of(&fixtures::fig1_with(0.4, 0.5), &z, DEFAULT_TOL_STAB).unwrap(), Stability::Stable);
        assert_eq!(stability_of(&fixtures::fig1_with(0.6, 0.5), &z, DEFAULT_TOL_STAB).unwrap(), Stability::Unstable);
        assert_eq!(stability_of(&fixtures::fig1_with(0.5, 0.5), &z, DEFAULT_TOL_STAB).unwrap(), Stability::Marginal);
        let lin = fixtures::linear_path(4);
        let z = DVector::from_vec(vec![1.0, -3.0, 0.2, 2.0]);
        assert!(stability_of(&lin, &z, DEFAULT_TOL_STAB).unwrap().is_stable());
    }

    #[test]
    fn linear_branch_has_no_special_points() {
        // λ scales the current through a resistor path; the branch is a straight line
        let net = fixtures::linear_path(3);
        let pm = ParameterPath::currents(DVector::zeros(2), DVector::from_vec(vec![1.0, -1.0]));
        let path = ContinuationPath::new((0.0, 1.0), pm);
        let d = trace(&net, &path).unwrap();
        assert_eq!(d.branches.len(), 1);
        assert!(d.special_points.is_empty());
        let b = &d.branches[0];
        assert_eq!(b.endpoints, (Termination::RangeBoundary, Termination::RangeBoundary));
        assert_eq!(b.samples.last().unwrap().lambda, 1.0);
        for s in &b.samples {
            // end-to-end resistance 2
            assert!((s.z[0] - s.z[2] - 2.0 * s.lambda).abs() < 1e-10);
        }
    }

    #[test]
    fn invalid_range_is_rejected() {
        let net = fixtures::fig1();
        let pm = ParameterPath::parameter(crate::network::ParamTarget::Named("k".into()), 0.0, 3);
        let path = ContinuationPath::new((0.7, 0.3), pm);
        assert!(matches!(trace(&net, &path), Err(Error::InvalidArgument(_))));
    }
}
