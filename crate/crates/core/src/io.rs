//! Network files, diagram output and the reports behind the command-line tool.
//!
//! Network files are JSON with 1-based node labels:
//!
//! ```json
//! { "nodes": 3, "terminals": [1, 3],
//!   "edges": [ { "from": 1, "to": 2, "model": { "type": "linear", "resistance": 1 } },
//!              { "from": 2, "to": 3, "model": { "type": "tanh_negative", "gain": "k", "beta": 0.5 } } ],
//!   "parameters": { "k": 0.5 } }
//! ```
//!
//! Model coefficients are numbers or names of entries in `parameters`.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::continuation::{fig2_diagram, trace, BifurcationDiagram, ContinuationPath, Fig2Panel, Seed, SpecialKind};
use crate::equilibrium::{check_conservation, consistent_state, reduced_laplacian};
use crate::error::{Error, Result};
use crate::graph::{classify_definiteness, singular_gain, Definiteness};
use crate::linalg::{SymmetricSpectrum, DEFAULT_RANK_TOL};
use crate::network::{EdgeSpec, ModelSpec, NetworkModel, ParamTarget, Parameters, Scalar};
use crate::singularity::{
    classify_bifurcation, detect_singularity, ls_coefficients_closed_form, ls_coefficients_fd, BifurcationKind,
    FdOptions, LsCoefficients, ParameterPath, SingularityReport, DEFAULT_TOL_CLASS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub nodes: usize,
    pub terminals: Vec<usize>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Parameters::is_empty")]
    pub parameters: Parameters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub from: usize,
    pub to: usize,
    pub model: ModelSpec,
}

fn model_fields(m: &ModelSpec) -> [(&'static str, &Scalar); 2] {
    match m {
        ModelSpec::Linear { resistance } => [("resistance", resistance), ("resistance", resistance)],
        ModelSpec::TanhNegative { gain, beta } => [("gain", gain), ("beta", beta)],
        ModelSpec::CubicNegative { gain, cubic } => [("gain", gain), ("cubic", cubic)],
    }
}

impl NetworkFile {
    /// Validates the document and converts it to a 0-based model.
    pub fn into_model(self) -> Result<NetworkModel> {
        let n = self.nodes;
        if n == 0 {
            return Err(Error::schema("nodes", "must be at least 1"));
        }
        if self.terminals.is_empty() {
            return Err(Error::schema("terminals", "must not be empty"));
        }
        let mut seen = BTreeSet::new();
        for (i, &t) in self.terminals.iter().enumerate() {
            if t == 0 || t > n {
                return Err(Error::schema(format!("terminals[{i}]"), format!("node {t} is outside 1..={n}")));
            }
            if !seen.insert(t) {
                return Err(Error::schema(format!("terminals[{i}]"), format!("duplicate terminal {t}")));
            }
        }
        if self.edges.is_empty() {
            return Err(Error::schema("edges", "must not be empty"));
        }
        let mut pairs = BTreeSet::new();
        for (i, e) in self.edges.iter().enumerate() {
            for (field, node) in [("from", e.from), ("to", e.to)] {
                if node == 0 || node > n {
                    return Err(Error::schema(
                        format!("edges[{i}].{field}"),
                        format!("node {node} is outside 1..={n}"),
                    ));
                }
            }
            if e.from == e.to {
                return Err(Error::schema(format!("edges[{i}]"), format!("self-loop at node {}", e.from)));
            }
            for (field, s) in model_fields(&e.model) {
                let loc = || format!("edges[{i}].model.{field}");
                let v = match s {
                    Scalar::Value(v) => *v,
                    Scalar::Param(name) => *self
                        .parameters
                        .get(name)
                        .ok_or_else(|| Error::schema(loc(), format!("unknown parameter `{name}`")))?,
                };
                let ok = match field {
                    "resistance" | "gain" => v > 0.0 && v.is_finite(),
                    _ => v.is_finite(),
                };
                if !ok {
                    let need = if matches!(field, "resistance" | "gain") { "positive and finite" } else { "finite" };
                    return Err(Error::schema(loc(), format!("must be {need}, got {v}")));
                }
            }
            let kind = e.model.kind();
            if !pairs.insert((e.from.min(e.to), e.from.max(e.to), kind)) {
                return Err(Error::DuplicateEdgeModel { a: e.from.min(e.to), b: e.from.max(e.to), kind });
            }
        }
        let edges =
            self.edges.into_iter().map(|e| EdgeSpec { tail: e.from - 1, head: e.to - 1, model: e.model }).collect();
        let terminals = self.terminals.iter().map(|t| t - 1).collect();
        NetworkModel::new(n, edges, terminals, self.parameters)
    }

    pub fn from_model(net: &NetworkModel) -> Self {
        Self {
            nodes: net.n_nodes(),
            terminals: net.partition().boundary().iter().map(|t| t + 1).collect(),
            edges: net
                .edges()
                .iter()
                .map(|e| EdgeRecord { from: e.tail + 1, to: e.head + 1, model: e.model.clone() })
                .collect(),
            parameters: net.parameters().clone(),
        }
    }
}

fn schema_from_json<T>(r: std::result::Result<T, serde_path_to_error::Error<serde_json::Error>>) -> Result<T> {
    r.map_err(|e| {
        let path = e.path().to_string();
        let location = if path == "." { "document".to_string() } else { path };
        Error::Schema { location, message: e.into_inner().to_string() }
    })
}

fn from_json<'de, T: Deserialize<'de>>(text: &'de str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = schema_from_json(serde_path_to_error::deserialize(&mut de))?;
    de.end().map_err(|e| Error::schema("document", e.to_string()))?;
    Ok(value)
}

pub fn parse_network_str(text: &str) -> Result<NetworkModel> {
    from_json::<NetworkFile>(text)?.into_model()
}

pub fn parse_network(path: &Path) -> Result<NetworkModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_network_str(&text)
}

/// Pretty-printed network file; parsing it back yields an identical model.
pub fn emit_network(net: &NetworkModel) -> String {
    serde_json::to_string_pretty(&NetworkFile::from_model(net)).expect("network files always serialize")
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CurrentsFile {
    Plain(Vec<f64>),
    Keyed {
        #[serde(rename = "u_B")]
        u_b: Vec<f64>,
    },
}

/// Boundary currents given as a JSON array, or as `{"u_B": [...]}`.
pub fn parse_currents(text: &str) -> Result<DVector<f64>> {
    let v = match from_json::<CurrentsFile>(text)? {
        CurrentsFile::Plain(v) | CurrentsFile::Keyed { u_b: v } => v,
    };
    Ok(DVector::from_vec(v))
}

/// Seeds as a JSON array of `{"lambda": λ, "z": [z_1, ..., z_n]}`.
pub fn parse_seeds(text: &str) -> Result<Vec<Seed>> {
    from_json(text)
}

fn sci(v: f64) -> String {
    format!("{v:.11e}")
}

/// Writes one row per sample: `branch,lambda,x,stable,z1,...,zn`, twelve significant
/// digits, branches in id order and samples from the lower-λ end.
pub fn write_diagram_csv<W: Write>(diagram: &BifurcationDiagram, out: W) -> Result<()> {
    let n = diagram.branches.iter().flat_map(|b| b.samples.first()).map(|s| s.z.len()).next().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    let mut header = vec!["branch".to_string(), "lambda".into(), "x".into(), "stable".into()];
    header.extend((1..=n).map(|i| format!("z{i}")));
    w.write_record(&header).map_err(csv_err)?;
    let mut branches: Vec<_> = diagram.branches.iter().collect();
    branches.sort_by_key(|b| b.id);
    for b in branches {
        for s in &b.samples {
            let mut row = vec![b.id.to_string(), sci(s.lambda), sci(s.x), s.stable().to_string()];
            row.extend(s.z.iter().map(|&v| sci(v)));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn diagram_csv(diagram: &BifurcationDiagram) -> Result<String> {
    let mut buf = Vec::new();
    write_diagram_csv(diagram, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is ascii"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialPointRecord {
    pub branch: usize,
    pub kind: String,
    pub lambda: f64,
    pub x: f64,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    pub id: usize,
    pub samples: usize,
    pub lambda_start: f64,
    pub lambda_end: f64,
}

/// Companion of the diagram CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramSidecar {
    pub parameter: Option<String>,
    pub lambda_range: (f64, f64),
    #[serde(rename = "u_B")]
    pub u_b: Vec<f64>,
    pub projection: Vec<f64>,
    pub branches: Vec<BranchSummary>,
    pub special_points: Vec<SpecialPointRecord>,
}

impl DiagramSidecar {
    pub fn new(path: &ContinuationPath, diagram: &BifurcationDiagram) -> Self {
        let parameter = path.parameter_map.target.as_ref().map(|t| match t {
            ParamTarget::Named(name) => name.clone(),
            ParamTarget::EdgeGain(e) => format!("gain of edge {}", e + 1),
        });
        Self {
            parameter,
            lambda_range: path.lambda_range,
            u_b: path.parameter_map.u_base.iter().copied().collect(),
            projection: diagram.projection.iter().copied().collect(),
            branches: diagram
                .branches
                .iter()
                .map(|b| BranchSummary {
                    id: b.id,
                    samples: b.samples.len(),
                    lambda_start: b.samples.first().map_or(f64::NAN, |s| s.lambda),
                    lambda_end: b.samples.last().map_or(f64::NAN, |s| s.lambda),
                })
                .collect(),
            special_points: diagram
                .special_points
                .iter()
                .map(|p| SpecialPointRecord {
                    branch: p.branch,
                    kind: match p.kind {
                        SpecialKind::BranchPoint => "branch_point".into(),
                        SpecialKind::Fold => "fold".into(),
                    },
                    lambda: p.lambda,
                    x: p.x,
                    z: p.z.iter().copied().collect(),
                })
                .collect(),
        }
    }
}

/// Compact decimal with at most ten significant fractional digits.
pub fn format_number(v: f64) -> String {
    let s = format!("{v:.10}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// Critical gain certificate for a single negative edge, with 1-based labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCertificate {
    pub edge: (usize, usize),
    pub gain: f64,
    pub critical_gain: f64,
    pub effective_resistance: f64,
    pub kernel_vector: Vec<f64>,
    pub class: Definiteness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    /// Eigenvalues of `L(0)`, ascending.
    pub spectrum: Vec<f64>,
    pub corank: usize,
    pub negative_eigenvalues: usize,
    pub singular: bool,
    pub certificate: Option<GainCertificate>,
    pub notes: Vec<String>,
}

impl AnalyzeReport {
    /// One-line verdict, e.g. `SINGULAR, corank 2, k* = 0.5, r_24 = 2`.
    pub fn summary(&self) -> String {
        let mut s = if self.singular {
            format!("SINGULAR, corank {}", self.corank)
        } else if self.negative_eigenvalues > 0 {
            format!("regular, indefinite corank {}", self.corank)
        } else {
            format!("regular, PSD corank {}", self.corank)
        };
        if let (true, Some(c)) = (self.singular, &self.certificate) {
            s.push_str(&format!(
                ", k* = {}, r_{}{} = {}",
                format_number(c.critical_gain),
                c.edge.0,
                c.edge.1,
                format_number(c.effective_resistance)
            ));
        }
        s
    }
}

impl std::fmt::Display for AnalyzeReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{}", self.summary())?;
        let spec: Vec<String> = self.spectrum.iter().map(|v| format!("{v:.6e}")).collect();
        writeln!(f, "spectrum of L(0): [{}]", spec.join(", "))?;
        writeln!(f, "corank: {}", self.corank)?;
        if let Some(c) = &self.certificate {
            writeln!(f, "negative edge: ({}, {}), gain {}", c.edge.0, c.edge.1, format_number(c.gain))?;
            writeln!(f, "critical gain k* = 1/r = {}", format_number(c.critical_gain))?;
            writeln!(f, "effective resistance r_{}{} = {}", c.edge.0, c.edge.1, format_number(c.effective_resistance))?;
            let v: Vec<String> = c.kernel_vector.iter().map(|x| format!("{x:.6}")).collect();
            writeln!(f, "kernel vector v = [{}]", v.join(", "))?;
            writeln!(f, "class at this gain: {}", c.class)?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Spectrum, corank and definiteness of `L(0)`; for a single negative edge also the
/// critical gain certificate.
pub fn analyze(net: &NetworkModel, rank_tol: f64) -> Result<AnalyzeReport> {
    let z = DVector::zeros(net.n_nodes());
    let l = net.laplacian_at(&z)?;
    let spec = SymmetricSpectrum::new(l.matrix());
    let thr = spec.threshold(rank_tol);
    let mut spectrum: Vec<f64> = spec.values.iter().copied().collect();
    spectrum.sort_by(f64::total_cmp);
    let corank = spectrum.iter().filter(|v| v.abs() <= thr).count();
    let negative_eigenvalues = spectrum.iter().filter(|&&v| v < -thr).count();
    let mut notes = Vec::new();
    let certificate = match net.negative_edges().as_slice() {
        [e] => {
            let spec_e = &net.edges()[*e];
            let gain = -net.models()[*e].derivative(0.0, 1);
            let plus = net.positive_subgraph()?;
            if plus.is_connected() {
                let cert = singular_gain(&plus, spec_e.tail, spec_e.head)?;
                let class = classify_definiteness(&plus, spec_e.tail, spec_e.head, gain)?;
                Some(GainCertificate {
                    edge: (spec_e.tail + 1, spec_e.head + 1),
                    gain,
                    critical_gain: cert.critical_gain,
                    effective_resistance: cert.effective_resistance,
                    kernel_vector: cert.kernel_vector,
                    class,
                })
            } else {
                notes.push("resistor subgraph is disconnected; no critical gain certificate".into());
                None
            }
        }
        [] => None,
        many => {
            notes.push(format!("{} negative edges; certificate needs exactly one", many.len()));
            None
        }
    };
    Ok(AnalyzeReport { spectrum, corank, negative_eigenvalues, singular: corank >= 2, certificate, notes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KronEdge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Kron-reduced network at an operating point, as an edge list over the terminals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KronReport {
    pub nodes: usize,
    /// Original 1-based labels of the reduced nodes.
    pub terminals: Vec<usize>,
    /// Boundary potentials of the operating point.
    #[serde(rename = "z_B")]
    pub z_b: Vec<f64>,
    /// Edge weights `-L_ij`, 1-based in reduced numbering; negligible entries dropped.
    pub edges: Vec<KronEdge>,
    pub laplacian: Vec<Vec<f64>>,
}

/// Kron reduction of `L(z)` at the state consistent with boundary potentials `z_b`
/// (zero when absent).
pub fn kron_network(net: &NetworkModel, z_b: Option<&DVector<f64>>) -> Result<KronReport> {
    let nb = net.partition().boundary().len();
    let z_b = z_b.cloned().unwrap_or_else(|| DVector::zeros(nb));
    if z_b.len() != nb {
        return Err(Error::DimensionMismatch { expected: nb, got: z_b.len() });
    }
    consistent_state(net, &z_b)?;
    let red = reduced_laplacian(net, &z_b)?;
    let m = red.matrix();
    let drop = 1e-12 * m.amax().max(1.0);
    let mut edges = Vec::new();
    for i in 0..nb {
        for j in i + 1..nb {
            let w = -m[(i, j)];
            if w.abs() > drop {
                edges.push(KronEdge { from: i + 1, to: j + 1, weight: w });
            }
        }
    }
    Ok(KronReport {
        nodes: nb,
        terminals: net.partition().boundary().iter().map(|t| t + 1).collect(),
        z_b: z_b.iter().copied().collect(),
        edges,
        laplacian: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReduceOptions {
    /// Overrides the parameter `beta`.
    pub beta: Option<f64>,
    /// Parameter driven by `λ`; defaults to the gain of the negative edge.
    pub param_dir: Option<String>,
    pub fd_step: Option<f64>,
    pub fd_tol: f64,
    pub tol_class: f64,
    pub rank_tol: f64,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        Self {
            beta: None,
            param_dir: None,
            fd_step: None,
            fd_tol: FdOptions::default().tol,
            tol_class: DEFAULT_TOL_CLASS,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

/// Relative deviation `|fd - cf| / |cf|`, absolute where the closed form vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDeviation {
    pub f_xx: f64,
    pub f_lambdax: f64,
    pub f_xxx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceReport {
    pub parameter: String,
    /// Value of the parameter at the singular point.
    pub parameter_value: f64,
    pub singularity: SingularityReport,
    pub fd: LsCoefficients,
    pub closed_form: Option<LsCoefficients>,
    pub deviation: Option<CoefficientDeviation>,
    pub notice: Option<String>,
    pub classification: BifurcationKind,
    pub class_label: String,
}

fn deviation(fd: f64, cf: f64) -> f64 {
    if cf.abs() > 1e-12 {
        (fd - cf).abs() / cf.abs()
    } else {
        (fd - cf).abs()
    }
}

fn target_label(t: &ParamTarget) -> String {
    match t {
        ParamTarget::Named(n) => n.clone(),
        ParamTarget::EdgeGain(e) => format!("gain of edge {}", e + 1),
    }
}

/// Lyapunov-Schmidt coefficients at the singularity of `net` at `z = 0`, from finite
/// differences and, when its hypotheses hold, from the closed form; plus the class.
///
/// With a single negative edge the gain is first moved to its critical value.
pub fn reduce_network(net: &NetworkModel, opts: &ReduceOptions) -> Result<ReduceReport> {
    let mut net = net.clone();
    if let Some(beta) = opts.beta {
        net = net
            .with_parameter("beta", beta)
            .map_err(|_| Error::InvalidArgument("--beta needs a parameter named `beta`".into()))?;
    }
    let neg = net.negative_edges();
    let gain_target = match neg.as_slice() {
        [e] => Some((*e, net.gain_target(*e)?)),
        _ => None,
    };
    let target = match (&opts.param_dir, &gain_target) {
        (Some(name), _) => {
            if !net.parameters().contains_key(name) {
                return Err(Error::UnknownParameter(name.clone()));
            }
            ParamTarget::Named(name.clone())
        }
        (None, Some((_, t))) => t.clone(),
        (None, None) => {
            return Err(Error::HypothesesViolated(format!(
                "{} negative edges; choose the parameter direction explicitly",
                neg.len()
            )))
        }
    };
    if let Some((e, t)) = &gain_target {
        let spec = &net.edges()[*e];
        let plus = net.positive_subgraph()?;
        if plus.is_connected() {
            let cert = singular_gain(&plus, spec.tail, spec.head)?;
            net = net.with_target(t, cert.critical_gain)?;
        }
    }
    let z0 = DVector::zeros(net.n_nodes());
    let rep = detect_singularity(&net, &z0, opts.rank_tol)?
        .report()
        .ok_or_else(|| Error::HypothesesViolated("network is not singular at z = 0".into()))?;
    let rep = match &gain_target {
        Some((e, _)) => rep.scaled_to_edge(&net, *e)?,
        None => rep,
    };
    let value = net.target_value(&target)?;
    let path = ParameterPath::parameter(target.clone(), value, net.partition().boundary().len())
        .with_currents(rep.boundary_currents(&net));
    let fd_opts = FdOptions { step: opts.fd_step, tol: opts.fd_tol, ..FdOptions::default() };
    let fd = ls_coefficients_fd(&net, &rep, &path, &fd_opts)?;
    let (closed_form, notice) = match &gain_target {
        Some((_, t)) if *t == target => match ls_coefficients_closed_form(&net) {
            Ok(c) => (Some(c), None),
            Err(Error::HypothesesViolated(m)) => (None, Some(format!("closed form skipped: {m}"))),
            Err(e) => return Err(e),
        },
        Some(_) => (None, Some("closed form skipped: it applies to the gain direction only".to_string())),
        None => (None, Some(format!("closed form skipped: expected exactly one negative edge, found {}", neg.len()))),
    };
    let deviation = closed_form.as_ref().map(|c| CoefficientDeviation {
        f_xx: deviation(fd.f_xx, c.f_xx),
        f_lambdax: deviation(fd.f_lambdax, c.f_lambdax),
        f_xxx: deviation(fd.f_xxx, c.f_xxx),
    });
    let class = classify_bifurcation(&fd, opts.tol_class)?;
    let notice = match (&closed_form, notice) {
        (Some(_), None) if class.kind == BifurcationKind::Transcritical => {
            Some("closed-form f_xxx leaves out the quadratic correction and is exact only when f_xx = 0".to_string())
        }
        (_, n) => n,
    };
    Ok(ReduceReport {
        parameter: target_label(&target),
        parameter_value: value,
        singularity: rep,
        fd,
        closed_form,
        deviation,
        notice,
        classification: class.kind,
        class_label: class.kind.to_string(),
    })
}

impl std::fmt::Display for ReduceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "singular point: {} = {}", self.parameter, format_number(self.parameter_value))?;
        let row = |c: &LsCoefficients| {
            format!(
                "f_x = {:+.6e}  f_lambda = {:+.6e}  f_xx = {:+.6e}  f_lambdax = {:+.6e}  f_xxx = {:+.6e}",
                c.f_x, c.f_lambda, c.f_xx, c.f_lambdax, c.f_xxx
            )
        };
        writeln!(f, "finite differences: {}", row(&self.fd))?;
        if let Some(c) = &self.closed_form {
            writeln!(f, "closed form:        {}", row(c))?;
        }
        if let Some(d) = &self.deviation {
            writeln!(f, "deviation: f_xx {:.3e}, f_lambdax {:.3e}, f_xxx {:.3e}", d.f_xx, d.f_lambdax, d.f_xxx)?;
        }
        if let Some(n) = &self.notice {
            writeln!(f, "{n}")?;
        }
        writeln!(f, "classification: {}", self.class_label)
    }
}

/// What to trace for a bifurcation diagram.
#[derive(Debug, Clone, Default)]
pub struct BifurcateRequest {
    pub param: Option<String>,
    pub range: Option<(f64, f64)>,
    pub currents: Option<DVector<f64>>,
    pub seeds: Vec<Seed>,
    pub preset: Option<Fig2Panel>,
}

/// Traces the diagram described by `req`. A preset fixes parameter, range and currents.
pub fn bifurcate(net: &NetworkModel, req: &BifurcateRequest) -> Result<(ContinuationPath, BifurcationDiagram)> {
    if let Some(panel) = req.preset {
        if req.currents.is_some() || req.range.is_some() || !req.seeds.is_empty() {
            return Err(Error::InvalidArgument("a preset fixes range, currents and seeds".into()));
        }
        if req.param.as_deref().is_some_and(|p| p != "k") {
            return Err(Error::InvalidArgument("the presets drive the parameter `k`".into()));
        }
        return fig2_diagram(net, panel);
    }
    let nb = net.partition().boundary().len();
    let target = match &req.param {
        Some(name) => {
            if !net.parameters().contains_key(name) {
                return Err(Error::UnknownParameter(name.clone()));
            }
            ParamTarget::Named(name.clone())
        }
        None => match net.negative_edges().as_slice() {
            [e] => net.gain_target(*e)?,
            _ => return Err(Error::InvalidArgument("choose the continuation parameter with --param".into())),
        },
    };
    let range = req.range.ok_or_else(|| Error::InvalidArgument("a parameter range is required".into()))?;
    let u = req.currents.clone().unwrap_or_else(|| DVector::zeros(nb));
    if u.len() != nb {
        return Err(Error::DimensionMismatch { expected: nb, got: u.len() });
    }
    check_conservation(&u)?;
    for s in &req.seeds {
        if s.z.len() != net.n_nodes() {
            return Err(Error::DimensionMismatch { expected: net.n_nodes(), got: s.z.len() });
        }
    }
    let mut path = ContinuationPath::new(range, ParameterPath::parameter(target, 0.0, nb).with_currents(u));
    path.initial_points = req.seeds.clone();
    let diagram = trace(net, &path)?;
    Ok((path, diagram))
}

/// Process exit status for an error: 2 input or schema problems, 3 numerical failures,
/// 4 violated hypotheses.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Schema { .. }
        | Error::DuplicateEdgeModel { .. }
        | Error::DisconnectedGraph { .. }
        | Error::EmptyGraph
        | Error::NoNodes
        | Error::SelfLoop { .. }
        | Error::NodeOutOfRange { .. }
        | Error::InvalidPartition(_)
        | Error::UnknownParameter(_)
        | Error::NonConservingCurrents { .. }
        | Error::DimensionMismatch { .. }
        | Error::InvalidArgument(_)
        | Error::Io(_) => 2,
        Error::HypothesesViolated(_)
        | Error::NotExternallySingular
        | Error::NoGain(_)
        | Error::AmbiguousKernel { .. }
        | Error::DegenerateKernel { .. }
        | Error::InconsistentCertificate(_) => 4,
        Error::NotLaplacian(_)
        | Error::SingularInternalBlock { .. }
        | Error::NoConvergence { .. }
        | Error::SingularJacobian { .. }
        | Error::IllConditionedStencil { .. }
        | Error::SeedDivergence { .. }
        | Error::StepUnderflow { .. }
        | Error::RefinementFailure { .. } => 3,
    }
}

/// The bundled example network file.
pub const FIG1_JSON: &str = include_str!("../data/fig1.json");

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn path3() -> &'static str {
        r#"{"nodes": 3, "terminals": [1, 3], "edges": [
            {"from": 1, "to": 2, "model": {"type": "linear", "resistance": 1}},
            {"from": 2, "to": 3, "model": {"type": "linear", "resistance": 1.0}}]}"#
    }

    fn location(e: Error) -> String {
        match e {
            Error::Schema { location, .. } => location,
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn bundled_file_is_the_example() {
        assert_eq!(parse_network_str(FIG1_JSON).unwrap(), fixtures::fig1());
    }

    #[test]
    fn integer_literals_are_accepted() {
        let net = parse_network_str(path3()).unwrap();
        assert_eq!(net, fixtures::linear_path(3));
    }

    #[test]
    fn missing_terminals() {
        let text = r#"{"nodes": 2, "edges": [{"from": 1, "to": 2, "model": {"type": "linear", "resistance": 1}}]}"#;
        let err = parse_network_str(text).unwrap_err();
        assert!(err.to_string().contains("terminals"), "{err}");
        assert!(matches!(err, Error::Schema { .. }));
    }

    #[test]
    fn duplicate_terminal_location() {
        let text = path3().replace("[1, 3]", "[1, 1, 2]");
        let err = parse_network_str(&text).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        assert_eq!(location(err), "terminals[1]");
    }

    #[test]
    fn precise_locations() {
        let bad_type = path3().replace("\"linear\", \"resistance\": 1.0", "\"resistor\", \"resistance\": 1.0");
        assert_eq!(location(parse_network_str(&bad_type).unwrap_err()), "edges[1].model.type");
        let bad_node = path3().replace("\"to\": 3", "\"to\": 4");
        assert_eq!(location(parse_network_str(&bad_node).unwrap_err()), "edges[1].to");
        let bad_value = path3().replace("\"resistance\": 1.0", "\"resistance\": -1.0");
        assert_eq!(location(parse_network_str(&bad_value).unwrap_err()), "edges[1].model.resistance");
        let unknown = path3().replace("\"resistance\": 1.0", "\"resistance\": \"R\"");
        assert_eq!(location(parse_network_str(&unknown).unwrap_err()), "edges[1].model.resistance");
        let extra = path3().replace("\"nodes\": 3", "\"nodes\": 3, \"name\": \"x\"");
        assert!(matches!(parse_network_str(&extra).unwrap_err(), Error::Schema { .. }));
        let wrong = path3().replace("\"nodes\": 3", "\"nodes\": -3");
        assert_eq!(location(parse_network_str(&wrong).unwrap_err()), "nodes");
        let zero = path3().replace("[1, 3]", "[0, 3]");
        assert_eq!(location(parse_network_str(&zero).unwrap_err()), "terminals[0]");
    }

    #[test]
    fn duplicate_and_disconnected() {
        let dup = path3().replace(
            "{\"from\": 2, \"to\": 3",
            "{\"from\": 2, \"to\": 1, \"model\": {\"type\": \"linear\", \"resistance\": 2}}, {\"from\": 2, \"to\": 3",
        );
        assert_eq!(parse_network_str(&dup).unwrap_err(), Error::DuplicateEdgeModel { a: 1, b: 2, kind: "linear" });
        let text = r#"{"nodes": 4, "terminals": [1], "edges": [
            {"from": 1, "to": 2, "model": {"type": "linear", "resistance": 1}},
            {"from": 3, "to": 4, "model": {"type": "linear", "resistance": 1}}]}"#;
        assert_eq!(parse_network_str(text).unwrap_err(), Error::DisconnectedGraph { components: 2 });
    }

    #[test]
    fn round_trip_fixtures() {
        for net in [
            fixtures::fig1(),
            fixtures::fig1_with(0.1 + 0.2, -1.0 / 3.0),
            fixtures::fig1_cubic(0.5, 0.7),
            fixtures::linear_path(6),
        ] {
            let back = parse_network_str(&emit_network(&net)).unwrap();
            assert_eq!(back, net);
            for (a, b) in back.parameters().values().zip(net.parameters().values()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn analyze_verdicts() {
        let rep = analyze(&fixtures::fig1(), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rep.summary(), "SINGULAR, corank 2, k* = 0.5, r_24 = 2");
        let rep = analyze(&fixtures::fig1_with(0.3, 0.5), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rep.summary(), "regular, PSD corank 1");
        let rep = analyze(&fixtures::fig1_with(0.7, 0.5), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rep.summary(), "regular, indefinite corank 1");
        let rep = analyze(&fixtures::linear_path(4), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rep.summary(), "regular, PSD corank 1");
        assert!(rep.certificate.is_none() && rep.notes.is_empty());
    }

    #[test]
    fn kron_of_path_is_half_edge() {
        let rep = kron_network(&fixtures::linear_path(3), None).unwrap();
        assert_eq!(rep.edges.len(), 1);
        assert!((rep.edges[0].weight - 0.5).abs() < 1e-14);
        assert_eq!(rep.terminals, vec![1, 3]);
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.49999999999999994), "0.5");
        assert_eq!(format_number(2.0000000000000004), "2");
        assert_eq!(format_number(-1e-13), "0");
        assert_eq!(format_number(0.125), "0.125");
    }

    #[test]
    fn currents_and_seeds() {
        assert_eq!(parse_currents("[0.1, -0.1]").unwrap().as_slice(), &[0.1, -0.1]);
        assert_eq!(parse_currents(r#"{"u_B": [1, -1]}"#).unwrap().as_slice(), &[1.0, -1.0]);
        let seeds = parse_seeds(r#"[{"lambda": 0.3, "z": [0, 0, 0]}]"#).unwrap();
        assert_eq!(seeds[0].lambda, 0.3);
        assert_eq!(seeds[0].z.len(), 3);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::schema("nodes", "x")), 2);
        assert_eq!(exit_code(&Error::NonConservingCurrents { sum: 1.0 }), 2);
        assert_eq!(exit_code(&Error::StepUnderflow { min_step: 1e-6 }), 3);
        assert_eq!(exit_code(&Error::HypothesesViolated("x".into())), 4);
    }
}
