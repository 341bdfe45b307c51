//! Signed nonlinear networks.
//!
//! A network is a connected graph whose edges carry conductance models, a declared set
//! of terminal (boundary) nodes, and a vector of named parameters that edge models may
//! reference. The global potential `K(z) = Σ_j G_j((D^T z)_j)` generates the nodal
//! currents `∇K(z)` and the state-dependent Laplacian `L(z) = ∇²K(z)`.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::conductance::ConductanceModel;
use crate::error::{Error, Result};
use crate::graph::{Edge, Laplacian, NodePartition, SignedGraph};

pub type Parameters = BTreeMap<String, f64>;

/// A model coefficient: either a literal or a reference to a named parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Value(f64),
    Param(String),
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Value(v)
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Param(s.to_string())
    }
}

impl Scalar {
    fn resolve(&self, params: &Parameters) -> Result<f64> {
        match self {
            Scalar::Value(v) => Ok(*v),
            Scalar::Param(name) => params.get(name).copied().ok_or_else(|| Error::UnknownParameter(name.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Linear { resistance: Scalar },
    TanhNegative { gain: Scalar, beta: Scalar },
    CubicNegative { gain: Scalar, cubic: Scalar },
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Linear { .. } => "linear",
            ModelSpec::TanhNegative { .. } => "tanh_negative",
            ModelSpec::CubicNegative { .. } => "cubic_negative",
        }
    }

    fn resolve(&self, params: &Parameters) -> Result<ConductanceModel> {
        Ok(match self {
            ModelSpec::Linear { resistance } => ConductanceModel::Linear { resistance: resistance.resolve(params)? },
            ModelSpec::TanhNegative { gain, beta } => {
                ConductanceModel::TanhNegative { gain: gain.resolve(params)?, beta: beta.resolve(params)? }
            }
            ModelSpec::CubicNegative { gain, cubic } => {
                ConductanceModel::CubicNegative { gain: gain.resolve(params)?, cubic: cubic.resolve(params)? }
            }
        })
    }

    fn gain_mut(&mut self) -> Option<&mut Scalar> {
        match self {
            ModelSpec::Linear { .. } => None,
            ModelSpec::TanhNegative { gain, .. } | ModelSpec::CubicNegative { gain, .. } => Some(gain),
        }
    }

    pub fn gain(&self) -> Option<&Scalar> {
        match self {
            ModelSpec::Linear { .. } => None,
            ModelSpec::TanhNegative { gain, .. } | ModelSpec::CubicNegative { gain, .. } => Some(gain),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub tail: usize,
    pub head: usize,
    pub model: ModelSpec,
}

/// Something a bifurcation parameter can drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamTarget {
    Named(String),
    /// Gain of the negative conductance on the given edge.
    EdgeGain(usize),
}

fn validate_model(edge: usize, m: &ConductanceModel) -> Result<()> {
    let bad = |what: &str, v: f64| {
        Error::InvalidArgument(format!("edge {edge}: {what} must be positive and finite, got {v}"))
    };
    match *m {
        ConductanceModel::Linear { resistance } if !(resistance > 0.0 && resistance.is_finite()) => {
            Err(bad("resistance", resistance))
        }
        ConductanceModel::TanhNegative { gain, beta } => {
            if !(gain > 0.0 && gain.is_finite()) {
                Err(bad("gain", gain))
            } else if !beta.is_finite() {
                Err(Error::InvalidArgument(format!("edge {edge}: beta must be finite")))
            } else {
                Ok(())
            }
        }
        ConductanceModel::CubicNegative { gain, cubic } => {
            if !(gain > 0.0 && gain.is_finite()) {
                Err(bad("gain", gain))
            } else if !cubic.is_finite() {
                Err(Error::InvalidArgument(format!("edge {edge}: cubic coefficient must be finite")))
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

/// Immutable description of a signed nonlinear network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    edges: Vec<EdgeSpec>,
    partition: NodePartition,
    parameters: Parameters,
    models: Vec<ConductanceModel>,
    topology: SignedGraph,
}

impl NetworkModel {
    /// Builds a network from 0-based edge specs and terminal nodes.
    pub fn new(n_nodes: usize, edges: Vec<EdgeSpec>, terminals: Vec<usize>, parameters: Parameters) -> Result<Self> {
        let topology = SignedGraph::new(n_nodes, edges.iter().map(|e| Edge::new(e.tail, e.head, 1.0)).collect())?;
        if !topology.is_connected() {
            return Err(Error::DisconnectedGraph { components: topology.components() });
        }
        let partition = NodePartition::new(n_nodes, terminals)?;
        let models = Self::resolve_all(&edges, &parameters)?;
        Ok(Self { edges, partition, parameters, models, topology })
    }

    fn resolve_all(edges: &[EdgeSpec], params: &Parameters) -> Result<Vec<ConductanceModel>> {
        edges
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let m = e.model.resolve(params)?;
                validate_model(k, &m)?;
                Ok(m)
            })
            .collect()
    }

    pub fn n_nodes(&self) -> usize {
        self.topology.n_nodes()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    pub fn models(&self) -> &[ConductanceModel] {
        &self.models
    }

    pub fn partition(&self) -> &NodePartition {
        &self.partition
    }

    pub fn parameters(&self) -> &Parameters {
        &self.parameters
    }

    pub fn topology(&self) -> &SignedGraph {
        &self.topology
    }

    pub fn negative_edges(&self) -> Vec<usize> {
        (0..self.models.len()).filter(|&k| self.models[k].is_negative()).collect()
    }

    /// Copy with parameter `name` set to `value`.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        if !self.parameters.contains_key(name) {
            return Err(Error::UnknownParameter(name.to_string()));
        }
        let mut out = self.clone();
        out.parameters.insert(name.to_string(), value);
        out.models = Self::resolve_all(&out.edges, &out.parameters)?;
        Ok(out)
    }

    /// Copy with every given parameter overridden.
    pub fn with_parameters(&self, overrides: &Parameters) -> Result<Self> {
        let mut out = self.clone();
        for (name, value) in overrides {
            if !out.parameters.contains_key(name) {
                return Err(Error::UnknownParameter(name.clone()));
            }
            out.parameters.insert(name.clone(), *value);
        }
        out.models = Self::resolve_all(&out.edges, &out.parameters)?;
        Ok(out)
    }

    /// Copy with the gain of edge `edge` replaced by a literal.
    pub fn with_edge_gain(&self, edge: usize, value: f64) -> Result<Self> {
        let mut out = self.clone();
        let spec = out.edges.get_mut(edge).ok_or(Error::NoGain(edge))?;
        *spec.model.gain_mut().ok_or(Error::NoGain(edge))? = Scalar::Value(value);
        out.models = Self::resolve_all(&out.edges, &out.parameters)?;
        Ok(out)
    }

    pub fn target_value(&self, target: &ParamTarget) -> Result<f64> {
        match target {
            ParamTarget::Named(name) => {
                self.parameters.get(name).copied().ok_or_else(|| Error::UnknownParameter(name.clone()))
            }
            ParamTarget::EdgeGain(e) => self.models.get(*e).and_then(|m| m.gain()).ok_or(Error::NoGain(*e)),
        }
    }

    pub fn with_target(&self, target: &ParamTarget, value: f64) -> Result<Self> {
        match target {
            ParamTarget::Named(name) => self.with_parameter(name, value),
            ParamTarget::EdgeGain(e) => self.with_edge_gain(*e, value),
        }
    }

    /// The natural bifurcation parameter of a single-negative-edge network: the named
    /// parameter its gain refers to, or the edge gain itself.
    pub fn gain_target(&self, edge: usize) -> Result<ParamTarget> {
        match self.edges.get(edge).and_then(|e| e.model.gain()) {
            Some(Scalar::Param(name)) => Ok(ParamTarget::Named(name.clone())),
            Some(Scalar::Value(_)) => Ok(ParamTarget::EdgeGain(edge)),
            None => Err(Error::NoGain(edge)),
        }
    }

    fn check_len(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.n_nodes() {
            return Err(Error::DimensionMismatch { expected: self.n_nodes(), got: z.len() });
        }
        Ok(())
    }

    /// Edge voltages `y = D^T z`.
    pub fn edge_voltages(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.edges.len(), self.edges.iter().map(|e| z[e.tail] - z[e.head]))
    }

    /// `K(z)`.
    pub fn potential(&self, z: &DVector<f64>) -> Result<f64> {
        self.check_len(z)?;
        Ok(self.edges.iter().zip(&self.models).map(|(e, m)| m.potential(z[e.tail] - z[e.head])).sum())
    }

    /// `∇K(z) = D g(D^T z)`.
    pub fn nodal_currents(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(z)?;
        let mut u = DVector::zeros(self.n_nodes());
        for (e, m) in self.edges.iter().zip(&self.models) {
            let i = m.current(z[e.tail] - z[e.head]);
            u[e.tail] += i;
            u[e.head] -= i;
        }
        Ok(u)
    }

    /// Graph whose weights are the edge differential conductances at `z`.
    pub fn differential_graph(&self, z: &DVector<f64>) -> Result<SignedGraph> {
        self.check_len(z)?;
        let edges = self
            .edges
            .iter()
            .zip(&self.models)
            .map(|(e, m)| Edge::new(e.tail, e.head, m.derivative(z[e.tail] - z[e.head], 1)))
            .collect();
        SignedGraph::new(self.n_nodes(), edges)
    }

    /// `L(z) = ∇²K(z)`.
    pub fn laplacian_at(&self, z: &DVector<f64>) -> Result<Laplacian> {
        Ok(self.differential_graph(z)?.laplacian())
    }

    /// Graph of the linear resistors alone, with conductances `1/R`.
    pub fn positive_subgraph(&self) -> Result<SignedGraph> {
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .zip(&self.models)
            .filter_map(|(e, m)| match m {
                ConductanceModel::Linear { resistance } => Some(Edge::new(e.tail, e.head, 1.0 / resistance)),
                _ => None,
            })
            .collect();
        SignedGraph::new(self.n_nodes(), edges)
    }

    /// `F(z, u) = ∇K(z) - u`, with `u` given at the boundary nodes only.
    pub fn residual(&self, z: &DVector<f64>, u_b: &DVector<f64>) -> Result<DVector<f64>> {
        if u_b.len() != self.partition.boundary().len() {
            return Err(Error::DimensionMismatch { expected: self.partition.boundary().len(), got: u_b.len() });
        }
        Ok(self.nodal_currents(z)? - self.partition.embed_boundary(u_b))
    }
}

/// Potentials and nodal currents of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    /// Mean-zero node potentials.
    pub z: DVector<f64>,
    pub u: DVector<f64>,
}

impl NetworkState {
    pub fn at(net: &NetworkModel, z: &DVector<f64>) -> Result<Self> {
        let z = project_shift(z);
        let u = net.nodal_currents(&z)?;
        Ok(Self { z, u })
    }
}

pub fn potential_k(net: &NetworkModel, z: &DVector<f64>) -> Result<f64> {
    net.potential(z)
}

pub fn nodal_currents(net: &NetworkModel, z: &DVector<f64>) -> Result<DVector<f64>> {
    net.nodal_currents(z)
}

pub fn laplacian_at(net: &NetworkModel, z: &DVector<f64>) -> Result<Laplacian> {
    net.laplacian_at(z)
}

/// `Π x` with `Π = I - (1/n) 1 1^T`.
pub fn project_shift(x: &DVector<f64>) -> DVector<f64> {
    crate::linalg::center(x)
}
