//! Python bindings for netsing.
//!
//! Reports come back as plain Python dicts with the same layout as the CLI's JSON.

use nalgebra::DVector;
use netsing::continuation::Fig2Panel;
use netsing::io::{self, BifurcateRequest, DiagramSidecar, ReduceOptions};
use netsing::linalg::DEFAULT_RANK_TOL;
use netsing::{fixtures, NetworkModel};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(netsing_py, NetsingError, PyValueError, "Error raised by the netsing core.");

fn to_py(e: netsing::Error) -> PyErr {
    NetsingError::new_err(e.to_string())
}

/// Serializes through JSON so that Python sees the CLI layout.
fn to_dict<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| NetsingError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// A signed nonlinear resistive network.
#[pyclass(name = "Network", frozen)]
struct PyNetwork {
    inner: NetworkModel,
}

#[pymethods]
impl PyNetwork {
    /// Parses a network file given as a JSON string.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        io::parse_network_str(text).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        io::parse_network(&path).map(|inner| Self { inner }).map_err(to_py)
    }

    /// The five-node example with a tanh negative edge between nodes 2 and 4.
    #[staticmethod]
    #[pyo3(signature = (k = 0.5, beta = 0.5))]
    fn example(k: f64, beta: f64) -> PyResult<Self> {
        let net = fixtures::fig1();
        net.with_parameter("k", k)
            .and_then(|n| n.with_parameter("beta", beta))
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn to_json(&self) -> String {
        io::emit_network(&self.inner)
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    /// 1-based terminal labels.
    #[getter]
    fn terminals(&self) -> Vec<usize> {
        self.inner.partition().boundary().iter().map(|t| t + 1).collect()
    }

    #[getter]
    fn parameters(&self) -> netsing::Parameters {
        self.inner.parameters().clone()
    }

    fn with_parameter(&self, name: &str, value: f64) -> PyResult<Self> {
        self.inner.with_parameter(name, value).map(|inner| Self { inner }).map_err(to_py)
    }

    /// Content `K(z)`.
    fn potential(&self, z: Vec<f64>) -> PyResult<f64> {
        self.inner.potential(&DVector::from_vec(z)).map_err(to_py)
    }

    /// Net current leaving each node.
    fn nodal_currents(&self, z: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.nodal_currents(&DVector::from_vec(z)).map(|v| v.iter().copied().collect()).map_err(to_py)
    }

    /// Signed Laplacian `L(z)` as a list of rows.
    fn laplacian(&self, z: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        self.inner.laplacian_at(&DVector::from_vec(z)).map(|l| rows(l.matrix())).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(nodes={}, edges={}, terminals={:?})",
            self.inner.n_nodes(),
            self.inner.edges().len(),
            self.terminals()
        )
    }
}

/// Spectrum, corank and critical gain certificate of `L(0)`.
#[pyfunction]
#[pyo3(signature = (net, rank_tol = DEFAULT_RANK_TOL))]
fn analyze<'py>(py: Python<'py>, net: &PyNetwork, rank_tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let rep = io::analyze(&net.inner, rank_tol).map_err(to_py)?;
    let d = to_dict(py, &rep)?;
    d.set_item("summary", rep.summary())?;
    Ok(d)
}

/// Kron reduction onto the terminals at boundary potentials `zb` (default zero).
#[pyfunction]
#[pyo3(signature = (net, zb = None))]
fn kron<'py>(py: Python<'py>, net: &PyNetwork, zb: Option<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
    let zb = zb.map(DVector::from_vec);
    to_dict(py, &io::kron_network(&net.inner, zb.as_ref()).map_err(to_py)?)
}

/// Reduced-equation coefficients and bifurcation class at the singular point.
#[pyfunction]
#[pyo3(signature = (net, beta = None, param_dir = None, fd_step = None))]
fn reduce<'py>(
    py: Python<'py>,
    net: &PyNetwork,
    beta: Option<f64>,
    param_dir: Option<String>,
    fd_step: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = ReduceOptions { beta, param_dir, fd_step, ..Default::default() };
    to_dict(py, &io::reduce_network(&net.inner, &opts).map_err(to_py)?)
}

/// Traces a bifurcation diagram. Returns the CSV text and the sidecar dict.
#[pyfunction]
#[pyo3(signature = (net, preset = None, param = None, range = None, currents = None))]
fn bifurcate<'py>(
    py: Python<'py>,
    net: &PyNetwork,
    preset: Option<&str>,
    param: Option<String>,
    range: Option<(f64, f64)>,
    currents: Option<Vec<f64>>,
) -> PyResult<(String, Bound<'py, PyAny>)> {
    let preset = preset.map(|p| p.parse::<Fig2Panel>()).transpose().map_err(to_py)?;
    let req = BifurcateRequest { param, range, currents: currents.map(DVector::from_vec), seeds: Vec::new(), preset };
    let (path, diagram) = io::bifurcate(&net.inner, &req).map_err(to_py)?;
    let csv = io::diagram_csv(&diagram).map_err(to_py)?;
    Ok((csv, to_dict(py, &DiagramSidecar::new(&path, &diagram))?))
}

/// Effective resistance between nodes `i` and `j` (0-based) of a Laplacian given as rows.
#[pyfunction]
fn effective_resistance(laplacian: Vec<Vec<f64>>, i: usize, j: usize) -> PyResult<f64> {
    let n = laplacian.len();
    if laplacian.iter().any(|r| r.len() != n) {
        return Err(NetsingError::new_err("laplacian must be square"));
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |a, b| laplacian[a][b]);
    let l = netsing::Laplacian::from_matrix(m, DEFAULT_RANK_TOL).map_err(to_py)?;
    netsing::effective_resistance(&l, i, j).map_err(to_py)
}

#[pymodule]
fn netsing_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NetsingError", m.py().get_type::<NetsingError>())?;
    m.add("EXAMPLE_JSON", io::FIG1_JSON)?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(kron, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(bifurcate, m)?)?;
    m.add_function(wrap_pyfunction!(effective_resistance, m)?)?;
    Ok(())
}
