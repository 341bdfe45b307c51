//! Ready-made networks used by the examples, tests and the CLI presets.

use crate::network::{EdgeSpec, ModelSpec, NetworkModel, Parameters, Scalar};

fn resistor(tail: usize, head: usize) -> EdgeSpec {
    EdgeSpec { tail, head, model: ModelSpec::Linear { resistance: Scalar::Value(1.0) } }
}

/// Index of the negative edge in [`fig1`].
pub const FIG1_NEGATIVE_EDGE: usize = 5;

/// Five-node example: unit resistors 1-2, 1-4, 2-3, 2-5, 3-5 and a saturating negative
/// conductance from node 2 to node 4. Terminals are nodes 1, 2, 3. Gain and bias are the
/// parameters `k` and `beta`, both 0.5 by default. Node indices are 0-based here.
pub fn fig1() -> NetworkModel {
    fig1_with(0.5, 0.5)
}

pub fn fig1_with(k: f64, beta: f64) -> NetworkModel {
    let mut edges: Vec<EdgeSpec> =
        [(0, 1), (0, 3), (1, 2), (1, 4), (2, 4)].iter().map(|&(a, b)| resistor(a, b)).collect();
    edges.push(EdgeSpec {
        tail: 1,
        head: 3,
        model: ModelSpec::TanhNegative { gain: Scalar::Param("k".into()), beta: Scalar::Param("beta".into()) },
    });
    let params = Parameters::from([("k".to_string(), k), ("beta".to_string(), beta)]);
    NetworkModel::new(5, edges, vec![0, 1, 2], params).expect("fig1 is valid")
}

/// Same topology as [`fig1`] with a cubic negative conductance `-k (y - c y^3)`.
pub fn fig1_cubic(k: f64, cubic: f64) -> NetworkModel {
    let mut edges: Vec<EdgeSpec> =
        [(0, 1), (0, 3), (1, 2), (1, 4), (2, 4)].iter().map(|&(a, b)| resistor(a, b)).collect();
    edges.push(EdgeSpec {
        tail: 1,
        head: 3,
        model: ModelSpec::CubicNegative { gain: Scalar::Param("k".into()), cubic: Scalar::Param("c".into()) },
    });
    let params = Parameters::from([("k".to_string(), k), ("c".to_string(), cubic)]);
    NetworkModel::new(5, edges, vec![0, 1, 2], params).expect("fig1 is valid")
}

/// Unit-resistor path `0 - 1 - ... - (n-1)` with the two end nodes as terminals.
pub fn linear_path(n: usize) -> NetworkModel {
    let edges = (0..n - 1).map(|i| resistor(i, i + 1)).collect();
    NetworkModel::new(n, edges, vec![0, n - 1], Parameters::new()).expect("path is valid")
}
