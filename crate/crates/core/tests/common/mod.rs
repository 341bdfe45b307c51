#![allow(dead_code)]

use nalgebra::DVector;
use netsing::graph::{Edge, SignedGraph};
use netsing::network::{EdgeSpec, ModelSpec, NetworkModel, Parameters, Scalar};
use netsing::singular_gain;
use netsing::singularity::{detect_singularity, SingularityReport};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random spanning tree plus extra edges, no repeated node pairs.
pub fn random_pairs(rng: &mut ChaCha8Rng, n: usize, extra: f64) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs = Vec::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        pairs.push((parent, order[k]));
    }
    for i in 0..n {
        for j in i + 1..n {
            let has = pairs.iter().any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i));
            if !has && rng.random_bool(extra) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

pub fn random_positive_graph(rng: &mut ChaCha8Rng, n: usize, unit: bool) -> SignedGraph {
    let edges = random_pairs(rng, n, 0.3)
        .into_iter()
        .map(|(a, b)| Edge::new(a, b, if unit { 1.0 } else { rng.random_range(0.5..2.0) }))
        .collect();
    SignedGraph::new(n, edges).unwrap()
}

/// Connected signed graph with roughly a quarter of the edges negative.
pub fn random_signed_graph(rng: &mut ChaCha8Rng, n: usize) -> SignedGraph {
    let edges = random_pairs(rng, n, 0.35)
        .into_iter()
        .map(|(a, b)| {
            let w: f64 = rng.random_range(0.2..2.0);
            Edge::new(a, b, if rng.random_bool(0.25) { -w } else { w })
        })
        .collect();
    SignedGraph::new(n, edges).unwrap()
}

/// Random resistor network with one tanh negative edge at its critical gain, so `z = 0`
/// is a singular equilibrium with invertible internal block. Parameters `k` and `beta`.
pub fn random_singular_network(rng: &mut ChaCha8Rng, n: usize, beta: f64) -> Option<(NetworkModel, SingularityReport)> {
    let pairs = random_pairs(rng, n, 0.3);
    let resist: Vec<f64> = pairs.iter().map(|_| rng.random_range(0.5..2.0)).collect();
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let plus =
        SignedGraph::new(n, pairs.iter().zip(&resist).map(|(&(a, b), r)| Edge::new(a, b, 1.0 / r)).collect()).ok()?;
    let k = singular_gain(&plus, i, j).ok()?.critical_gain;
    let nb = rng.random_range(2..n);
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    let terminals: Vec<usize> = nodes[..nb].to_vec();
    let mut edges: Vec<EdgeSpec> = pairs
        .iter()
        .zip(&resist)
        .map(|(&(a, b), &r)| EdgeSpec { tail: a, head: b, model: ModelSpec::Linear { resistance: Scalar::Value(r) } })
        .collect();
    edges.push(EdgeSpec {
        tail: i,
        head: j,
        model: ModelSpec::TanhNegative { gain: Scalar::Param("k".into()), beta: Scalar::Param("beta".into()) },
    });
    let params = Parameters::from([("k".to_string(), k), ("beta".to_string(), beta)]);
    let net = NetworkModel::new(n, edges, terminals, params).ok()?;
    let l = net.laplacian_at(&DVector::zeros(n)).ok()?;
    // keep the internal block comfortably invertible
    let c = net.partition().central();
    if !c.is_empty() {
        let lcc = nalgebra::DMatrix::from_fn(c.len(), c.len(), |a, b| l.matrix()[(c[a], c[b])]);
        if lcc.singular_values().min() < 0.2 {
            return None;
        }
    }
    let rep = detect_singularity(&net, &DVector::zeros(n), 1e-8).ok()?.report()?;
    if rep.a_b < 1e-2 {
        return None;
    }
    Some((net, rep))
}

/// Random connected network mixing resistors with tanh and cubic negative conductances,
/// all coefficients literal.
pub fn random_network(rng: &mut ChaCha8Rng, n: usize) -> NetworkModel {
    let edges = random_pairs(rng, n, 0.3)
        .into_iter()
        .map(|(a, b)| {
            let model = match rng.random_range(0..4) {
                0 => ModelSpec::TanhNegative {
                    gain: Scalar::Value(rng.random_range(0.1..1.0)),
                    beta: Scalar::Value(rng.random_range(-1.0..1.0)),
                },
                1 => ModelSpec::CubicNegative {
                    gain: Scalar::Value(rng.random_range(0.1..1.0)),
                    cubic: Scalar::Value(rng.random_range(-1.0..1.0)),
                },
                _ => ModelSpec::Linear { resistance: Scalar::Value(rng.random_range(0.5..2.0)) },
            };
            EdgeSpec { tail: a, head: b, model }
        })
        .collect();
    let nb = rng.random_range(1..=n);
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    NetworkModel::new(n, edges, nodes[..nb].to_vec(), Parameters::new()).unwrap()
}

/// Resistor-only network with terminals drawn at random.
pub fn random_resistor_network(rng: &mut ChaCha8Rng, n: usize) -> NetworkModel {
    let edges = random_pairs(rng, n, 0.3)
        .into_iter()
        .map(|(a, b)| EdgeSpec {
            tail: a,
            head: b,
            model: ModelSpec::Linear { resistance: Scalar::Value(rng.random_range(0.5..2.0)) },
        })
        .collect();
    let nb = rng.random_range(1..=n);
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    NetworkModel::new(n, edges, nodes[..nb].to_vec(), Parameters::new()).unwrap()
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}
