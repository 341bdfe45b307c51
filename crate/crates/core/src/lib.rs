//! Terminal behavior of signed nonlinear resistive networks.
//!
//! The crate builds signed Laplacians, performs Kron reduction, detects network
//! singularities, evaluates the Lyapunov-Schmidt reduced scalar equation of the terminal
//! behavior, classifies the resulting bifurcations and traces bifurcation diagrams.
//!
//! Node indices are 0-based in the library. The JSON file format uses 1-based indices.

// `!(a < b)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conductance;
pub mod continuation;
pub mod equilibrium;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod network;
pub mod singularity;

pub use conductance::ConductanceModel;
pub use error::{Error, Result};
pub use graph::{
    assemble_laplacian, classify_definiteness, corank, effective_resistance, kron_reduce, pseudoinverse, singular_gain,
    Definiteness, Edge, Laplacian, NodePartition, SignedGraph, SingularGainCertificate,
};
pub use network::{EdgeSpec, ModelSpec, NetworkModel, NetworkState, ParamTarget, Parameters, Scalar};
