//! Equilibria of `F(z, u, α) = ∇K(z) - u = 0`.
//!
//! Internal nodes carry zero current, so for fixed boundary potentials the central
//! potentials solve `F_C = 0`; this defines the reduced terminal map and its Hessian,
//! the Kron-reduced Laplacian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{kron_reduce, Laplacian};
use crate::linalg::{self, newton, NewtonOptions};
use crate::network::{NetworkModel, NetworkState, Parameters};

/// Boundary currents must sum to zero within this tolerance.
pub const CONSERVATION_TOL: f64 = 1e-10;

fn check_boundary_len(net: &NetworkModel, z_b: &DVector<f64>) -> Result<()> {
    let nb = net.partition().boundary().len();
    if z_b.len() != nb {
        return Err(Error::DimensionMismatch { expected: nb, got: z_b.len() });
    }
    Ok(())
}

fn internal_singular(e: Error) -> Error {
    match e {
        Error::SingularJacobian { smallest } => Error::SingularInternalBlock { smallest },
        other => other,
    }
}

/// Central potentials `z̄_C(z_B)` on the branch connected to `guess`.
pub fn solve_internal_with(
    net: &NetworkModel,
    z_b: &DVector<f64>,
    guess: &DVector<f64>,
    opts: &NewtonOptions,
) -> Result<DVector<f64>> {
    check_boundary_len(net, z_b)?;
    let part = net.partition();
    let central = part.central();
    if guess.len() != central.len() {
        return Err(Error::DimensionMismatch { expected: central.len(), got: guess.len() });
    }
    if central.is_empty() {
        return Ok(DVector::zeros(0));
    }
    let eval = |zc: &DVector<f64>, want_jac: bool| {
        let z = part.scatter(z_b, zc);
        let r = part.gather_central(&net.nodal_currents(&z)?);
        let jac = if want_jac {
            let l = net.laplacian_at(&z)?;
            Some(part.block(l.matrix(), central, central))
        } else {
            None
        };
        Ok((r, jac))
    };
    newton(eval, guess.clone(), opts).map(|o| o.x).map_err(internal_singular)
}

pub fn solve_internal(net: &NetworkModel, z_b: &DVector<f64>, guess: &DVector<f64>) -> Result<DVector<f64>> {
    solve_internal_with(net, z_b, guess, &NewtonOptions::default())
}

/// Full potential vector `(z_B, z̄_C(z_B))`, starting the internal solve from zero.
pub fn consistent_state(net: &NetworkModel, z_b: &DVector<f64>) -> Result<DVector<f64>> {
    let zc = solve_internal(net, z_b, &DVector::zeros(net.partition().central().len()))?;
    Ok(net.partition().scatter(z_b, &zc))
}

/// Reduced terminal currents `∂K/∂z_B (z_B, z̄_C(z_B))`.
pub fn terminal_currents(net: &NetworkModel, z_b: &DVector<f64>) -> Result<DVector<f64>> {
    let z = consistent_state(net, z_b)?;
    Ok(net.partition().gather_boundary(&net.nodal_currents(&z)?))
}

/// `L̂(z_B)`, the Kron reduction of `L` at the consistent state.
pub fn reduced_laplacian(net: &NetworkModel, z_b: &DVector<f64>) -> Result<Laplacian> {
    let z = consistent_state(net, z_b)?;
    kron_reduce(&net.laplacian_at(&z)?, net.partition())
}

/// Reduced potential `K̂(z_B) = K(z_B, z̄_C(z_B))`.
pub fn reduced_potential(net: &NetworkModel, z_b: &DVector<f64>) -> Result<f64> {
    net.potential(&consistent_state(net, z_b)?)
}

#[derive(Debug, Clone)]
pub struct EquilibriumProblem {
    pub net: NetworkModel,
    pub boundary_currents: DVector<f64>,
    pub parameter_overrides: Parameters,
    /// Defaults to zero.
    pub initial_guess: Option<DVector<f64>>,
    /// Node held at zero potential during the solve; defaults to the last node.
    pub ground: Option<usize>,
    pub newton: NewtonOptions,
}

impl EquilibriumProblem {
    pub fn new(net: NetworkModel, boundary_currents: DVector<f64>) -> Self {
        Self {
            net,
            boundary_currents,
            parameter_overrides: Parameters::new(),
            initial_guess: None,
            ground: None,
            newton: NewtonOptions::default(),
        }
    }

    pub fn with_guess(mut self, z0: DVector<f64>) -> Self {
        self.initial_guess = Some(z0);
        self
    }

    pub fn with_ground(mut self, node: usize) -> Self {
        self.ground = Some(node);
        self
    }

    pub fn with_overrides(mut self, overrides: Parameters) -> Self {
        self.parameter_overrides = overrides;
        self
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub state: NetworkState,
    pub residual_norm: f64,
    pub newton_iters: usize,
    /// 2-norm condition number of `L_CC` at the solution; 1 without central nodes.
    pub internal_jacobian_condition: f64,
}

impl EquilibriumSolution {
    pub fn z(&self) -> &DVector<f64> {
        &self.state.z
    }
}

/// Checks `Σ u_B = 0`.
pub fn check_conservation(u_b: &DVector<f64>) -> Result<()> {
    let sum = u_b.sum();
    if !(sum.abs() <= CONSERVATION_TOL) {
        return Err(Error::NonConservingCurrents { sum });
    }
    Ok(())
}

/// Removes index `g` from a vector.
pub(crate) fn drop_index(v: &DVector<f64>, g: usize) -> DVector<f64> {
    DVector::from_iterator(v.len() - 1, v.iter().enumerate().filter(|(i, _)| *i != g).map(|(_, x)| *x))
}

pub(crate) fn insert_zero(v: &DVector<f64>, g: usize) -> DVector<f64> {
    let mut out = DVector::zeros(v.len() + 1);
    let mut k = 0;
    for i in 0..out.len() {
        if i != g {
            out[i] = v[k];
            k += 1;
        }
    }
    out
}

pub(crate) fn drop_row_col(m: &DMatrix<f64>, g: usize) -> DMatrix<f64> {
    m.clone().remove_row(g).remove_column(g)
}

/// Grounded Newton solve of `∇K(z) = (u_B, 0)`, re-centered to the mean-zero gauge.
pub fn solve_full(problem: &EquilibriumProblem) -> Result<EquilibriumSolution> {
    let net = if problem.parameter_overrides.is_empty() {
        problem.net.clone()
    } else {
        problem.net.with_parameters(&problem.parameter_overrides)?
    };
    let n = net.n_nodes();
    let nb = net.partition().boundary().len();
    if problem.boundary_currents.len() != nb {
        return Err(Error::DimensionMismatch { expected: nb, got: problem.boundary_currents.len() });
    }
    check_conservation(&problem.boundary_currents)?;
    let g = problem.ground.unwrap_or(n - 1);
    if g >= n {
        return Err(Error::InvalidArgument(format!("ground node {g} out of range")));
    }
    let u = net.partition().embed_boundary(&problem.boundary_currents);
    let z0 = match &problem.initial_guess {
        Some(z) if z.len() != n => return Err(Error::DimensionMismatch { expected: n, got: z.len() }),
        Some(z) => z.add_scalar(-z[g]),
        None => DVector::zeros(n),
    };
    let eval = |w: &DVector<f64>, want_jac: bool| {
        let z = insert_zero(w, g);
        let r = drop_index(&(net.nodal_currents(&z)? - &u), g);
        let jac = if want_jac { Some(drop_row_col(net.laplacian_at(&z)?.matrix(), g)) } else { None };
        Ok((r, jac))
    };
    let out = newton(eval, drop_index(&z0, g), &problem.newton)?;
    let z = insert_zero(&out.x, g);
    let state = NetworkState::at(&net, &z)?;
    let residual_norm = linalg::inf_norm(&(&state.u - &u));
    let internal_jacobian_condition = internal_condition(&net, &state.z)?;
    Ok(EquilibriumSolution { state, residual_norm, newton_iters: out.iterations, internal_jacobian_condition })
}

fn internal_condition(net: &NetworkModel, z: &DVector<f64>) -> Result<f64> {
    let c = net.partition().central();
    if c.is_empty() {
        return Ok(1.0);
    }
    let lcc = net.partition().block(net.laplacian_at(z)?.matrix(), c, c);
    let sv = lcc.singular_values();
    let smin = sv.min();
    Ok(if smin > 0.0 { sv.max() / smin } else { f64::INFINITY })
}
