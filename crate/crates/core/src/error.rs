use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("graph needs at least one node")]
    NoNodes,
    #[error("edge {edge} connects node {node} to itself")]
    SelfLoop { edge: usize, node: usize },
    #[error("edge {edge} references node {node}, but the graph has {n_nodes} nodes")]
    NodeOutOfRange { edge: usize, node: usize, n_nodes: usize },
    #[error("graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("invalid node partition: {0}")]
    InvalidPartition(String),
    #[error("matrix is not a Laplacian: {0}")]
    NotLaplacian(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("internal block L_CC is singular (smallest |eigenvalue| {smallest:.3e})")]
    SingularInternalBlock { smallest: f64 },
    #[error("Laplacian kernel has dimension {corank}, effective resistance needs exactly 1")]
    DegenerateKernel { corank: usize },
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Jacobian is singular (smallest singular value {smallest:.3e})")]
    SingularJacobian { smallest: f64 },
    #[error("boundary currents must sum to zero (sum = {sum:.3e})")]
    NonConservingCurrents { sum: f64 },
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("edge {0} has no adjustable gain")]
    NoGain(usize),
    #[error("kernel of L(z) on the ones-complement has dimension {dimension} (corank >= 3)")]
    AmbiguousKernel { dimension: usize },
    #[error("critical eigenvector has a constant boundary component; singularity is not visible at the terminals")]
    NotExternallySingular,
    #[error("finite-difference estimate of {quantity} is unstable: {coarse:.6e} vs {fine:.6e}")]
    IllConditionedStencil { quantity: &'static str, coarse: f64, fine: f64 },
    #[error("hypotheses violated: {0}")]
    HypothesesViolated(String),
    #[error("certificate inconsistent with a singularity: {0}")]
    InconsistentCertificate(String),
    #[error("seed at lambda = {lambda} did not converge to an equilibrium")]
    SeedDivergence { lambda: f64 },
    #[error("continuation step fell below the minimum step {min_step:.1e} without progress")]
    StepUnderflow { min_step: f64 },
    #[error("special point refinement failed near lambda = {lambda}")]
    RefinementFailure { lambda: f64 },
    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("duplicate {kind} model between nodes {a} and {b}")]
    DuplicateEdgeModel { a: usize, b: usize, kind: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { location: location.into(), message: message.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
