use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("flux R^2/2pi = {flux} is not a positive integer")]
    NonQuantizedFlux { flux: f64 },
    #[error("invalid grid counts: {0}")]
    InvalidCounts(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("field and links live on different grids")]
    GridMismatch,
    #[error("box is not contained in the grid domain")]
    BoxOutOfDomain,
    #[error("eigensolver did not converge: {converged} of {wanted} pairs after {iterations} restarts")]
    EigsNotConverged {
        converged: usize,
        wanted: usize,
        iterations: usize,
    },
    #[error("lowest cluster is not separated: max {cluster_max} + tol {tol} >= next {next}")]
    ClusterNotSeparated { cluster_max: f64, next: f64, tol: f64 },
    #[error("lowest cluster has dimension {found}, expected {expected}")]
    WrongDegeneracy { found: usize, expected: usize },
    #[error("quadratic-form hypothesis violated: Q(u) = {form} > (1+gamma)|u|^2 = {bound}")]
    HypothesisViolated { form: f64, bound: f64 },
    #[error("partition does not tile the domain: {0}")]
    PartitionInvalid(String),
    #[error("result is not applicable: {0}")]
    NotApplicable(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
