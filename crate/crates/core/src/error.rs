use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix has no rows")]
    EmptyMatrix,
    #[error("row {row} has {len} entries, expected {dim}")]
    RaggedMatrix { row: usize, len: usize, dim: usize },
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not Hermitian (relative defect {defect:.3e}, worst entry at row {row}, column {col})")]
    NotHermitian { defect: f64, row: usize, col: usize },
    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("singular linear system (rcond = {rcond:.3e})")]
    SingularSystem { rcond: f64 },
    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error("negative eigenvalue {value:.3e}")]
    NegativeEigenvalue { value: f64 },
    #[error("expectation value has imaginary part {im:.3e}")]
    ImaginaryResidue { im: f64 },
    #[error("state vector has zero norm")]
    ZeroVector,
    #[error("mixture weights sum to {sum}, expected 1")]
    WeightsNotNormalized { sum: f64 },
    #[error("mixture weight {weight} outside (0, 1]")]
    InvalidWeight { weight: f64 },
    #[error("mixture has no components")]
    EmptyMixture,
    #[error("Bloch vector has length {norm} > 1")]
    BlochOutsideBall { norm: f64 },
    #[error("Bloch encoding needs dimension 2, got {dim}")]
    BlochDimension { dim: usize },
    #[error("commutator flow needs an even number of constraints, got {n}")]
    OddConstraintCount { n: usize },
    #[error("constraint geometry matrix is singular (rcond = {rcond:.3e})")]
    SingularConstraintGeometry { rcond: f64 },
    #[error("multiplier {index} has imaginary part {im:.3e}")]
    ComplexMultiplier { index: usize, im: f64 },
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("state kind does not match flow kind {flow}")]
    StateKindMismatch { flow: &'static str },
    #[error("state is not pure (purity {purity})")]
    NotPure { purity: f64 },
    #[error("mixtures describe different density matrices (distance {distance:.3e})")]
    MixturesDiffer { distance: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("integration failed at t = {t}: {source}")]
    Integration { t: f64, source: Box<Error> },
}
