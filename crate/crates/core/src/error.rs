use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("invalid sector: {0}")]
    InvalidSector(String),
}

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel size must be at least 1")]
    EmptySize,
    #[error("displacement must be finite, got {0}")]
    NonFiniteDisplacement(f64),
    #[error("kernel evaluation lost stability at entry ({row}, {col}): {value}")]
    Unstable { row: usize, col: usize, value: f64 },
}

#[derive(Debug, Error)]
pub enum LanczosError {
    #[error("operator dimension must be at least 1")]
    EmptyDimension,
    #[error("start vector length {got} does not match operator dimension {want}")]
    StartVectorMismatch { got: usize, want: usize },
    #[error("no convergence after {iters} iterations (best residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("eigensolver failed in sector 2j={twice_j} at N_tr={n_tr}: {source}")]
    Eigensolver {
        twice_j: u32,
        n_tr: usize,
        source: LanczosError,
    },
}

#[derive(Debug, Error)]
pub enum ObservableError {
    #[error("ground state is not converged")]
    Unconverged,
    #[error("ground states live on different models: {0}")]
    ParamMismatch(String),
    #[error("grid is not uniform: spacing {got} vs {expected}")]
    NonUniformGrid { got: f64, expected: f64 },
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("ground-state sector changed across the fidelity step (2j={a} vs 2j={b})")]
    SectorCrossing { a: u32, b: u32 },
    #[error("two-atom reduction requires the maximal sector j = N/2 (got 2j={twice_j}, N={n_atoms})")]
    NotMaximalSector { twice_j: u32, n_atoms: u32 },
    #[error("need at least two atoms, got {0}")]
    TooFewAtoms(u32),
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("fidelity step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Error)]
pub enum MeanFieldError {
    #[error("|beta| must not exceed 1, got {0}")]
    BetaOutOfRange(f64),
}

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error("dataset invalid: {0}")]
    InvalidDataset(String),
    #[error("curve maximum sits at an endpoint; widen the grid")]
    PeakAtEndpoint,
    #[error("rescaled curves share no overlap window")]
    EmptyOverlap,
    #[error("all values must be positive for a log-log fit (offender: {0})")]
    NonPositiveValue(f64),
    #[error("need at least {need} sizes, got {got}")]
    TooFewSizes { need: usize, got: usize },
    #[error("sequence is not monotone; extrapolation model does not apply")]
    NonMonotone,
}
