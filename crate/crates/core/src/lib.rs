//! Numerically exact ground states of the modified Dicke model — N two-level
//! atoms with an XY dipole-dipole coupling inside a single-mode cavity —
//! solved in an extended bosonic coherent-state basis, plus the
//! thermodynamic-limit mean-field solution and finite-size-scaling tools.

pub mod error;
pub mod hamiltonian;
pub mod kernel;
pub mod lanczos;
pub mod meanfield;
pub mod model;
pub mod observables;
pub mod pipeline;
pub mod scaling;
pub mod solver;

pub use error::{
    KernelError, LanczosError, MeanFieldError, ModelError, ObservableError, ScalingError,
    SolverError,
};
pub use hamiltonian::{build_hamiltonian_action, HamiltonianAction};
pub use kernel::{displaced_overlap_kernel, displaced_overlap_rect};
pub use lanczos::{lanczos_lowest, lanczos_lowest_from, StartVector, SymmetricOp};
pub use meanfield::{
    critical_coupling, minimize_meanfield, scaled_energy, MeanFieldSolution, Phase,
};
pub use model::{
    atoms_only_ground, CoefficientTable, ModelParams, SectorBasis, TotalSpin,
};
pub use pipeline::{critical_window, fs_curve_with_peak, FsCurve};
pub use observables::{
    concurrence_wootters, coupling_derivative, energy_second_derivative, fidelity,
    fidelity_susceptibility, fidelity_susceptibility_from, photon_number, scaled_concurrence,
    scaled_concurrence_with, sz_mean, two_atom_rdm, ObservableRecord, ScaledConvention,
    SecondDerivative, TwoAtomRDM,
};
pub use scaling::{
    best_collapse_exponent, collapse_quality, extrapolate_c_infinity, locate_fs_peak,
    loglog_slope_fit, ExponentFit, PeakRef, ScalingDataset, SizeCurve,
};
pub use solver::{
    cache_key, converge_ground_state, ground_state, GroundState, GroundStateCache, SolverConfig,
    SweepSolver,
};
