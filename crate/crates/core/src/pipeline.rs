//! Shared sweep pipelines: susceptibility curves with refined peaks and
//! critical-point observable datasets. Used by the batch front-end and the
//! acceptance suite.

use crate::error::ObservableError;
use crate::model::ModelParams;
use crate::observables::fidelity_susceptibility_from;
use crate::scaling::{locate_fs_peak, PeakRef};
use crate::solver::SweepSolver;

/// Susceptibility curve of one system size with its refined peak.
#[derive(Debug, Clone)]
pub struct FsCurve {
    pub n: u32,
    pub curve: Vec<(f64, f64)>,
    pub peak: PeakRef,
}

/// Average fidelity susceptibility over a λ grid, sweeping with warm starts;
/// the peak reference comes from the parabola through the top three grid
/// points.
pub fn fs_curve_with_peak(
    sweep: &mut SweepSolver,
    base: &ModelParams,
    lambdas: &[f64],
    delta_lambda: f64,
) -> Result<FsCurve, ObservableError> {
    let mut curve = Vec::with_capacity(lambdas.len());
    for &la in lambdas {
        let p = ModelParams {
            lambda: la,
            ..*base
        };
        let center = sweep.solve(&p)?;
        let chi = fidelity_susceptibility_from(sweep, &center, delta_lambda)?;
        curve.push((la, chi));
    }
    let (lambda_max, value_max) = locate_fs_peak(&curve).map_err(|e| {
        ObservableError::Solver(crate::error::SolverError::Model(
            crate::error::ModelError::InvalidParams(format!("peak location failed: {e}")),
        ))
    })?;
    Ok(FsCurve {
        n: base.n_atoms,
        curve,
        peak: PeakRef {
            n: base.n_atoms,
            lambda_max,
            value_max,
        },
    })
}

/// Uniform λ grid of `count` points centred on the critical coupling.
pub fn critical_window(lambda_c: f64, half_width: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lambda_c - half_width + 2.0 * half_width * i as f64 / (count - 1) as f64)
        .collect()
}
