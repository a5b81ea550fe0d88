//! Physical quantities of a converged ground state: photon number, energy
//! derivatives, fidelity and fidelity susceptibility, two-atom reduced
//! density matrices and pairwise concurrence.

use nalgebra::{DVector, Matrix4};

use crate::error::ObservableError;
use crate::kernel::displaced_overlap_rect;
use crate::model::{ladder_minus, ModelParams};
use crate::solver::{GroundState, SolverConfig, SweepSolver};

/// ⟨a†a⟩ of the cavity mode, computed sector-wise through a = A_n - g_n:
/// Σ_n [Σ_k k c² - 2 g_n Σ_k √(k+1) c_k c_{k+1} + g_n² Σ_k c²].
pub fn photon_number(gs: &GroundState) -> Result<f64, ObservableError> {
    if !gs.converged {
        return Err(ObservableError::Unconverged);
    }
    let c = gs.coefficients.matrix();
    let levels = c.nrows();
    let mut total = 0.0;
    for (i, tm) in gs.spin.twice_m_values().enumerate() {
        let g = gs.params.displacement(tm);
        let col = c.column(i);
        let mut quanta = 0.0;
        let mut cross = 0.0;
        let mut w = 0.0;
        for k in 0..levels {
            let v = col[k];
            quanta += k as f64 * v * v;
            w += v * v;
            if k + 1 < levels {
                cross += ((k + 1) as f64).sqrt() * v * col[k + 1];
            }
        }
        total += quanta - 2.0 * g * cross + g * g * w;
    }
    Ok(total)
}

/// ⟨S_z⟩ in the rotated frame.
pub fn sz_mean(gs: &GroundState) -> f64 {
    let c = gs.coefficients.matrix();
    gs.spin
        .twice_m_values()
        .enumerate()
        .map(|(i, tm)| f64::from(tm) / 2.0 * c.column(i).norm_squared())
        .sum()
}

/// ⟨∂H'/∂λ⟩ = (2/√N) ⟨(a†+a) S_z⟩, diagonal in the magnetic index.
pub fn coupling_derivative(gs: &GroundState) -> f64 {
    let c = gs.coefficients.matrix();
    let levels = c.nrows();
    let mut total = 0.0;
    for (i, tm) in gs.spin.twice_m_values().enumerate() {
        let m = f64::from(tm) / 2.0;
        let g = gs.params.displacement(tm);
        let col = c.column(i);
        let mut cross = 0.0;
        let mut w = 0.0;
        for k in 0..levels {
            w += col[k] * col[k];
            if k + 1 < levels {
                cross += ((k + 1) as f64).sqrt() * col[k] * col[k + 1];
            }
        }
        total += m * (2.0 * cross - 2.0 * g * w);
    }
    2.0 / f64::from(gs.params.n_atoms).sqrt() * total
}

/// Central second differences of an energy curve on a uniform λ grid.
/// Interior points only; `flagged` marks entries whose magnitude exceeds ten
/// times the local median, the signature of a level crossing.
#[derive(Debug, Clone)]
pub struct SecondDerivative {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub flagged: Vec<bool>,
}

impl SecondDerivative {
    /// Indices (into the interior grid) of flagged clusters, one per event.
    pub fn discontinuities(&self) -> Vec<usize> {
        let mut events = Vec::new();
        let mut in_cluster = false;
        for (i, &f) in self.flagged.iter().enumerate() {
            if f && !in_cluster {
                events.push(i);
                in_cluster = true;
            } else if !f {
                in_cluster = false;
            }
        }
        events
    }
}

pub fn energy_second_derivative(
    curve: &[(f64, f64)],
) -> Result<SecondDerivative, ObservableError> {
    if curve.len() < 3 {
        return Err(ObservableError::TooFewPoints {
            need: 3,
            got: curve.len(),
        });
    }
    let h = curve[1].0 - curve[0].0;
    for w in curve.windows(2) {
        let step = w[1].0 - w[0].0;
        if (step - h).abs() > 1e-9 * h.abs().max(1e-300) {
            return Err(ObservableError::NonUniformGrid {
                got: step,
                expected: h,
            });
        }
    }
    let n = curve.len();
    let mut lambdas = Vec::with_capacity(n - 2);
    let mut values = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        lambdas.push(curve[i].0);
        values.push((curve[i + 1].1 - 2.0 * curve[i].1 + curve[i - 1].1) / (h * h));
    }

    let window = 3usize;
    let mut flagged = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(values.len());
        let mut local: Vec<f64> = values[lo..hi].iter().map(|v| v.abs()).collect();
        local.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = local[local.len() / 2];
        flagged.push(values[i].abs() > 10.0 * median);
    }
    Ok(SecondDerivative {
        lambdas,
        values,
        flagged,
    })
}

/// Ground-state overlap |⟨ψ₁|ψ₂⟩| between two solves of the same model at
/// different couplings λ. Different spin sectors are orthogonal. Boson
/// overlaps between the two displaced bases of a common magnetic number are
/// the displaced kernel at the displacement difference.
pub fn fidelity(a: &GroundState, b: &GroundState) -> Result<f64, ObservableError> {
    let (pa, pb) = (&a.params, &b.params);
    if pa.omega != pb.omega
        || pa.delta != pb.delta
        || pa.capital_omega != pb.capital_omega
        || pa.n_atoms != pb.n_atoms
    {
        return Err(ObservableError::ParamMismatch(format!(
            "{pa:?} vs {pb:?}"
        )));
    }
    if a.spin != b.spin {
        return Ok(0.0);
    }
    let ca = a.coefficients.matrix();
    let cb = b.coefficients.matrix();
    let rows = ca.nrows();
    let cols = cb.nrows();
    let scale = (pa.lambda - pb.lambda) / (pa.omega * f64::from(pa.n_atoms).sqrt());
    let mut total = 0.0;
    for (i, tm) in a.spin.twice_m_values().enumerate() {
        // δg_n = g_n(λ₁) - g_n(λ₂)
        let delta_g = scale * f64::from(tm);
        let kern = displaced_overlap_rect(delta_g, rows, cols)?;
        total += (ca.column(i).transpose() * kern * cb.column(i))[(0, 0)];
    }
    Ok(total.abs())
}

/// Average fidelity susceptibility 2[1 - F]/(N δλ²) with a symmetric step
/// λ ± δλ/2 (one-sided at the λ = 0 boundary). The two side solves reuse the
/// converged truncation of the center point; a sector change across the step
/// is a level crossing and is reported as an error.
pub fn fidelity_susceptibility(
    params: &ModelParams,
    delta_lambda: f64,
    config: &SolverConfig,
) -> Result<f64, ObservableError> {
    let mut sweep = SweepSolver::new(*config);
    let center = sweep.solve(params)?;
    fidelity_susceptibility_from(&mut sweep, &center, delta_lambda)
}

/// Same, reusing an existing sweep context and its center solve.
pub fn fidelity_susceptibility_from(
    sweep: &mut SweepSolver,
    center: &GroundState,
    delta_lambda: f64,
) -> Result<f64, ObservableError> {
    if delta_lambda <= 0.0 {
        return Err(ObservableError::NonPositiveStep(delta_lambda));
    }
    let params = center.params;
    let (lo, hi) = if params.lambda >= delta_lambda / 2.0 {
        (
            params.lambda - delta_lambda / 2.0,
            params.lambda + delta_lambda / 2.0,
        )
    } else {
        (params.lambda, params.lambda + delta_lambda)
    };
    let n_tr = center.n_tr_used;
    let mut side = |lambda: f64| -> Result<GroundState, ObservableError> {
        let p = ModelParams { lambda, ..params };
        let tag = format!("side|c={:016x}|k={}", params.lambda.to_bits(), n_tr);
        Ok(sweep.solve_pinned(&p, n_tr, &tag)?)
    };
    let minus = side(lo)?;
    let plus = side(hi)?;
    if minus.spin != center.spin || plus.spin != center.spin {
        return Err(ObservableError::SectorCrossing {
            a: minus.spin.twice(),
            b: plus.spin.twice(),
        });
    }
    let f = fidelity(&minus, &plus)?;
    let n = f64::from(params.n_atoms);
    Ok(2.0 * (1.0 - f) / (n * delta_lambda * delta_lambda))
}

/// Two-atom reduced density matrix in the product basis {↑↑, ↑↓, ↓↑, ↓↓}.
#[derive(Debug, Clone)]
pub struct TwoAtomRDM {
    m: Matrix4<f64>,
}

impl TwoAtomRDM {
    pub fn from_matrix(m: Matrix4<f64>) -> Result<Self, ObservableError> {
        let tr = m.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(ObservableError::InvalidDensityMatrix(format!(
                "trace {tr} differs from one"
            )));
        }
        let sym = (m - m.transpose()).abs().max();
        if sym > 1e-10 {
            return Err(ObservableError::InvalidDensityMatrix(format!(
                "asymmetry {sym}"
            )));
        }
        let eig = m.symmetric_eigen();
        if eig.eigenvalues.iter().any(|&v| v < -1e-10) {
            return Err(ObservableError::InvalidDensityMatrix(format!(
                "negative eigenvalue {}",
                eig.eigenvalues.min()
            )));
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }
}

/// Collective expectation values over the full atom-boson state, reduced to
/// the two-atom density matrix through the permutation-symmetric identities.
/// Valid only in the maximal sector j = N/2; computed in the rotated frame,
/// where pairwise concurrence is unchanged because the frame rotation is a
/// product of identical single-atom unitaries.
pub fn two_atom_rdm(gs: &GroundState) -> Result<TwoAtomRDM, ObservableError> {
    let n_atoms = gs.params.n_atoms;
    if n_atoms < 2 {
        return Err(ObservableError::TooFewAtoms(n_atoms));
    }
    if gs.spin.twice() != n_atoms {
        return Err(ObservableError::NotMaximalSector {
            twice_j: gs.spin.twice(),
            n_atoms,
        });
    }
    if !gs.converged {
        return Err(ObservableError::Unconverged);
    }

    let spin = gs.spin;
    let c = gs.coefficients.matrix();
    let levels = c.nrows();
    let step = gs.params.basis_step();
    // ⟨φ_{n-1}|φ_n⟩ kernel: displacement difference g_{n-1} - g_n = -G
    let kern1 = displaced_overlap_rect(-step, levels, levels)?;
    let kern2 = displaced_overlap_rect(-2.0 * step, levels, levels)?;

    let mut sz = 0.0;
    let mut sz2 = 0.0;
    let mut sp_sm = 0.0;
    let mut sm = 0.0;
    let mut sm_sz = 0.0;
    let mut sm2 = 0.0;
    let cols: Vec<DVector<f64>> = (0..spin.multiplicity())
        .map(|i| c.column(i).into_owned())
        .collect();
    for (i, tm) in spin.twice_m_values().enumerate() {
        let m = f64::from(tm) / 2.0;
        let w = cols[i].norm_squared();
        sz += m * w;
        sz2 += m * m * w;
        let jm = ladder_minus(spin, tm);
        sp_sm += 4.0 * jm * jm * w;
        if i >= 1 {
            let ov = (cols[i - 1].transpose() * &kern1 * &cols[i])[(0, 0)];
            sm += 2.0 * jm * ov;
            sm_sz += m * 2.0 * jm * ov;
        }
        if i >= 2 {
            let jm2 = ladder_minus(spin, tm - 2);
            let ov = (cols[i - 2].transpose() * &kern2 * &cols[i])[(0, 0)];
            sm2 += 4.0 * jm * jm2 * ov;
        }
    }

    let n = f64::from(n_atoms);
    let pairs = n * (n - 1.0);
    let zz = (4.0 * sz2 - n) / pairs;

    let r11 = 0.25 * (1.0 + 4.0 * sz / n + zz);
    let r22 = 0.25 * (1.0 - zz);
    let r44 = 0.25 * (1.0 - 4.0 * sz / n + zz);
    let r23 = (sp_sm - n / 2.0 - sz) / pairs;
    let r14 = sm2 / pairs;
    let r12 = (sm_sz + (n / 2.0 - 1.0) * sm) / pairs;
    let r34 = ((n / 2.0) * sm - sm_sz) / pairs;

    let m = Matrix4::new(
        r11, r12, r12, r14, //
        r12, r22, r23, r34, //
        r12, r23, r22, r34, //
        r14, r34, r34, r44,
    );
    TwoAtomRDM::from_matrix(m)
}

/// Wootters concurrence C = max(0, √μ₁ - √μ₂ - √μ₃ - √μ₄) with μᵢ the
/// descending eigenvalues of ρ (σy⊗σy) ρ* (σy⊗σy).
pub fn concurrence_wootters(rdm: &TwoAtomRDM) -> Result<f64, ObservableError> {
    let rho = rdm.matrix();
    let eig = rho.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&v| v < -1e-8) {
        return Err(ObservableError::InvalidDensityMatrix(format!(
            "negative eigenvalue {}",
            eig.eigenvalues.min()
        )));
    }
    // √ρ from the clamped spectral decomposition
    let mut sqrt_rho = Matrix4::zeros();
    for i in 0..4 {
        let lam = eig.eigenvalues[i].max(0.0).sqrt();
        let v = eig.eigenvectors.column(i);
        sqrt_rho += lam * v * v.transpose();
    }
    // σy ⊗ σy is the real anti-diagonal (-1, 1, 1, -1); ρ real ⇒ ρ* = ρ.
    let yy = Matrix4::new(
        0.0, 0.0, 0.0, -1.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0,
    );
    let rho_tilde = yy * rho * yy;
    let b = sqrt_rho * rho_tilde * sqrt_rho;
    let mut mus: Vec<f64> = b.symmetric_eigen().eigenvalues.iter().cloned().collect();
    mus.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let roots: Vec<f64> = mus.iter().map(|&m| m.max(0.0).sqrt()).collect();
    Ok((roots[0] - roots[1] - roots[2] - roots[3]).max(0.0))
}

/// Convention for the size scaling of pairwise concurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaledConvention {
    NMinusOne,
    N,
}

/// Scaled concurrence (N-1)·C of the converged ground state.
pub fn scaled_concurrence(gs: &GroundState) -> Result<f64, ObservableError> {
    scaled_concurrence_with(gs, ScaledConvention::NMinusOne)
}

pub fn scaled_concurrence_with(
    gs: &GroundState,
    convention: ScaledConvention,
) -> Result<f64, ObservableError> {
    let c = concurrence_wootters(&two_atom_rdm(gs)?)?;
    let n = f64::from(gs.params.n_atoms);
    Ok(match convention {
        ScaledConvention::NMinusOne => (n - 1.0) * c,
        ScaledConvention::N => n * c,
    })
}

/// Everything §-style reported for one ground state; entries that do not
/// apply (wrong sector, unconverged) stay empty.
#[derive(Debug, Clone)]
pub struct ObservableRecord {
    pub j: f64,
    pub energy_per_atom: f64,
    pub d2e_dlambda2: Option<f64>,
    pub photons_per_atom: Option<f64>,
    pub sz_mean: f64,
    pub fs_avg: Option<f64>,
    pub concurrence: Option<f64>,
    pub scaled_concurrence: Option<f64>,
}

impl ObservableRecord {
    pub fn from_ground_state(gs: &GroundState) -> Self {
        let n = f64::from(gs.params.n_atoms);
        let photons = photon_number(gs).ok().map(|p| p / n);
        let conc = two_atom_rdm(gs)
            .and_then(|r| concurrence_wootters(&r))
            .ok();
        Self {
            j: gs.spin.j(),
            energy_per_atom: gs.energy / n,
            d2e_dlambda2: None,
            photons_per_atom: photons,
            sz_mean: sz_mean(gs),
            fs_avg: None,
            concurrence: conc,
            scaled_concurrence: conc.map(|c| (n - 1.0) * c),
        }
    }
}
