//! Matrix-free application of the rotated Hamiltonian
//!
//!   H' = ω a†a - Δ S_x' + (2λ/√N)(a†+a) S_z' + (2Ω/N)(S² - S_x'²)
//!
//! in the basis |k⟩_{A_n} ⊗ |j, n⟩ built on the shifted operators
//! A_n = a + g_n. Rows couple n to n±1 through -Δ j_n^∓ and to n±2 through
//! -(2Ω/N) j_n^∓ j_{n∓1}^∓, with boson overlaps carried by the displaced
//! kernels at G and 2G. The induced matrix is real symmetric and block
//! pentadiagonal in the magnetic index.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector};

use crate::error::ModelError;
use crate::kernel::displaced_overlap_kernel;
use crate::lanczos::SymmetricOp;
use crate::model::{ladder_minus, ladder_plus, ModelParams, SectorBasis};

pub struct HamiltonianAction {
    params: ModelParams,
    sector: SectorBasis,
    /// ω(l - g_n²) + (2Ω/N)[j(j+1) - (j_n^-)² - (j_n^+)²], laid out (level, spin).
    diag: DMatrix<f64>,
    /// hop1[i] = Δ · j^-(n_i): couples spin columns i-1 and i.
    hop1: Vec<f64>,
    /// hop2[i] = (2Ω/N) · j^-(n_i) j^-(n_{i-1}): couples columns i-2 and i.
    hop2: Vec<f64>,
    kern_g: DMatrix<f64>,
    kern_2g: Option<DMatrix<f64>>,
}

/// Builds the applicator for one (params, sector) pair.
pub fn build_hamiltonian_action(
    params: &ModelParams,
    sector: &SectorBasis,
) -> Result<HamiltonianAction, ModelError> {
    params.validate()?;
    if sector.spin.twice() > params.n_atoms {
        return Err(ModelError::InvalidSector(format!(
            "j = {} exceeds N/2 = {}",
            sector.spin.j(),
            f64::from(params.n_atoms) / 2.0
        )));
    }
    if !(params.n_atoms - sector.spin.twice()).is_multiple_of(2) {
        return Err(ModelError::InvalidSector(
            "N/2 - j must be an integer".into(),
        ));
    }

    let spin = sector.spin;
    let n_levels = sector.n_levels();
    let n_spin = spin.multiplicity();
    let om_pair = params.omega_pair();

    let mut diag = DMatrix::zeros(n_levels, n_spin);
    let mut hop1 = vec![0.0; n_spin];
    let mut hop2 = vec![0.0; n_spin];

    for (i, tm) in spin.twice_m_values().enumerate() {
        let g = params.displacement(tm);
        let jm = ladder_minus(spin, tm);
        let jp = ladder_plus(spin, tm);
        let spin_diag = om_pair * (spin.casimir() - jm * jm - jp * jp);
        for l in 0..n_levels {
            diag[(l, i)] = params.omega * (l as f64 - g * g) + spin_diag;
        }
        hop1[i] = params.delta * jm;
        hop2[i] = om_pair * jm * ladder_minus(spin, tm - 2);
    }

    let step = params.basis_step();
    let kern_g = displaced_overlap_kernel(step, n_levels)
        .map_err(|e| ModelError::InvalidSector(format!("kernel failure: {e}")))?;
    let kern_2g = if params.capital_omega != 0.0 && n_spin > 2 {
        Some(
            displaced_overlap_kernel(2.0 * step, n_levels)
                .map_err(|e| ModelError::InvalidSector(format!("kernel failure: {e}")))?,
        )
    } else {
        None
    };

    Ok(HamiltonianAction {
        params: *params,
        sector: *sector,
        diag,
        hop1,
        hop2,
        kern_g,
        kern_2g,
    })
}

impl HamiltonianAction {
    pub fn sector(&self) -> &SectorBasis {
        &self.sector
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n_levels(&self) -> usize {
        self.sector.n_levels()
    }

    pub fn n_spin(&self) -> usize {
        self.sector.spin.multiplicity()
    }

    /// out = H' · c, with both tables laid out (level, spin).
    pub fn apply_table(&self, c: DMatrixView<'_, f64>, mut out: DMatrixViewMut<'_, f64>) {
        let s = self.n_spin();

        out.copy_from(&c);
        out.component_mul_assign(&self.diag);

        if s == 1 {
            return;
        }

        // t_down.col(i) = M(G) c_i feeds the row above it; t_up uses M(G)ᵀ.
        let t_down = &self.kern_g * c;
        let t_up = self.kern_g.tr_mul(&c);
        for i in 0..s {
            if i >= 1 {
                let f = self.hop1[i];
                out.column_mut(i).axpy(-f, &t_down.column(i - 1), 1.0);
            }
            if i + 1 < s {
                let f = self.hop1[i + 1];
                out.column_mut(i).axpy(-f, &t_up.column(i + 1), 1.0);
            }
        }

        if let Some(k2) = &self.kern_2g {
            let t2_down = k2 * c;
            let t2_up = k2.tr_mul(&c);
            for i in 0..s {
                if i >= 2 {
                    let f = self.hop2[i];
                    out.column_mut(i).axpy(-f, &t2_down.column(i - 2), 1.0);
                }
                if i + 2 < s {
                    let f = self.hop2[i + 2];
                    out.column_mut(i).axpy(-f, &t2_up.column(i + 2), 1.0);
                }
            }
        }
    }

    /// Dense matrix of the induced operator; test and small-sector helper.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        let mut e = DVector::zeros(d);
        let mut col = DVector::zeros(d);
        for i in 0..d {
            e[i] = 1.0;
            self.apply(&e, &mut col);
            out.column_mut(i).copy_from(&col);
            e[i] = 0.0;
        }
        out
    }
}

impl SymmetricOp for HamiltonianAction {
    fn dim(&self) -> usize {
        self.sector.dim()
    }

    fn apply(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        let l = self.n_levels();
        let s = self.n_spin();
        let c = DMatrixView::from_slice(x.as_slice(), l, s);
        let out = DMatrixViewMut::from_slice(y.as_mut_slice(), l, s);
        self.apply_table(c, out);
    }
}
