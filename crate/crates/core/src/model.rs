//! Model parameters, spin sectors and the displaced-basis coefficient table.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Physical couplings of one Hamiltonian instance: cavity frequency ω, qubit
/// splitting Δ, atom-cavity coupling λ, interatomic coupling Ω and atom count N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub delta: f64,
    pub lambda: f64,
    pub capital_omega: f64,
    pub n_atoms: u32,
}

impl ModelParams {
    pub fn new(
        omega: f64,
        delta: f64,
        lambda: f64,
        capital_omega: f64,
        n_atoms: u32,
    ) -> Result<Self, ModelError> {
        let p = Self {
            omega,
            delta,
            lambda,
            capital_omega,
            n_atoms,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fin = self.omega.is_finite()
            && self.delta.is_finite()
            && self.lambda.is_finite()
            && self.capital_omega.is_finite();
        if !fin {
            return Err(ModelError::InvalidParams("non-finite coupling".into()));
        }
        if self.omega <= 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if self.delta < 0.0 || self.lambda < 0.0 || self.capital_omega < 0.0 {
            return Err(ModelError::InvalidParams(
                "delta, lambda and Omega must be non-negative".into(),
            ));
        }
        if self.n_atoms == 0 {
            return Err(ModelError::InvalidParams("need at least one atom".into()));
        }
        Ok(())
    }

    /// Displacement g_m = 2λm/(ω√N) of the shifted boson mode attached to the
    /// Dicke state with magnetic number m (passed as 2m to stay exact for
    /// half-integers).
    pub fn displacement(&self, twice_m: i32) -> f64 {
        debug_assert!(twice_m.unsigned_abs() <= self.n_atoms);
        self.lambda * f64::from(twice_m) / (self.omega * f64::from(self.n_atoms).sqrt())
    }

    /// Spacing G = 2λ/(ω√N) between displacements of adjacent magnetic numbers.
    pub fn basis_step(&self) -> f64 {
        2.0 * self.lambda / (self.omega * f64::from(self.n_atoms).sqrt())
    }

    /// Strength 2Ω/N of the collective interatomic term.
    pub fn omega_pair(&self) -> f64 {
        2.0 * self.capital_omega / f64::from(self.n_atoms)
    }

    pub fn max_spin(&self) -> TotalSpin {
        TotalSpin::from_twice(self.n_atoms)
    }

    /// Admissible total spins j = N/2 - r in descending order.
    pub fn admissible_spins(&self) -> Vec<TotalSpin> {
        let mut twice = self.n_atoms as i64;
        let mut out = Vec::new();
        while twice >= 0 {
            out.push(TotalSpin::from_twice(twice as u32));
            twice -= 2;
        }
        out
    }
}

/// Total angular momentum j stored as 2j so half-integers stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TotalSpin {
    twice: u32,
}

impl TotalSpin {
    pub fn from_twice(twice: u32) -> Self {
        Self { twice }
    }

    pub fn twice(&self) -> u32 {
        self.twice
    }

    pub fn j(&self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    /// j(j+1), exact.
    pub fn casimir(&self) -> f64 {
        let t = f64::from(self.twice);
        t * (t + 2.0) / 4.0
    }

    /// Number of magnetic states 2j+1.
    pub fn multiplicity(&self) -> usize {
        self.twice as usize + 1
    }

    /// Magnetic numbers as 2m, from -2j to 2j in steps of 2.
    pub fn twice_m_values(&self) -> impl Iterator<Item = i32> + '_ {
        let t = i32::try_from(self.twice).expect("spin fits i32");
        (-t..=t).step_by(2)
    }
}

/// Ladder factor j_m^- = sqrt(j(j+1) - m(m-1)) / 2.
pub fn ladder_minus(spin: TotalSpin, twice_m: i32) -> f64 {
    let tj = i64::from(spin.twice());
    let tm = i64::from(twice_m);
    let num = tj * (tj + 2) - tm * (tm - 2);
    if num <= 0 {
        0.0
    } else {
        0.25 * (num as f64).sqrt()
    }
}

/// Ladder factor j_m^+ = sqrt(j(j+1) - m(m+1)) / 2.
pub fn ladder_plus(spin: TotalSpin, twice_m: i32) -> f64 {
    ladder_minus(spin, -twice_m)
}

/// A (j, N_tr) pair labelling one Dicke ⊗ displaced-Fock sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorBasis {
    pub spin: TotalSpin,
    pub n_tr: usize,
}

impl SectorBasis {
    pub fn new(spin: TotalSpin, n_tr: usize, n_atoms: u32) -> Result<Self, ModelError> {
        if spin.twice() > n_atoms {
            return Err(ModelError::InvalidSector(format!(
                "j = {} exceeds N/2 = {}",
                spin.j(),
                f64::from(n_atoms) / 2.0
            )));
        }
        if !(n_atoms - spin.twice()).is_multiple_of(2) {
            return Err(ModelError::InvalidSector(format!(
                "N/2 - j must be an integer (N = {n_atoms}, j = {})",
                spin.j()
            )));
        }
        Ok(Self { spin, n_tr })
    }

    /// Total dimension (2j+1)(N_tr+1).
    pub fn dim(&self) -> usize {
        self.spin.multiplicity() * (self.n_tr + 1)
    }

    pub fn n_levels(&self) -> usize {
        self.n_tr + 1
    }
}

/// Real expansion coefficients c_{n,k} of a state over the displaced bases,
/// stored column-per-magnetic-number (column i holds boson levels of the i-th
/// magnetic state, counted from m = -j upward).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    c: DMatrix<f64>,
}

impl CoefficientTable {
    pub fn from_matrix(c: DMatrix<f64>) -> Self {
        Self { c }
    }

    pub fn zeros(n_levels: usize, n_spin: usize) -> Self {
        Self {
            c: DMatrix::zeros(n_levels, n_spin),
        }
    }

    pub fn n_levels(&self) -> usize {
        self.c.nrows()
    }

    pub fn n_spin(&self) -> usize {
        self.c.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Entry c_{n,k} addressed by spin column index and boson level.
    pub fn entry(&self, spin_idx: usize, level: usize) -> f64 {
        self.c[(level, spin_idx)]
    }

    /// The displaced bases are orthonormal within each fixed magnetic number,
    /// so the flattened Euclidean norm is the state norm.
    pub fn norm(&self) -> f64 {
        self.c.norm()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.c /= n;
        }
    }

    /// Flip the global sign so the largest-magnitude entry is positive.
    pub fn canonicalize_sign(&mut self) {
        let mut best = 0.0f64;
        let mut sign = 1.0f64;
        for &v in self.c.iter() {
            if v.abs() > best {
                best = v.abs();
                sign = if v < 0.0 { -1.0 } else { 1.0 };
            }
        }
        if sign < 0.0 {
            self.c.neg_mut();
        }
    }
}

/// Analytic ground state of the atoms-only limit: minimises
/// E = Δm + (2Ω/N)(j(j+1) - m²) over (j, m), which reduces to
/// E_0(j) = (-Δ + 2Ω/N) j at m = -j. Ties go to the largest j.
pub fn atoms_only_ground(params: &ModelParams) -> (TotalSpin, f64) {
    let slope = -params.delta + params.omega_pair();
    let spin = if slope <= 0.0 {
        params.max_spin()
    } else {
        TotalSpin::from_twice(params.n_atoms % 2)
    };
    (spin, slope * spin.j())
}
