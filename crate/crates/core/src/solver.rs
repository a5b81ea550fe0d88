//! Ground-state solves: adaptive boson-truncation growth per sector and the
//! variational minimization over the total angular momentum j = N/2 - r.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, SolverError};
use crate::hamiltonian::build_hamiltonian_action;
use crate::lanczos::{lanczos_lowest_from, StartVector};
use crate::model::{CoefficientTable, ModelParams, SectorBasis, TotalSpin};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative tolerance on successive energies for truncation growth.
    pub energy_rtol: f64,
    /// Residual tolerance of the eigensolver, relative to max(1, |E|).
    pub lanczos_tol: f64,
    pub n_tr_start: usize,
    pub n_tr_step: usize,
    pub n_tr_max: usize,
    pub max_lanczos_iters: usize,
    /// Seed for the deterministic pseudo-random start vector.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            energy_rtol: 1e-8,
            lanczos_tol: 1e-10,
            n_tr_start: 8,
            n_tr_step: 8,
            n_tr_max: 512,
            max_lanczos_iters: 2000,
            seed: 0x0d1c3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.energy_rtol > 0.0 && self.lanczos_tol > 0.0) {
            return Err(ModelError::InvalidParams("tolerances must be positive".into()));
        }
        if self.n_tr_step == 0 || self.max_lanczos_iters == 0 {
            return Err(ModelError::InvalidParams("steps must be positive".into()));
        }
        if self.n_tr_start > self.n_tr_max {
            return Err(ModelError::InvalidParams(
                "n_tr_start must not exceed n_tr_max".into(),
            ));
        }
        Ok(())
    }
}

/// A converged (or capped) eigenpair for one sector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundState {
    pub params: ModelParams,
    pub spin: TotalSpin,
    pub energy: f64,
    pub coefficients: CoefficientTable,
    pub converged: bool,
    pub n_tr_used: usize,
    pub residual: f64,
}

impl GroundState {
    pub fn sector(&self) -> SectorBasis {
        SectorBasis {
            spin: self.spin,
            n_tr: self.n_tr_used,
        }
    }
}

/// Hook for persisting solves; keys are canonical strings from [`cache_key`].
pub trait GroundStateCache: Sync + Send {
    fn lookup(&self, key: &str) -> Option<GroundState>;
    fn store(&self, key: &str, gs: &GroundState);
}

/// Canonical, bit-exact cache key for a (params, config) pair. `tag`
/// distinguishes derived solves (for example pinned-truncation side points).
pub fn cache_key(params: &ModelParams, config: &SolverConfig, tag: &str) -> String {
    format!(
        "v1|om={:016x}|de={:016x}|la={:016x}|Om={:016x}|N={}|rt={:016x}|lt={:016x}|ns={}|st={}|mx={}|it={}|sd={}|{}",
        params.omega.to_bits(),
        params.delta.to_bits(),
        params.lambda.to_bits(),
        params.capital_omega.to_bits(),
        params.n_atoms,
        config.energy_rtol.to_bits(),
        config.lanczos_tol.to_bits(),
        config.n_tr_start,
        config.n_tr_step,
        config.n_tr_max,
        config.max_lanczos_iters,
        config.seed,
        tag
    )
}

/// Last converged vector of a sector, reused to warm-start the next solve.
#[derive(Debug, Clone)]
struct ChainState {
    vector: DVector<f64>,
    n_levels: usize,
    /// Base truncation at which convergence was certified.
    n_tr_base: usize,
}

enum StageMode {
    Adaptive,
    Pinned(usize),
}

/// Variational solver that carries per-sector warm-start state across
/// successive parameter points (for sweeps in λ) and optionally persists
/// results through a cache.
pub struct SweepSolver {
    config: SolverConfig,
    cache: Option<Arc<dyn GroundStateCache>>,
    chains: HashMap<u32, ChainState>,
}

impl SweepSolver {
    pub fn new(config: SolverConfig) -> Self {
        Self {
            config,
            cache: None,
            chains: HashMap::new(),
        }
    }

    pub fn with_cache(config: SolverConfig, cache: Option<Arc<dyn GroundStateCache>>) -> Self {
        Self {
            config,
            cache,
            chains: HashMap::new(),
        }
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Full variational ground state over all admissible j.
    pub fn solve(&mut self, params: &ModelParams) -> Result<GroundState, SolverError> {
        params.validate()?;
        self.config.validate()?;
        let key = cache_key(params, &self.config, "");
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.lookup(&key) {
                return Ok(hit);
            }
        }
        let gs = self.scan(params, StageMode::Adaptive)?;
        if let Some(cache) = &self.cache {
            cache.store(&key, &gs);
        }
        Ok(gs)
    }

    /// Variational ground state with every sector solved in one shot at the
    /// pinned truncation (no growth); warm starts are read but not updated.
    pub fn solve_pinned(
        &mut self,
        params: &ModelParams,
        n_tr: usize,
        tag: &str,
    ) -> Result<GroundState, SolverError> {
        params.validate()?;
        self.config.validate()?;
        let key = cache_key(params, &self.config, tag);
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.lookup(&key) {
                return Ok(hit);
            }
        }
        let gs = self.scan(params, StageMode::Pinned(n_tr))?;
        if let Some(cache) = &self.cache {
            cache.store(&key, &gs);
        }
        Ok(gs)
    }

    fn scan(&mut self, params: &ModelParams, mode: StageMode) -> Result<GroundState, SolverError> {
        let spins = params.admissible_spins();
        let top = spins[0];

        let top_result = self.solve_sector(params, top, &mode)?;
        let mut best = top_result;

        let rest: Vec<TotalSpin> = spins[1..].to_vec();
        let slack = 1e-9 * best.energy.abs().max(1.0);
        // cheap analytic filter first, then the spin-only eigenvalue bound
        let candidates: Vec<TotalSpin> = rest
            .into_iter()
            .filter(|s| sector_lower_bound(params, *s) <= best.energy + slack)
            .collect();
        let config_for_bound = self.config;
        let candidates: Vec<TotalSpin> = candidates
            .into_par_iter()
            .filter(|s| {
                s.twice() == 0
                    || sector_lower_bound_sharp(params, *s, &config_for_bound)
                        <= best.energy + slack
            })
            .collect();

        let jobs: Vec<(TotalSpin, Option<ChainState>, Option<usize>)> = candidates
            .iter()
            .map(|s| {
                let chain = self.chains.get(&s.twice()).cloned();
                let pin = match mode {
                    StageMode::Adaptive => None,
                    StageMode::Pinned(k) => Some(k),
                };
                (*s, chain, pin)
            })
            .collect();

        let config = self.config;
        let results: Vec<Result<(GroundState, Option<ChainState>), SolverError>> = jobs
            .into_par_iter()
            .map(|(spin, chain, pin)| {
                if spin.twice() == 0 {
                    return Ok((trivial_sector_state(params), None));
                }
                match pin {
                    None => converge_with_chain(params, spin, &config, chain.as_ref())
                        .map(|(gs, ch)| (gs, Some(ch))),
                    Some(k) => solve_sector_pinned(params, spin, k, &config, chain.as_ref())
                        .map(|gs| (gs, None)),
                }
            })
            .collect();

        for r in results {
            let (gs, chain) = r?;
            if let (StageMode::Adaptive, Some(ch)) = (&mode, chain) {
                self.chains.insert(gs.spin.twice(), ch);
            }
            // strictly lower wins; ties stay with the larger j solved earlier
            let tie = 1e-12 * best.energy.abs().max(1.0);
            if gs.energy < best.energy - tie {
                best = gs;
            }
        }
        Ok(best)
    }

    fn solve_sector(
        &mut self,
        params: &ModelParams,
        spin: TotalSpin,
        mode: &StageMode,
    ) -> Result<GroundState, SolverError> {
        if spin.twice() == 0 {
            return Ok(trivial_sector_state(params));
        }
        let chain = self.chains.get(&spin.twice()).cloned();
        match mode {
            StageMode::Adaptive => {
                let (gs, ch) = converge_with_chain(params, spin, &self.config, chain.as_ref())?;
                self.chains.insert(spin.twice(), ch);
                Ok(gs)
            }
            StageMode::Pinned(k) => {
                solve_sector_pinned(params, spin, *k, &self.config, chain.as_ref())
            }
        }
    }
}

/// Rigorous lower bound on the sector ground energy from splitting off the
/// boson-plus-coupling part: E₀(j) ≥ (-Δ + 2Ω/N) j - 4λ² j²/(ωN).
pub fn sector_lower_bound(params: &ModelParams, spin: TotalSpin) -> f64 {
    let j = spin.j();
    let atomic = (-params.delta + params.omega_pair()) * j;
    let coupling = -4.0 * params.lambda * params.lambda * j * j
        / (params.omega * f64::from(params.n_atoms));
    atomic + coupling
}

/// Sharper rigorous bound: minimizing ω a†a + (2λ/√N)(a†+a)S_z over bosons
/// at fixed spin gives -κ S_z² with κ = 4λ²/(ωN), so
/// E₀(j) ≥ E₀(-Δ S_x + (2Ω/N)(S²-S_x²) - κ S_z²), a (2j+1)-dimensional
/// spin-only eigenvalue problem. Near j = N/2 this reproduces the mean-field
/// energy and prunes everything except a handful of top sectors.
pub fn sector_lower_bound_sharp(
    params: &ModelParams,
    spin: TotalSpin,
    config: &SolverConfig,
) -> f64 {
    let dim = spin.multiplicity();
    if dim == 1 {
        return 0.0;
    }
    let kappa =
        4.0 * params.lambda * params.lambda / (params.omega * f64::from(params.n_atoms));
    let om_pair = params.omega_pair();
    // In the rotated frame the operator reads
    // -Δ S_z + (2Ω/N)(S² - S_z²) - κ S_x², which is pentadiagonal in |j,m⟩
    // with only m ± 2 couplings.
    let mut diag = Vec::with_capacity(dim);
    let mut off2 = vec![0.0; dim];
    for (i, tm) in spin.twice_m_values().enumerate() {
        let m = f64::from(tm) / 2.0;
        let jm = crate::model::ladder_minus(spin, tm);
        let jp = crate::model::ladder_plus(spin, tm);
        diag.push(
            -params.delta * m + om_pair * (spin.casimir() - m * m)
                - kappa * (jm * jm + jp * jp),
        );
        if i >= 2 {
            off2[i] = -kappa * jm * crate::model::ladder_minus(spin, tm - 2);
        }
    }
    let w = PentaOp { diag, off2 };
    let cfg = SolverConfig {
        lanczos_tol: 1e-9,
        max_lanczos_iters: config.max_lanczos_iters,
        seed: config.seed,
        ..*config
    };
    match crate::lanczos::lanczos_lowest(&w, &cfg) {
        // subtract a hair so rounding can never prune a true winner
        Ok(out) => out.energy - 1e-7 * out.energy.abs().max(1.0),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Symmetric operator with a diagonal and a second off-diagonal;
/// off2[i] couples indices i and i-2.
struct PentaOp {
    diag: Vec<f64>,
    off2: Vec<f64>,
}

impl crate::lanczos::SymmetricOp for PentaOp {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        let d = self.diag.len();
        for i in 0..d {
            let mut acc = self.diag[i] * x[i];
            if i >= 2 {
                acc += self.off2[i] * x[i - 2];
            }
            if i + 2 < d {
                acc += self.off2[i + 2] * x[i + 2];
            }
            y[i] = acc;
        }
    }
}

/// The j = 0 sector is boson-only: H' reduces to ω a†a, so the ground state
/// is the vacuum at energy zero.
fn trivial_sector_state(params: &ModelParams) -> GroundState {
    let mut c = DMatrix::zeros(1, 1);
    c[(0, 0)] = 1.0;
    GroundState {
        params: *params,
        spin: TotalSpin::from_twice(0),
        energy: 0.0,
        coefficients: CoefficientTable::from_matrix(c),
        converged: true,
        n_tr_used: 0,
        residual: 0.0,
    }
}

fn solve_stage(
    params: &ModelParams,
    spin: TotalSpin,
    n_tr: usize,
    config: &SolverConfig,
    warm: Option<&DVector<f64>>,
) -> Result<(f64, DVector<f64>, f64), SolverError> {
    let sector = SectorBasis::new(spin, n_tr, params.n_atoms)?;
    let action = build_hamiltonian_action(params, &sector)?;
    let start = match warm {
        Some(v) => StartVector::Warm(resize_state(v, spin.multiplicity(), n_tr + 1)),
        None => StartVector::Seeded(config.seed),
    };
    let out = lanczos_lowest_from(&action, config, start).map_err(|e| {
        SolverError::Eigensolver {
            twice_j: spin.twice(),
            n_tr,
            source: e,
        }
    })?;
    Ok((out.energy, out.vector, out.residual))
}

/// Pad or truncate a flattened (levels × spin) state to a new level count.
fn resize_state(v: &DVector<f64>, n_spin: usize, new_levels: usize) -> DVector<f64> {
    let old_levels = v.len() / n_spin;
    if old_levels == new_levels {
        return v.clone();
    }
    let mut out = DVector::zeros(new_levels * n_spin);
    let copy = old_levels.min(new_levels);
    for s in 0..n_spin {
        for l in 0..copy {
            out[s * new_levels + l] = v[s * old_levels + l];
        }
    }
    let n = out.norm();
    if n > 0.0 {
        out /= n;
    }
    out
}

fn converge_with_chain(
    params: &ModelParams,
    spin: TotalSpin,
    config: &SolverConfig,
    chain: Option<&ChainState>,
) -> Result<(GroundState, ChainState), SolverError> {
    let n_spin = spin.multiplicity();
    let mut n_tr = chain
        .map(|c| c.n_tr_base)
        .unwrap_or(config.n_tr_start)
        .min(config.n_tr_max);
    let mut warm: Option<DVector<f64>> = chain.map(|c| resize_state(&c.vector, n_spin, n_tr + 1));

    let mut prev: Option<(f64, DVector<f64>, f64, usize)> = None;
    let mut certified_base = None;
    loop {
        let (e, v, r) = solve_stage(params, spin, n_tr, config, warm.as_ref())?;
        if let Some((e_prev, _, _, n_prev)) = &prev {
            if (e - e_prev).abs() <= config.energy_rtol * e.abs().max(1.0) {
                certified_base = Some(*n_prev);
                prev = Some((e, v, r, n_tr));
                break;
            }
        }
        prev = Some((e, v.clone(), r, n_tr));
        if n_tr >= config.n_tr_max {
            break;
        }
        warm = Some(v);
        n_tr = (n_tr + config.n_tr_step).min(config.n_tr_max);
    }

    let (energy, vector, residual, n_used) = prev.expect("at least one stage ran");
    let converged = certified_base.is_some();
    let base = certified_base.unwrap_or(n_used);
    let mut table = CoefficientTable::from_matrix(DMatrix::from_column_slice(
        n_used + 1,
        n_spin,
        vector.as_slice(),
    ));
    table.normalize();
    table.canonicalize_sign();
    let chain_vec = DVector::from_column_slice(table.matrix().as_slice());

    Ok((
        GroundState {
            params: *params,
            spin,
            energy,
            coefficients: table,
            converged,
            n_tr_used: n_used,
            residual,
        },
        ChainState {
            vector: chain_vec,
            n_levels: n_used + 1,
            n_tr_base: base,
        },
    ))
}

fn solve_sector_pinned(
    params: &ModelParams,
    spin: TotalSpin,
    n_tr: usize,
    config: &SolverConfig,
    chain: Option<&ChainState>,
) -> Result<GroundState, SolverError> {
    let n_spin = spin.multiplicity();
    let warm = chain.map(|c| {
        debug_assert_eq!(c.vector.len() % n_spin, 0);
        let _ = c.n_levels;
        resize_state(&c.vector, n_spin, n_tr + 1)
    });
    let (energy, vector, residual) = solve_stage(params, spin, n_tr, config, warm.as_ref())?;
    let mut table = CoefficientTable::from_matrix(DMatrix::from_column_slice(
        n_tr + 1,
        n_spin,
        vector.as_slice(),
    ));
    table.normalize();
    table.canonicalize_sign();
    Ok(GroundState {
        params: *params,
        spin,
        energy,
        coefficients: table,
        converged: true,
        n_tr_used: n_tr,
        residual,
    })
}

/// Lowest eigenpair of one (params, j) sector with adaptive truncation
/// growth: truncations start at `n_tr_start` and grow by `n_tr_step` until
/// two successive energies agree to `energy_rtol` (relative), or the cap is
/// reached, in which case the state is returned with `converged` unset.
pub fn converge_ground_state(
    params: &ModelParams,
    spin: TotalSpin,
    config: &SolverConfig,
) -> Result<GroundState, SolverError> {
    params.validate()?;
    config.validate()?;
    if spin.twice() > params.n_atoms || !(params.n_atoms - spin.twice()).is_multiple_of(2) {
        return Err(SolverError::Model(ModelError::InvalidSector(format!(
            "j = {} not admissible for N = {}",
            spin.j(),
            params.n_atoms
        ))));
    }
    if spin.twice() == 0 {
        return Ok(trivial_sector_state(params));
    }
    converge_with_chain(params, spin, config, None).map(|(gs, _)| gs)
}

/// Variational ground state over every admissible j; ties break toward the
/// larger j.
pub fn ground_state(params: &ModelParams, config: &SolverConfig) -> Result<GroundState, SolverError> {
    SweepSolver::new(*config).solve(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::atoms_only_ground as atoms_ground;
    use approx::assert_relative_eq;

    fn params(lambda: f64, capital_omega: f64, n: u32) -> ModelParams {
        ModelParams::new(1.0, 1.0, lambda, capital_omega, n).unwrap()
    }

    #[test]
    fn decoupled_limit_reproduces_spin_spectrum_per_sector() {
        // At λ = 0 each sector's ground energy is the minimum of
        // Δm + (2Ω/N)(j(j+1) - m²) over m.
        let p = params(0.0, 1.3, 4);
        let config = SolverConfig::default();
        for spin in p.admissible_spins() {
            if spin.twice() == 0 {
                continue;
            }
            let gs = converge_ground_state(&p, spin, &config).unwrap();
            let want = spin
                .twice_m_values()
                .map(|tm| {
                    let m = f64::from(tm) / 2.0;
                    p.delta * m + p.omega_pair() * (spin.casimir() - m * m)
                })
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(gs.energy, want, epsilon = 1e-9);
        }
    }

    #[test]
    fn perturbative_coupling_stays_near_atomic_ground() {
        let p = params(0.01, 0.0, 4);
        let config = SolverConfig::default();
        let gs = converge_ground_state(&p, TotalSpin::from_twice(4), &config).unwrap();
        assert!(gs.converged);
        assert!((gs.energy + 2.0).abs() < 1e-4, "energy {}", gs.energy);
    }

    #[test]
    fn truncation_growth_is_variational() {
        let p = params(1.2, 0.8, 4);
        let spin = TotalSpin::from_twice(4);
        let config = SolverConfig::default();
        let mut prev = f64::INFINITY;
        for n_tr in [4usize, 8, 12, 16, 24] {
            let sector = SectorBasis::new(spin, n_tr, 4).unwrap();
            let action = build_hamiltonian_action(&p, &sector).unwrap();
            let out = crate::lanczos::lanczos_lowest(&action, &config).unwrap();
            assert!(out.energy <= prev + 1e-12, "not monotone at N_tr={n_tr}");
            prev = out.energy;
        }
    }

    #[test]
    fn sector_choice_follows_interaction_strength() {
        let config = SolverConfig::default();
        // weak interaction: maximal spin
        let gs = ground_state(&params(0.3, 0.25, 4), &config).unwrap();
        assert_eq!(gs.spin.twice(), 4);
        // strong interaction, weak coupling: j = 0 with zero energy
        let gs = ground_state(&params(0.05, 3.0, 4), &config).unwrap();
        assert_eq!(gs.spin.twice(), 0);
        assert_eq!(gs.energy, 0.0);
        // strong interaction, strong coupling: back to maximal spin
        let gs = ground_state(&params(1.5, 3.0, 4), &config).unwrap();
        assert_eq!(gs.spin.twice(), 4);
    }

    #[test]
    fn variational_energy_never_beaten_by_forced_maximal_sector() {
        let config = SolverConfig::default();
        for &(la, om) in &[(0.3, 2.2), (0.6, 2.5), (0.9, 3.0), (1.2, 1.0)] {
            let p = params(la, om, 4);
            let best = ground_state(&p, &config).unwrap();
            let forced = converge_ground_state(&p, TotalSpin::from_twice(4), &config).unwrap();
            assert!(best.energy <= forced.energy + 1e-10);
        }
    }

    #[test]
    fn truncation_insensitive_once_converged() {
        let p = params(0.9, 0.5, 4);
        let config = SolverConfig::default();
        let gs = converge_ground_state(&p, TotalSpin::from_twice(4), &config).unwrap();
        assert!(gs.converged);
        let sector = SectorBasis::new(TotalSpin::from_twice(4), gs.n_tr_used + 10, 4).unwrap();
        let action = build_hamiltonian_action(&p, &sector).unwrap();
        let out = crate::lanczos::lanczos_lowest(&action, &config).unwrap();
        assert!((out.energy - gs.energy).abs() <= config.energy_rtol * gs.energy.abs().max(1.0));
    }

    #[test]
    fn tie_at_interaction_boundary_prefers_large_spin() {
        // 2Ω/N = Δ at λ = 0: all sectors give E = 0
        let p = params(0.0, 2.0, 4);
        let gs = ground_state(&p, &SolverConfig::default()).unwrap();
        assert_eq!(gs.spin.twice(), 4);
        let (spin, e) = atoms_ground(&p);
        assert_eq!(spin.twice(), 4);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn lower_bounds_are_bounds() {
        let config = SolverConfig::default();
        for &(la, om, n) in &[(0.5, 0.0, 4u32), (1.0, 2.0, 4), (0.3, 1.0, 6), (2.0, 4.0, 2)] {
            let p = params(la, om, n);
            for spin in p.admissible_spins() {
                if spin.twice() == 0 {
                    continue;
                }
                let gs = converge_ground_state(&p, spin, &config).unwrap();
                let bound = sector_lower_bound(&p, spin);
                let sharp = sector_lower_bound_sharp(&p, spin, &config);
                assert!(
                    bound <= gs.energy + 1e-9,
                    "split bound {bound} above energy {} in sector 2j={}",
                    gs.energy,
                    spin.twice()
                );
                assert!(
                    sharp <= gs.energy + 1e-9,
                    "sharp bound {sharp} above energy {} in sector 2j={}",
                    gs.energy,
                    spin.twice()
                );
                // the spin-only bound is never worse than the split bound
                assert!(sharp >= bound - 1e-6);
            }
        }
    }

    #[test]
    fn deterministic_repeat_solves() {
        let p = params(0.8, 1.5, 4);
        let config = SolverConfig::default();
        let a = ground_state(&p, &config).unwrap();
        let b = ground_state(&p, &config).unwrap();
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
        assert_eq!(
            a.coefficients.matrix().as_slice(),
            b.coefficients.matrix().as_slice()
        );
    }
}
