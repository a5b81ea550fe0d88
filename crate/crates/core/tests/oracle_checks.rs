//! Cross-checks of the displaced-basis machinery against brute-force
//! calculations in the plain Fock ⊗ 2^N product basis.

use approx::assert_relative_eq;
use dicke_core::{
    concurrence_wootters, displaced_overlap_kernel, fidelity, ground_state, photon_number,
    two_atom_rdm, ModelParams, SolverConfig,
};
use dicke_oracle::{
    displaced_number_state, dicke_state_product, ground_energy, ground_energy_dense, ground_pair,
    photon_number_product, two_atom_rdm_product, OracleParams,
};
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mirror(p: &ModelParams) -> OracleParams {
    OracleParams {
        omega: p.omega,
        delta: p.delta,
        lambda: p.lambda,
        capital_omega: p.capital_omega,
        n_atoms: p.n_atoms,
    }
}

fn tight_config() -> SolverConfig {
    SolverConfig {
        energy_rtol: 1e-10,
        lanczos_tol: 1e-11,
        ..SolverConfig::default()
    }
}

#[test]
fn kernel_matches_numerical_displaced_state_overlaps() {
    // overlap of two displaced number-state families with displacement
    // difference d equals the kernel at d
    let cutoff = 200;
    for &(g1, g2) in &[(0.0f64, -1.1f64), (0.6, -0.5), (1.4, 0.2), (-0.3, 0.9)] {
        let kern = displaced_overlap_kernel(g1 - g2, 12).unwrap();
        for l in 0..12 {
            let left = displaced_number_state(g1, l, cutoff);
            for k in 0..12 {
                let right = displaced_number_state(g2, k, cutoff);
                let overlap = left.dot(&right);
                assert_relative_eq!(kern[(l, k)], overlap, epsilon = 1e-10);
            }
        }
    }
}

#[test]
fn oracle_iterative_solver_agrees_with_dense_diagonalization() {
    for &(la, om, n) in &[(0.7, 0.5, 2u32), (1.3, 2.0, 3), (0.4, 0.0, 2)] {
        let p = OracleParams {
            omega: 1.0,
            delta: 1.0,
            lambda: la,
            capital_omega: om,
            n_atoms: n,
        };
        let dense = ground_energy_dense(&p, 24);
        let iter = ground_energy(&p, 24);
        assert_relative_eq!(dense, iter, epsilon = 1e-9);
    }
}

#[test]
fn ground_energy_matches_product_basis_brute_force() {
    let config = tight_config();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for n in 1..=4u32 {
        for _ in 0..6 {
            let p = ModelParams::new(
                1.0,
                1.0,
                rng.random_range(0.0..2.0),
                rng.random_range(0.0..4.0),
                n,
            )
            .unwrap();
            let gs = ground_state(&p, &config).unwrap();
            let reference = ground_energy(&mirror(&p), 200);
            assert!(
                (gs.energy - reference).abs() < 1e-8,
                "N={n} λ={} Ω={}: {} vs {}",
                p.lambda,
                p.capital_omega,
                gs.energy,
                reference
            );
        }
    }
}

#[test]
fn photon_number_matches_product_basis() {
    let config = tight_config();
    for &(la, om, n) in &[(0.8f64, 0.0f64, 4u32), (1.2, 1.0, 3), (0.5, 0.25, 4)] {
        let p = ModelParams::new(1.0, 1.0, la, om, n).unwrap();
        let gs = ground_state(&p, &config).unwrap();
        let (_, vec) = ground_pair(&mirror(&p), 200);
        let want = photon_number_product(&vec, n);
        let got = photon_number(&gs).unwrap();
        assert!(
            (got - want).abs() < 1e-7,
            "λ={la} Ω={om} N={n}: {got} vs {want}"
        );
    }
}

#[test]
fn fidelity_matches_product_basis_overlap() {
    let config = tight_config();
    let n = 4u32;
    for &(l1, l2, om) in &[(0.3, 0.301, 0.0), (0.45, 0.47, 0.25), (0.9, 0.95, 0.0)] {
        let pa = ModelParams::new(1.0, 1.0, l1, om, n).unwrap();
        let pb = ModelParams::new(1.0, 1.0, l2, om, n).unwrap();
        let ga = ground_state(&pa, &config).unwrap();
        let gb = ground_state(&pb, &config).unwrap();
        let got = fidelity(&ga, &gb).unwrap();

        let (_, va) = ground_pair(&mirror(&pa), 200);
        let (_, vb) = ground_pair(&mirror(&pb), 200);
        let want = va.dot(&vb).abs();
        assert!(
            (got - want).abs() < 1e-8,
            "λ {l1}->{l2} Ω={om}: {got} vs {want}"
        );
    }
}

#[test]
fn two_atom_reduction_matches_partial_trace_of_brute_force_state() {
    // The displaced-basis reduction works in the rotated frame; the product
    // basis state lives in the lab frame. Pairwise concurrence is invariant
    // under the common single-atom rotation between the two, so it is the
    // cross-frame comparable quantity.
    let config = tight_config();
    for &(la, om, n) in &[(0.8f64, 0.0f64, 4u32), (0.45, 0.25, 4), (0.7, 0.5, 3)] {
        let p = ModelParams::new(1.0, 1.0, la, om, n).unwrap();
        let gs = ground_state(&p, &config).unwrap();
        assert_eq!(gs.spin.twice(), n, "expected maximal sector");
        let got = concurrence_wootters(&two_atom_rdm(&gs).unwrap()).unwrap();

        let (_, vec) = ground_pair(&mirror(&p), 200);
        let rho = two_atom_rdm_product(&vec, n, 0, 1);
        let want = wootters_from_dense(&rho);
        assert!(
            (got - want).abs() < 1e-8,
            "λ={la} Ω={om} N={n}: {got} vs {want}"
        );
    }
}

#[test]
fn w_state_reduction_matches_brute_force_partial_trace() {
    // |j=2, m=-1⟩ ⊗ |0⟩_boson for four atoms, both routes entry by entry.
    let n = 4u32;
    let spin_product = dicke_state_product(n, -2);
    // embed with the boson vacuum: fock index 0
    let spin_dim = 1usize << n as usize;
    let mut full = DVector::zeros(4 * spin_dim);
    for b in 0..spin_dim {
        full[b] = spin_product[b];
    }
    let rho_ref = two_atom_rdm_product(&full, n, 2, 3);

    use dicke_core::{CoefficientTable, GroundState, TotalSpin};
    let p = ModelParams::new(1.0, 1.0, 0.0, 0.0, n).unwrap();
    let mut c = nalgebra::DMatrix::zeros(1, 5);
    c[(0, 1)] = 1.0;
    let gs = GroundState {
        params: p,
        spin: TotalSpin::from_twice(4),
        energy: 0.0,
        coefficients: CoefficientTable::from_matrix(c),
        converged: true,
        n_tr_used: 0,
        residual: 0.0,
    };
    let rdm = two_atom_rdm(&gs).unwrap();
    for r in 0..4 {
        for cidx in 0..4 {
            assert_relative_eq!(
                rdm.matrix()[(r, cidx)],
                rho_ref[(r, cidx)],
                epsilon = 1e-12
            );
        }
    }
}

/// Wootters concurrence straight from a dense 4x4 density matrix, written
/// independently of the library path (eigenvalues of ρ ρ̃ via the
/// square-root-free product route).
fn wootters_from_dense(rho: &nalgebra::DMatrix<f64>) -> f64 {
    let mut yy = nalgebra::DMatrix::zeros(4, 4);
    yy[(0, 3)] = -1.0;
    yy[(1, 2)] = 1.0;
    yy[(2, 1)] = 1.0;
    yy[(3, 0)] = -1.0;
    let r = rho * &yy * rho * &yy;
    // eigenvalues of a non-symmetric 4x4 with real nonneg spectrum via
    // symmetrized iteration: fall back to complex Schur through nalgebra
    let schur = nalgebra::DMatrix::from(r).schur();
    let eigs = schur.complex_eigenvalues();
    let mut mus: Vec<f64> = eigs.iter().map(|c| c.re.max(0.0)).collect();
    mus.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let roots: Vec<f64> = mus.iter().map(|m| m.sqrt()).collect();
    (roots[0] - roots[1] - roots[2] - roots[3]).max(0.0)
}
