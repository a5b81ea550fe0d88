//! Brute-force reference calculations used only by test suites.
//!
//! Everything here works in the plain Fock ⊗ 2^N product basis with an
//! explicit boson cutoff, assembled as a sparse matrix and solved by a
//! small self-contained eigensolver. It deliberately shares no basis,
//! assembly or solver code with the main crate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Coupling set mirrored from the main crate, kept as plain fields so the
/// oracle stays decoupled from its types.
#[derive(Debug, Clone, Copy)]
pub struct OracleParams {
    pub omega: f64,
    pub delta: f64,
    pub lambda: f64,
    pub capital_omega: f64,
    pub n_atoms: u32,
}

/// Sparse symmetric matrix in compressed-row form.
pub struct SparseSym {
    pub dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    pub fn apply(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        y.fill(0.0);
        for r in 0..self.dim {
            let mut acc = 0.0;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[idx] * x[self.cols[idx]];
            }
            y[r] = acc;
        }
    }
}

/// Assemble H = ω a†a + Δ S_z + (2λ/√N)(a†+a) S_x + (2Ω/N)(S² - S_z²)
/// in the product basis |fock⟩ ⊗ |bits⟩ (bit i set = atom i up).
/// The collective term uses S² - S_z² = S₊S₋ - S_z.
pub fn assemble_product_hamiltonian(p: &OracleParams, cutoff: usize) -> SparseSym {
    let n = p.n_atoms as usize;
    let spin_dim = 1usize << n;
    let dim = (cutoff + 1) * spin_dim;
    let sqrt_n = (p.n_atoms as f64).sqrt();
    let pair = 2.0 * p.capital_omega / p.n_atoms as f64;

    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);

    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(4 * n + 4);
    for f in 0..=cutoff {
        for bits in 0..spin_dim {
            entries.clear();
            let ups = (bits as u32).count_ones() as f64;
            let sz = ups - p.n_atoms as f64 / 2.0;

            // diagonal: ω n̂ + Δ S_z + (2Ω/N)(n_up - S_z)
            let diag = p.omega * f as f64 + p.delta * sz + pair * (ups - sz);
            entries.push((f * spin_dim + bits, diag));

            // (2λ/√N)(a†+a) S_x: flip one bit, move one boson
            for i in 0..n {
                let flipped = bits ^ (1 << i);
                let amp = 2.0 * p.lambda / sqrt_n * 0.5;
                if f < cutoff {
                    entries.push(((f + 1) * spin_dim + flipped, amp * ((f + 1) as f64).sqrt()));
                }
                if f >= 1 {
                    entries.push(((f - 1) * spin_dim + flipped, amp * (f as f64).sqrt()));
                }
            }

            // (2Ω/N) S₊S₋ off-diagonal: move an excitation from atom j to atom i
            if pair != 0.0 {
                for j in 0..n {
                    if bits & (1 << j) == 0 {
                        continue;
                    }
                    for i in 0..n {
                        if i == j || bits & (1 << i) != 0 {
                            continue;
                        }
                        let target = (bits & !(1 << j)) | (1 << i);
                        entries.push((f * spin_dim + target, pair));
                    }
                }
            }

            entries.sort_by_key(|e| e.0);
            // merge duplicates
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
            for &(c, v) in entries.iter() {
                if let Some(last) = merged.last_mut() {
                    if last.0 == c {
                        last.1 += v;
                        continue;
                    }
                }
                merged.push((c, v));
            }
            for (c, v) in merged {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
    }

    SparseSym {
        dim,
        row_ptr,
        cols,
        vals,
    }
}

/// Smallest eigenvalue and vector of a sparse symmetric matrix by a plain
/// Lanczos recursion with explicit re-orthogonalization. Self-contained on
/// purpose: this is the reference the main solver is checked against.
pub fn lowest_eigenpair(h: &SparseSym, max_iters: usize, tol: f64) -> (f64, DVector<f64>) {
    let dim = h.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0bac1e);
    let mut v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0f64..1.0));
    v /= v.norm();

    let mut basis: Vec<DVector<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = DVector::zeros(dim);
    let mut hx = DVector::zeros(dim);
    let cap = max_iters.min(dim);

    let mut last_theta = f64::INFINITY;
    for k in 0..cap {
        h.apply(&basis[k], &mut w);
        let alpha = basis[k].dot(&w);
        alphas.push(alpha);
        w.axpy(-alpha, &basis[k], 1.0);
        if k > 0 {
            w.axpy(-betas[k - 1], &basis[k - 1], 1.0);
        }
        for _ in 0..2 {
            let before = w.norm();
            for v in &basis {
                let c = v.dot(&w);
                w.axpy(-c, v, 1.0);
            }
            if w.norm() > 0.5 * before {
                break;
            }
        }
        let beta = w.norm();
        let theta = sturm_smallest(&alphas, &betas);
        let stalled = (theta - last_theta).abs() < 0.1 * tol * theta.abs().max(1.0);
        last_theta = theta;
        if stalled || beta < 1e-13 || k + 1 == cap {
            let (_, y) = small_tridiag_ground(&alphas, &betas);
            let mut x = DVector::zeros(dim);
            for (i, b) in basis.iter().enumerate() {
                x.axpy(y[i], b, 1.0);
            }
            x /= x.norm();
            h.apply(&x, &mut hx);
            let energy = x.dot(&hx);
            hx.axpy(-energy, &x, 1.0);
            if hx.norm() <= tol * energy.abs().max(1.0) || k + 1 == cap || beta < 1e-13 {
                return (energy, x);
            }
        }
        betas.push(beta);
        basis.push(&w / beta);
    }
    unreachable!("loop always returns at the cap");
}

/// Smallest eigenvalue of a symmetric tridiagonal by Sturm-count bisection.
fn sturm_smallest(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    if k == 1 {
        return alphas[0];
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let left = if i > 0 { betas[i - 1].abs() } else { 0.0 };
        let right = if i < k - 1 { betas[i].abs() } else { 0.0 };
        lo = lo.min(alphas[i] - left - right);
        hi = hi.max(alphas[i] + left + right);
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let mut count = 0usize;
        let mut d = alphas[0] - mid;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..k {
            let denom = if d.abs() < 1e-300 {
                (-1e-300f64).copysign(d)
            } else {
                d
            };
            d = (alphas[i] - mid) - betas[i - 1] * betas[i - 1] / denom;
            if d < 0.0 {
                count += 1;
            }
        }
        if count >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * scale {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Ground pair of a small symmetric tridiagonal via dense diagonalization.
fn small_tridiag_ground(alphas: &[f64], betas: &[f64]) -> (f64, DVector<f64>) {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut imin = 0;
    for i in 0..k {
        if eig.eigenvalues[i] < eig.eigenvalues[imin] {
            imin = i;
        }
    }
    (eig.eigenvalues[imin], eig.eigenvectors.column(imin).into_owned())
}

/// Ground energy in the product basis.
pub fn ground_energy(p: &OracleParams, cutoff: usize) -> f64 {
    let h = assemble_product_hamiltonian(p, cutoff);
    lowest_eigenpair(&h, 700, 1e-9).0
}

/// Ground energy and vector in the product basis.
pub fn ground_pair(p: &OracleParams, cutoff: usize) -> (f64, DVector<f64>) {
    let h = assemble_product_hamiltonian(p, cutoff);
    lowest_eigenpair(&h, 700, 1e-9)
}

/// ⟨a†a⟩ of a product-basis vector.
pub fn photon_number_product(state: &DVector<f64>, n_atoms: u32) -> f64 {
    let spin_dim = 1usize << n_atoms as usize;
    let mut total = 0.0;
    for (idx, v) in state.iter().enumerate() {
        let f = idx / spin_dim;
        total += f as f64 * v * v;
    }
    total
}

/// Two-atom reduced density matrix of a product-basis vector: trace over the
/// boson index and all atoms except (a, b). Basis order {↑↑, ↑↓, ↓↑, ↓↓}.
pub fn two_atom_rdm_product(
    state: &DVector<f64>,
    n_atoms: u32,
    atom_a: usize,
    atom_b: usize,
) -> DMatrix<f64> {
    let n = n_atoms as usize;
    let spin_dim = 1usize << n;
    let fock_dim = state.len() / spin_dim;
    let mut rho = DMatrix::zeros(4, 4);
    let pair_state = |bits: usize| -> usize {
        let ua = (bits >> atom_a) & 1;
        let ub = (bits >> atom_b) & 1;
        // index 0 = ↑↑, 1 = ↑↓, 2 = ↓↑, 3 = ↓↓ (↑ = bit set)
        (1 - ua) * 2 + (1 - ub)
    };
    for f in 0..fock_dim {
        for bits1 in 0..spin_dim {
            let v1 = state[f * spin_dim + bits1];
            if v1 == 0.0 {
                continue;
            }
            for bits2 in 0..spin_dim {
                // environment bits must match
                let mask = !((1usize << atom_a) | (1usize << atom_b));
                if bits1 & mask != bits2 & mask {
                    continue;
                }
                let v2 = state[f * spin_dim + bits2];
                if v2 == 0.0 {
                    continue;
                }
                rho[(pair_state(bits1), pair_state(bits2))] += v1 * v2;
            }
        }
    }
    rho
}

/// Numerically displaced number states: |k⟩_g = (a†+g)^k/√k! e^{-g a† - g²/2}|0⟩
/// expanded in a truncated plain Fock space by explicit operator powers.
pub fn displaced_number_state(g: f64, k: usize, cutoff: usize) -> DVector<f64> {
    // coherent vacuum of A = a + g: components e^{-g²/2} (-g)^f / √f!
    let mut state = DVector::zeros(cutoff + 1);
    let mut ln_f = 0.0;
    for f in 0..=cutoff {
        if f > 0 {
            ln_f += (f as f64).ln();
        }
        let sign = if f % 2 == 1 && g > 0.0 { -1.0 } else { 1.0 };
        let mag = (-g * g / 2.0 + (f as f64) * g.abs().ln().max(-745.0) - 0.5 * ln_f).exp();
        state[f] = if g == 0.0 {
            if f == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            sign * mag
        };
    }
    // apply (a† + g) k times, then normalize by √k!
    for step in 0..k {
        let mut next = DVector::zeros(cutoff + 1);
        for f in 0..=cutoff {
            if state[f] == 0.0 {
                continue;
            }
            next[f] += g * state[f];
            if f < cutoff {
                next[f + 1] += ((f + 1) as f64).sqrt() * state[f];
            }
        }
        // dividing by √(step+1) keeps the running norm near one
        next /= ((step + 1) as f64).sqrt();
        state = next;
    }
    state
}

/// Dense symmetric-eigen ground energy, for cross-checking the oracle's own
/// iterative solver on small cutoffs.
pub fn ground_energy_dense(p: &OracleParams, cutoff: usize) -> f64 {
    let h = assemble_product_hamiltonian(p, cutoff);
    let mut dense = DMatrix::zeros(h.dim, h.dim);
    let mut e = DVector::zeros(h.dim);
    let mut col = DVector::zeros(h.dim);
    for i in 0..h.dim {
        e[i] = 1.0;
        h.apply(&e, &mut col);
        dense.column_mut(i).copy_from(&col);
        e[i] = 0.0;
    }
    dense
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Map a symmetric Dicke state |j=N/2, m⟩ into the 2^N product spin basis.
pub fn dicke_state_product(n_atoms: u32, twice_m: i32) -> DVector<f64> {
    let n = n_atoms as usize;
    let spin_dim = 1usize << n;
    let ups = ((twice_m + n_atoms as i32) / 2) as u32;
    let mut v = DVector::zeros(spin_dim);
    let mut count = 0usize;
    for bits in 0..spin_dim {
        if (bits as u32).count_ones() == ups {
            v[bits] = 1.0;
            count += 1;
        }
    }
    v / (count as f64).sqrt()
}
