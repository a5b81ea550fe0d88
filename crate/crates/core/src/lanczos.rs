//! Lanczos iteration for the algebraically smallest eigenpair of a real
//! symmetric operator, with full reorthogonalization against every stored
//! basis vector so ghost copies of converged eigenvalues cannot appear.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::LanczosError;
use crate::solver::SolverConfig;

/// A real symmetric operator given by its action on vectors.
pub trait SymmetricOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>, y: &mut DVector<f64>);
}

impl SymmetricOp for nalgebra::DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        y.gemv(1.0, self, x, 0.0);
    }
}

#[derive(Debug, Clone)]
pub enum StartVector {
    /// Deterministic pseudo-random start.
    Seeded(u64),
    /// Continue from an earlier solution.
    Warm(DVector<f64>),
}

#[derive(Debug, Clone)]
pub struct LanczosOutcome {
    pub energy: f64,
    pub vector: DVector<f64>,
    /// ‖H x - E x‖ of the returned pair.
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest eigenpair with the seeded default start vector.
pub fn lanczos_lowest(
    op: &dyn SymmetricOp,
    config: &SolverConfig,
) -> Result<LanczosOutcome, LanczosError> {
    lanczos_lowest_from(op, config, StartVector::Seeded(config.seed))
}

pub fn lanczos_lowest_from(
    op: &dyn SymmetricOp,
    config: &SolverConfig,
    start: StartVector,
) -> Result<LanczosOutcome, LanczosError> {
    let dim = op.dim();
    if dim == 0 {
        return Err(LanczosError::EmptyDimension);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let v0 = match start {
        StartVector::Warm(v) => {
            if v.len() != dim {
                return Err(LanczosError::StartVectorMismatch {
                    got: v.len(),
                    want: dim,
                });
            }
            let n = v.norm();
            if n > 0.0 {
                v / n
            } else {
                random_unit(dim, &mut rng)
            }
        }
        StartVector::Seeded(seed) => {
            rng = ChaCha8Rng::seed_from_u64(seed);
            random_unit(dim, &mut rng)
        }
    };

    let max_iters = config.max_lanczos_iters.min(dim).max(1);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(max_iters.min(256));
    basis.push(v0);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut w = DVector::zeros(dim);
    let mut hx = DVector::zeros(dim);
    let mut scale = 1.0f64;
    let mut theta_prev = f64::INFINITY;
    let mut best_residual = f64::INFINITY;

    for k in 0..max_iters {
        op.apply(&basis[k], &mut w);
        let alpha = basis[k].dot(&w);
        alphas.push(alpha);
        w.axpy(-alpha, &basis[k], 1.0);
        if k > 0 {
            w.axpy(-betas[k - 1], &basis[k - 1], 1.0);
        }
        reorthogonalize(&mut w, &basis);

        let beta = w.norm();
        scale = scale.max(alpha.abs()).max(beta);
        let tol_abs = |theta: f64| config.lanczos_tol * theta.abs().max(1.0);

        let theta = tridiag_smallest(&alphas, &betas, scale);
        let stagnated = (theta - theta_prev).abs() <= 0.1 * tol_abs(theta);
        theta_prev = theta;

        let breakdown = beta <= 1e-13 * scale;
        let exhausted = basis.len() == dim || k + 1 == max_iters;

        if breakdown || stagnated || exhausted {
            let y = tridiag_eigvec(&alphas, &betas, theta);
            let est = if breakdown {
                0.0
            } else {
                beta * y[y.len() - 1].abs()
            };
            if est <= tol_abs(theta) || breakdown || exhausted {
                let mut x = DVector::zeros(dim);
                for (i, v) in basis.iter().enumerate() {
                    x.axpy(y[i], v, 1.0);
                }
                let n = x.norm();
                if n > 0.0 {
                    x /= n;
                }
                op.apply(&x, &mut hx);
                let energy = x.dot(&hx);
                hx.axpy(-energy, &x, 1.0);
                let residual = hx.norm();
                best_residual = best_residual.min(residual);
                let accept = residual <= tol_abs(energy)
                    // The Krylov space is invariant or complete: the pair is
                    // exact up to rounding even if the target was stricter.
                    || ((breakdown || basis.len() == dim) && residual <= 1e-8 * scale);
                if accept {
                    return Ok(LanczosOutcome {
                        energy,
                        vector: x,
                        residual,
                        iterations: k + 1,
                    });
                }
                if k + 1 == max_iters {
                    return Err(LanczosError::NoConvergence {
                        iters: k + 1,
                        residual: best_residual,
                    });
                }
            }
        }

        if beta <= 1e-13 * scale {
            // Invariant subspace without an acceptable pair yet: inject a
            // fresh direction orthogonal to everything seen so far.
            let mut fresh = random_unit(dim, &mut rng);
            reorthogonalize(&mut fresh, &basis);
            let n = fresh.norm();
            if n <= 1e-8 {
                return Err(LanczosError::NoConvergence {
                    iters: k + 1,
                    residual: best_residual,
                });
            }
            betas.push(0.0);
            basis.push(fresh / n);
        } else {
            betas.push(beta);
            basis.push(&w / beta);
        }
    }

    Err(LanczosError::NoConvergence {
        iters: max_iters,
        residual: best_residual,
    })
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let mut v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
    let mut n = v.norm();
    while n == 0.0 {
        v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        n = v.norm();
    }
    v / n
}

/// Up to two classical Gram-Schmidt sweeps against the whole basis.
fn reorthogonalize(w: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        let before = w.norm();
        for v in basis {
            let c = v.dot(w);
            w.axpy(-c, v, 1.0);
        }
        if w.norm() > 0.5 * before {
            break;
        }
    }
}

/// Smallest eigenvalue of the symmetric tridiagonal (alphas, betas) by Sturm
/// bisection.
fn tridiag_smallest(alphas: &[f64], betas: &[f64], scale: f64) -> f64 {
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
    let tiny = 1e-300;
    let count_below = |sigma: f64| -> usize {
        let mut count = 0;
        let mut d = alphas[0] - sigma;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..k {
            let b2 = betas[i - 1] * betas[i - 1];
            let denom = if d.abs() < tiny {
                if d < 0.0 {
                    -tiny
                } else {
                    tiny
                }
            } else {
                d
            };
            d = (alphas[i] - sigma) - b2 / denom;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let target = lo.abs().max(hi.abs()).max(scale);
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * target {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvector of the tridiagonal for the Ritz value `theta` by inverse
/// iteration with a pivoting tridiagonal solve.
fn tridiag_eigvec(alphas: &[f64], betas: &[f64], theta: f64) -> DVector<f64> {
    let k = alphas.len();
    if k == 1 {
        return DVector::from_element(1, 1.0);
    }
    let norm_t = alphas
        .iter()
        .chain(betas.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1.0);
    let shift = theta + 1e-14 * norm_t;
    let mut y = DVector::from_fn(k, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
    y /= y.norm();
    for _ in 0..3 {
        let solved = tridiag_solve_shifted(alphas, betas, shift, &y, norm_t);
        let n = solved.norm();
        if !n.is_finite() || n == 0.0 {
            break;
        }
        y = solved / n;
    }
    y
}

/// Solve (T - shift I) x = b with partial pivoting; T tridiagonal.
fn tridiag_solve_shifted(
    alphas: &[f64],
    betas: &[f64],
    shift: f64,
    b: &DVector<f64>,
    norm_t: f64,
) -> DVector<f64> {
    let k = alphas.len();
    let tiny = 1e-18 * norm_t;
    let mut diag: Vec<f64> = alphas.iter().map(|&a| a - shift).collect();
    let mut sup: Vec<f64> = betas.to_vec();
    let mut sup2 = vec![0.0; k];
    let mut rhs: Vec<f64> = b.iter().cloned().collect();

    for i in 0..k - 1 {
        let sub = betas[i];
        if diag[i].abs() >= sub.abs() {
            let piv = if diag[i].abs() < tiny {
                tiny.copysign(diag[i])
            } else {
                diag[i]
            };
            let m = sub / piv;
            diag[i] = piv;
            diag[i + 1] -= m * sup[i];
            rhs[i + 1] -= m * rhs[i];
        } else {
            // swap rows i and i+1, then eliminate
            let m = diag[i] / sub;
            let d_next = diag[i + 1];
            let old_sup = sup[i];
            diag[i] = sub;
            sup[i] = d_next;
            sup2[i] = if i + 1 < k - 1 { sup[i + 1] } else { 0.0 };
            diag[i + 1] = old_sup - m * d_next;
            if i + 1 < k - 1 {
                sup[i + 1] *= -m;
            }
            rhs.swap(i, i + 1);
            let r = rhs[i];
            rhs[i + 1] -= m * r;
        }
    }
    if diag[k - 1].abs() < tiny {
        diag[k - 1] = tiny.copysign(diag[k - 1]);
    }

    let mut x = vec![0.0; k];
    x[k - 1] = rhs[k - 1] / diag[k - 1];
    if k >= 2 {
        let i = k - 2;
        x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
    }
    for i in (0..k.saturating_sub(2)).rev() {
        x[i] = (rhs[i] - sup[i] * x[i + 1] - sup2[i] * x[i + 2]) / diag[i];
    }
    DVector::from_vec(x)
}
