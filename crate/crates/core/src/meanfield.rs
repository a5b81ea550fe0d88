//! Thermodynamic-limit variational solution over scaled displacements
//! (α, β): energy surface, equilibrium conditions and the critical coupling.

use serde::{Deserialize, Serialize};

use crate::error::MeanFieldError;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Normal,
    Superradiant,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    pub alpha: f64,
    pub beta: f64,
    pub energy_per_atom: f64,
    pub phase: Phase,
}

/// Scaled ground-state energy
/// E₀(α,β)/N = ωα² - 4λαβ√(1-β²) + Δ(β²-½) - 2Ω(β²-½)² + Ω/2.
pub fn scaled_energy(alpha: f64, beta: f64, params: &ModelParams) -> Result<f64, MeanFieldError> {
    if beta.abs() > 1.0 {
        return Err(MeanFieldError::BetaOutOfRange(beta));
    }
    let s = (1.0 - beta * beta).sqrt();
    let b2 = beta * beta - 0.5;
    Ok(params.omega * alpha * alpha - 4.0 * params.lambda * alpha * beta * s
        + params.delta * b2
        - 2.0 * params.capital_omega * b2 * b2
        + params.capital_omega / 2.0)
}

/// Residuals of the two equilibrium conditions ∂E/∂α = ∂E/∂β = 0 (scaled by
/// 1/2 and -1/2 respectively, matching the stationarity equations).
pub fn equilibrium_residuals(alpha: f64, beta: f64, params: &ModelParams) -> (f64, f64) {
    let s = (1.0 - beta * beta).sqrt();
    let r1 = params.omega * alpha - 2.0 * params.lambda * beta * s;
    let r2 = 2.0 * alpha * params.lambda * s
        - 2.0 * alpha * params.lambda * beta * beta / s.max(1e-300)
        - beta * params.delta
        + 4.0 * params.capital_omega * beta * (beta * beta - 0.5);
    (r1, r2)
}

/// Critical atom-cavity coupling of the second-order transition,
/// λ_c = √(ω(Δ+2Ω))/2.
pub fn critical_coupling(params: &ModelParams) -> f64 {
    (params.omega * (params.delta + 2.0 * params.capital_omega)).sqrt() / 2.0
}

/// Global minimizer of the scaled energy. Substituting
/// α = 2λβ√(1-β²)/ω into the second equilibrium condition leaves a
/// one-dimensional root problem in u = β², solved by bracketing and
/// bisection on [0, 1); the trivial stationary point (0,0) always competes.
/// The β → -β, α → -α degeneracy is reported as the β ≥ 0 representative.
pub fn minimize_meanfield(params: &ModelParams) -> MeanFieldSolution {
    let trivial_e = scaled_energy(0.0, 0.0, params).expect("beta=0 in range");
    let mut best = MeanFieldSolution {
        alpha: 0.0,
        beta: 0.0,
        energy_per_atom: trivial_e,
        phase: Phase::Normal,
    };

    // h(u) = (4λ²/ω - 2Ω)(1 - 2u) - Δ, the stationarity condition at β ≠ 0
    let coef = 4.0 * params.lambda * params.lambda / params.omega - 2.0 * params.capital_omega;
    let h = |u: f64| coef * (1.0 - 2.0 * u) - params.delta;
    let (mut lo, mut hi) = (0.0f64, 1.0 - 1e-12);
    if h(lo) * h(hi) <= 0.0 && coef != 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(lo) * h(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        let u = 0.5 * (lo + hi);
        let beta = u.sqrt();
        let s = (1.0 - u).sqrt();
        let alpha = 2.0 * params.lambda * beta * s / params.omega;
        let e = scaled_energy(alpha, beta, params).expect("beta in range");
        if e < best.energy_per_atom {
            best = MeanFieldSolution {
                alpha,
                beta,
                energy_per_atom: e,
                phase: if alpha.abs() > 1e-10 {
                    Phase::Superradiant
                } else {
                    Phase::Normal
                },
            };
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(omega: f64, delta: f64, lambda: f64, capital_omega: f64) -> ModelParams {
        ModelParams::new(omega, delta, lambda, capital_omega, 64).unwrap()
    }

    #[test]
    fn surface_values() {
        let p = params(1.0, 1.0, 0.0, 0.0);
        assert_relative_eq!(scaled_energy(0.0, 0.0, &p).unwrap(), -0.5, epsilon = 1e-15);
        // Ω terms cancel at β = 0
        let p = params(1.0, 1.0, 0.0, 0.5);
        assert_relative_eq!(scaled_energy(0.0, 0.0, &p).unwrap(), -0.5, epsilon = 1e-15);
        // β = ±1 endpoints finite and symmetric under (α,β) → (-α,-β)
        let p = params(1.0, 1.0, 0.7, 0.3);
        let e1 = scaled_energy(0.4, 1.0, &p).unwrap();
        let e2 = scaled_energy(-0.4, -1.0, &p).unwrap();
        assert!(e1.is_finite());
        assert_relative_eq!(e1, e2, epsilon = 1e-14);
        assert!(scaled_energy(0.0, 1.2, &p).is_err());
    }

    #[test]
    fn normal_phase_below_critical() {
        let sol = minimize_meanfield(&params(1.0, 1.0, 0.4, 0.0));
        assert_eq!(sol.phase, Phase::Normal);
        assert_eq!(sol.alpha, 0.0);
        assert_relative_eq!(sol.energy_per_atom, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn superradiant_solution_at_strong_coupling() {
        let sol = minimize_meanfield(&params(1.0, 1.0, 1.0, 0.0));
        assert_eq!(sol.phase, Phase::Superradiant);
        assert_relative_eq!(sol.energy_per_atom, -1.0625, epsilon = 1e-10);
        assert_relative_eq!(sol.alpha * sol.alpha, 0.9375, epsilon = 1e-10);
        assert_relative_eq!(sol.beta * sol.beta, 0.375, epsilon = 1e-10);
        // closed form for the interaction-free limit: -λ²/ω - Δ²ω/(16λ²)
        assert_relative_eq!(sol.energy_per_atom, -1.0 - 1.0 / 16.0, epsilon = 1e-10);
    }

    #[test]
    fn phase_switch_brackets_critical_coupling() {
        let below = minimize_meanfield(&params(1.0, 1.0, 0.70, 0.5));
        let above = minimize_meanfield(&params(1.0, 1.0, 0.72, 0.5));
        assert_eq!(below.phase, Phase::Normal);
        assert_eq!(above.phase, Phase::Superradiant);
        assert_relative_eq!(
            critical_coupling(&params(1.0, 1.0, 0.0, 0.5)),
            2.0f64.sqrt() / 2.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn critical_coupling_values() {
        assert_relative_eq!(
            critical_coupling(&params(1.0, 1.0, 0.0, 0.0)),
            0.5,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            critical_coupling(&params(1.0, 1.0, 0.0, 0.25)),
            1.5f64.sqrt() / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn stationarity_residuals_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let p = params(
                rng.random_range(0.2..2.0),
                rng.random_range(0.1..2.0),
                rng.random_range(0.0..2.0),
                rng.random_range(0.0..2.0),
            );
            let sol = minimize_meanfield(&p);
            let (r1, r2) = equilibrium_residuals(sol.alpha, sol.beta, &p);
            assert!(r1.abs() < 1e-10, "r1 = {r1}");
            assert!(r2.abs() < 1e-10, "r2 = {r2}");
            // never above the trivial stationary point
            assert!(sol.energy_per_atom <= scaled_energy(0.0, 0.0, &p).unwrap() + 1e-12);
        }
    }

    #[test]
    fn second_derivative_jumps_at_critical_point() {
        let lc = critical_coupling(&params(1.0, 1.0, 0.0, 0.25));
        let h = 1e-4;
        let e = |la: f64| minimize_meanfield(&params(1.0, 1.0, la, 0.25)).energy_per_atom;
        // continuity of E across λ_c
        assert!((e(lc + 1e-9) - e(lc - 1e-9)).abs() < 1e-8);
        // curvature below is flat, above it is not
        let below = (e(lc - 3.0 * h) - 2.0 * e(lc - 2.0 * h) + e(lc - h)) / (h * h);
        let above = (e(lc + h) - 2.0 * e(lc + 2.0 * h) + e(lc + 3.0 * h)) / (h * h);
        assert!(below.abs() < 1e-4, "below = {below}");
        assert!(above.abs() > 0.1, "above = {above}");
    }
}
