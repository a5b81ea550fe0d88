//! Overlaps between displaced Fock states.
//!
//! `displaced_overlap_kernel(g, n)` returns the matrix with entries
//! ⟨l|D(g)|k⟩ where D(g) = exp(g(a† - a)) is the real displacement operator.
//! This is exactly the overlap between number states of two bases whose
//! vacuum displacements differ by g, and it reduces to the identity at g = 0.
//!
//! The textbook finite sum over factorials cancels catastrophically once
//! l, k ≳ 30 at moderate g, so entries are generated along diagonals
//! l - k = m with the associated-Laguerre three-term recurrence
//!
//!   sqrt((k+1)(k+m+1)) f_{k+1} = (2k+m+1-g²) f_k - sqrt(k(k+m)) f_{k-1},
//!
//! which keeps every intermediate bounded by one.

use nalgebra::DMatrix;

use crate::error::KernelError;

/// Square kernel of ⟨l|D(g)|k⟩ for 0 ≤ l,k < size.
pub fn displaced_overlap_kernel(g: f64, size: usize) -> Result<DMatrix<f64>, KernelError> {
    displaced_overlap_rect(g, size, size)
}

/// Rectangular kernel of ⟨l|D(g)|k⟩ for 0 ≤ l < rows, 0 ≤ k < cols.
pub fn displaced_overlap_rect(
    g: f64,
    rows: usize,
    cols: usize,
) -> Result<DMatrix<f64>, KernelError> {
    if rows == 0 || cols == 0 {
        return Err(KernelError::EmptySize);
    }
    if !g.is_finite() {
        return Err(KernelError::NonFiniteDisplacement(g));
    }

    let ln_fact = ln_factorials(rows.max(cols));
    let x = g * g;
    let abs_g = g.abs();
    let neg = g < 0.0;

    let mut out = DMatrix::zeros(rows, cols);

    // Lower triangle including the main diagonal: l = k + m.
    for m in 0..rows {
        let count = (rows - m).min(cols);
        if count == 0 {
            break;
        }
        let vals = diagonal_values(m, count, x, abs_g, neg, &ln_fact);
        for (k, v) in vals.into_iter().enumerate() {
            out[(k + m, k)] = v;
        }
    }
    // Upper triangle from ⟨l|D(g)|k⟩ = (-1)^{l+k} ⟨k|D(g)|l⟩.
    for m in 1..cols {
        let count = (cols - m).min(rows);
        if count == 0 {
            break;
        }
        let vals = diagonal_values(m, count, x, abs_g, neg, &ln_fact);
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for (l, v) in vals.into_iter().enumerate() {
            out[(l, l + m)] = sign * v;
        }
    }

    for l in 0..rows {
        for k in 0..cols {
            let v = out[(l, k)];
            if !v.is_finite() || v.abs() > 1.0 + 1e-12 {
                return Err(KernelError::Unstable {
                    row: l,
                    col: k,
                    value: v,
                });
            }
        }
    }
    Ok(out)
}

/// f_k = ⟨k+m|D(g)|k⟩ for k = 0..count, via the diagonal recurrence.
fn diagonal_values(
    m: usize,
    count: usize,
    x: f64,
    abs_g: f64,
    neg: bool,
    ln_fact: &[f64],
) -> Vec<f64> {
    let mf = m as f64;
    // ⟨m|D(|g|)|0⟩ = e^{-g²/2} |g|^m / sqrt(m!), with the sign of g entering
    // the whole diagonal as sign(g)^m.
    let mut f0 = if m == 0 {
        (-x / 2.0).exp()
    } else {
        (-x / 2.0 + mf * abs_g.ln() - 0.5 * ln_fact[m]).exp()
    };
    if neg && m % 2 == 1 {
        f0 = -f0;
    }

    let mut vals = Vec::with_capacity(count);
    vals.push(f0);
    if count == 1 {
        return vals;
    }
    let f1 = f0 * (1.0 + mf - x) / (mf + 1.0).sqrt();
    vals.push(f1);
    for k in 1..count - 1 {
        let kf = k as f64;
        let prev = vals[k];
        let prev2 = vals[k - 1];
        let next = ((2.0 * kf + mf + 1.0 - x) * prev - (kf * (kf + mf)).sqrt() * prev2)
            / ((kf + 1.0) * (kf + mf + 1.0)).sqrt();
        vals.push(next);
    }
    vals
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n + 1);
    v.push(0.0);
    let mut acc = 0.0f64;
    for i in 1..=n {
        acc += (i as f64).ln();
        v.push(acc);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_overlap() {
        let d = displaced_overlap_kernel(1.0, 3).unwrap();
        assert_relative_eq!(d[(0, 0)], (-0.5f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn identity_at_zero_displacement() {
        let d = displaced_overlap_kernel(0.0, 12).unwrap();
        for l in 0..12 {
            for k in 0..12 {
                let want = if l == k { 1.0 } else { 0.0 };
                assert_relative_eq!(d[(l, k)], want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn first_excited_node() {
        // ⟨1|D(g)|1⟩ = e^{-g²/2} (1 - g²) vanishes at g = 1.
        let d = displaced_overlap_kernel(1.0, 2).unwrap();
        assert!(d[(1, 1)].abs() < 1e-14);
        let d = displaced_overlap_kernel(0.7, 2).unwrap();
        assert_relative_eq!(
            d[(1, 1)],
            (-0.245f64).exp() * (1.0 - 0.49),
            epsilon = 1e-13
        );
    }

    #[test]
    fn matches_closed_forms_next_to_vacuum() {
        for &g in &[0.3, 1.1, -0.8] {
            let d = displaced_overlap_kernel(g, 3).unwrap();
            let e = (-g * g / 2.0).exp();
            assert_relative_eq!(d[(1, 0)], g * e, epsilon = 1e-13);
            assert_relative_eq!(d[(0, 1)], -g * e, epsilon = 1e-13);
            assert_relative_eq!(d[(2, 0)], g * g / 2.0f64.sqrt() * e, epsilon = 1e-13);
        }
    }

    #[test]
    fn transpose_is_negated_displacement() {
        let d = displaced_overlap_kernel(0.9, 14).unwrap();
        let dt = displaced_overlap_kernel(-0.9, 14).unwrap();
        for l in 0..14 {
            for k in 0..14 {
                assert_relative_eq!(d[(l, k)], dt[(k, l)], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn rows_stay_inside_unit_ball() {
        for &g in &[0.2, 1.7, 3.0, 5.5] {
            let d = displaced_overlap_kernel(g, 64).unwrap();
            for l in 0..64 {
                let s: f64 = (0..64).map(|k| d[(l, k)] * d[(l, k)]).sum();
                assert!(s <= 1.0 + 1e-10, "row {l} at g={g} sums to {s}");
            }
        }
    }

    #[test]
    fn large_sizes_stay_finite() {
        let d = displaced_overlap_kernel(3.0, 512).unwrap();
        // a partial isometry: rows approach unit norm deep in the bulk
        let mid: f64 = (0..512).map(|k| d[(200, k)] * d[(200, k)]).sum();
        assert!(mid > 1.0 - 1e-10 && mid <= 1.0 + 1e-10);
    }

    #[test]
    fn rectangular_slices_square() {
        let sq = displaced_overlap_kernel(1.3, 10).unwrap();
        let rect = displaced_overlap_rect(1.3, 4, 9).unwrap();
        for l in 0..4 {
            for k in 0..9 {
                assert_relative_eq!(rect[(l, k)], sq[(l, k)], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(displaced_overlap_kernel(f64::NAN, 4).is_err());
        assert!(displaced_overlap_kernel(1.0, 0).is_err());
    }
}
