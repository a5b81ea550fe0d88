//! Finite-size-scaling machinery: susceptibility peak location, data
//! collapse with a quality metric, log-log exponent fits with local-slope
//! extrapolation, and the large-N concurrence extrapolation.

use crate::error::ScalingError;

/// Per-size observable curves feeding collapse and exponent fits.
#[derive(Debug, Clone)]
pub struct ScalingDataset {
    pub observable: String,
    pub entries: Vec<SizeCurve>,
}

#[derive(Debug, Clone)]
pub struct SizeCurve {
    pub n: u32,
    pub curve: Vec<(f64, f64)>,
}

impl ScalingDataset {
    pub fn new(observable: &str, entries: Vec<SizeCurve>) -> Result<Self, ScalingError> {
        if entries.len() < 3 {
            return Err(ScalingError::TooFewSizes {
                need: 3,
                got: entries.len(),
            });
        }
        for e in &entries {
            if e.curve.len() < 5 {
                return Err(ScalingError::InvalidDataset(format!(
                    "curve for N={} has {} points, need at least 5",
                    e.n,
                    e.curve.len()
                )));
            }
            if e.curve.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(ScalingError::InvalidDataset(format!(
                    "curve for N={} is not strictly increasing in λ",
                    e.n
                )));
            }
        }
        Ok(Self {
            observable: observable.to_string(),
            entries,
        })
    }
}

/// Peak of one susceptibility curve: parabola through the top three grid
/// points, with the vertex confined to the bracketing cell.
pub fn locate_fs_peak(curve: &[(f64, f64)]) -> Result<(f64, f64), ScalingError> {
    if curve.len() < 3 {
        return Err(ScalingError::InvalidDataset(format!(
            "need at least 3 points, got {}",
            curve.len()
        )));
    }
    let mut imax = 0;
    for (i, p) in curve.iter().enumerate() {
        if p.1 > curve[imax].1 {
            imax = i;
        }
    }
    if imax == 0 || imax == curve.len() - 1 {
        return Err(ScalingError::PeakAtEndpoint);
    }
    let (x0, y0) = curve[imax - 1];
    let (x1, y1) = curve[imax];
    let (x2, y2) = curve[imax + 1];
    // Lagrange parabola vertex
    let d0 = (x1 - x0) * (x2 - x0);
    let d1 = (x1 - x0) * (x2 - x1);
    let d2 = (x2 - x0) * (x2 - x1);
    let a = y0 / d0 - y1 / d1 + y2 / d2;
    let b = -y0 * (x1 + x2) / d0 + y1 * (x0 + x2) / d1 - y2 * (x0 + x1) / d2;
    if a.abs() < 1e-300 {
        return Ok((x1, y1));
    }
    let mut xv = -b / (2.0 * a);
    xv = xv.clamp(x0, x2);
    let c = y0 * x1 * x2 / d0 - y1 * x0 * x2 / d1 + y2 * x0 * x1 / d2;
    let yv = (a * xv + b) * xv + c;
    Ok((xv, yv.max(y1)))
}

/// Reference peak of one size used in the collapse rescaling.
#[derive(Debug, Clone, Copy)]
pub struct PeakRef {
    pub n: u32,
    pub lambda_max: f64,
    pub value_max: f64,
}

/// Collapse quality of (χmax - χ)/χ against x = N^ν (λ - λmax): curves are
/// rescaled, interpolated onto a common 200-point grid spanning their shared
/// window, and the RMS inter-curve spread is normalized by the RMS signal.
/// Zero means a perfect collapse.
pub fn collapse_quality(
    dataset: &ScalingDataset,
    nu: f64,
    peaks: &[PeakRef],
) -> Result<f64, ScalingError> {
    let rescaled: Vec<(Vec<f64>, Vec<f64>)> = dataset
        .entries
        .iter()
        .map(|e| {
            let peak = peaks
                .iter()
                .find(|p| p.n == e.n)
                .ok_or_else(|| ScalingError::InvalidDataset(format!("no peak for N={}", e.n)))?;
            let nf = f64::from(e.n).powf(nu);
            let xs: Vec<f64> = e.curve.iter().map(|(l, _)| nf * (l - peak.lambda_max)).collect();
            let ys: Vec<f64> = e
                .curve
                .iter()
                .map(|(_, chi)| (peak.value_max - chi) / chi)
                .collect();
            Ok((xs, ys))
        })
        .collect::<Result<_, ScalingError>>()?;

    let lo = rescaled
        .iter()
        .map(|(xs, _)| xs[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = rescaled
        .iter()
        .map(|(xs, _)| *xs.last().unwrap())
        .fold(f64::INFINITY, f64::min);
    if !hi.is_finite() || !lo.is_finite() || hi <= lo {
        return Err(ScalingError::EmptyOverlap);
    }

    let grid_n = 200;
    let mut spread_sq = 0.0;
    let mut signal_sq = 0.0;
    let interpolants: Vec<Pchip> = rescaled
        .iter()
        .map(|(xs, ys)| Pchip::new(xs, ys))
        .collect();
    for i in 0..grid_n {
        let x = lo + (hi - lo) * i as f64 / (grid_n - 1) as f64;
        let vals: Vec<f64> = interpolants.iter().map(|p| p.eval(x)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
        spread_sq += var;
        signal_sq += mean * mean;
    }
    if signal_sq <= 0.0 {
        return Err(ScalingError::InvalidDataset("flat signal".into()));
    }
    Ok((spread_sq / signal_sq).sqrt())
}

/// ν minimizing the collapse quality on `range`, by golden-section search.
pub fn best_collapse_exponent(
    dataset: &ScalingDataset,
    peaks: &[PeakRef],
    range: (f64, f64),
) -> Result<(f64, f64), ScalingError> {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = range;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = collapse_quality(dataset, c, peaks)?;
    let mut fd = collapse_quality(dataset, d, peaks)?;
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = collapse_quality(dataset, c, peaks)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = collapse_quality(dataset, d, peaks)?;
        }
        if (b - a).abs() < 1e-6 {
            break;
        }
    }
    let nu = 0.5 * (a + b);
    Ok((nu, collapse_quality(dataset, nu, peaks)?))
}

/// Exponent estimate from a log-log fit plus the local-slope extrapolation.
#[derive(Debug, Clone)]
pub struct ExponentFit {
    /// Plain least-squares slope in log-log coordinates.
    pub exponent: f64,
    pub stderr: f64,
    /// (1/N, slope) of consecutive size pairs, largest 1/N first.
    pub local_slopes: Vec<(f64, f64)>,
    /// Intercept of the local slopes extrapolated linearly in 1/N to zero.
    pub extrapolated_intercept: f64,
}

/// Least-squares slope of ln(value) against ln(N), local slopes from
/// consecutive pairs, and their linear-in-1/N extrapolation to N → ∞.
pub fn loglog_slope_fit(points: &[(f64, f64)]) -> Result<ExponentFit, ScalingError> {
    if points.len() < 4 {
        return Err(ScalingError::TooFewSizes {
            need: 4,
            got: points.len(),
        });
    }
    for &(_, v) in points {
        if v <= 0.0 {
            return Err(ScalingError::NonPositiveValue(v));
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, v)| (n.ln(), v.ln())).collect();
    let (slope, _intercept, stderr) = linear_fit(&logs);

    let mut local = Vec::with_capacity(points.len() - 1);
    for w in points.windows(2) {
        let (n0, v0) = w[0];
        let (n1, v1) = w[1];
        let s = (v1.ln() - v0.ln()) / (n1.ln() - n0.ln());
        let n_mid = (n0 * n1).sqrt();
        local.push((1.0 / n_mid, s));
    }
    local.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let (ext_slope, ext_intercept, _) = linear_fit(&local);
    let _ = ext_slope;

    Ok(ExponentFit {
        exponent: slope,
        stderr,
        local_slopes: local,
        extrapolated_intercept: ext_intercept,
    })
}

/// Joint fit C_N = C∞ - a N^{-θ}: for each trial θ the pair (C∞, a) is a
/// linear least-squares problem, and θ itself is found by golden-section
/// search on the residual, seeded around θ = 1/3.
pub fn extrapolate_c_infinity(
    points: &[(f64, f64)],
) -> Result<(f64, ExponentFit), ScalingError> {
    if points.len() < 4 {
        return Err(ScalingError::TooFewSizes {
            need: 4,
            got: points.len(),
        });
    }
    let increasing = points.windows(2).all(|w| w[1].1 >= w[0].1);
    let decreasing = points.windows(2).all(|w| w[1].1 <= w[0].1);
    if !increasing && !decreasing {
        return Err(ScalingError::NonMonotone);
    }

    let sum_sq = |theta: f64| -> (f64, f64, f64) {
        // linear LSQ for (c_inf, a) in C = c_inf - a x, x = N^{-θ}
        let n = points.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(size, c) in points {
            let x = size.powf(-theta);
            sx += x;
            sy += c;
            sxx += x * x;
            sxy += x * c;
        }
        let det = n * sxx - sx * sx;
        let a = -(n * sxy - sx * sy) / det;
        let c_inf = (sy + a * sx) / n;
        let ss: f64 = points
            .iter()
            .map(|&(size, c)| {
                let r = c - (c_inf - a * size.powf(-theta));
                r * r
            })
            .sum();
        (ss, c_inf, a)
    };

    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.02f64, 2.5f64);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let mut fc = sum_sq(c).0;
    let mut fd = sum_sq(d).0;
    for _ in 0..200 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = sum_sq(c).0;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = sum_sq(d).0;
        }
        if (hi - lo).abs() < 1e-12 {
            break;
        }
    }
    let theta = 0.5 * (lo + hi);
    let (_, c_inf, _a) = sum_sq(theta);

    // exponent of the difference curve log(C∞ - C_N) vs log N
    let diffs: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(_, c)| c_inf - c > 0.0)
        .map(|&(n, c)| (n, c_inf - c))
        .collect();
    if diffs.len() < 4 {
        return Err(ScalingError::InvalidDataset(
            "extrapolated limit does not dominate the data".into(),
        ));
    }
    let fit = loglog_slope_fit(&diffs)?;
    Ok((c_inf, fit))
}

/// Slope, intercept and slope standard error of an ordinary least-squares
/// line through (x, y) pairs.
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let ssr: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - slope * p.0 - intercept;
            r * r
        })
        .sum();
    let dof = (pts.len().max(3) - 2) as f64;
    let stderr = (ssr / dof / (sxx - sx * sx / n)).sqrt();
    (slope, intercept, stderr)
}

/// Monotone piecewise-cubic interpolant (Fritsch-Carlson slopes): smooth and
/// overshoot-free, clamped to the end values outside the data range.
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        assert!(n >= 2 && n == ys.len());
        let mut deltas = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            deltas.push((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
        }
        let mut ds = vec![0.0; n];
        ds[0] = deltas[0];
        ds[n - 1] = deltas[n - 2];
        for i in 1..n - 1 {
            let (d0, d1) = (deltas[i - 1], deltas[i]);
            ds[i] = if d0 * d1 <= 0.0 {
                0.0
            } else {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                (w1 + w2) / (w1 / d0 + w2 / d1)
            };
        }
        Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            ds,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let mut i = match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).unwrap())
        {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        if i >= n - 1 {
            i = n - 2;
        }
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (d0, d1) = (self.ds[i], self.ds[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + h * d0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + h * d1 * (t3 - t2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parabola_vertex_recovered_exactly() {
        let curve: Vec<(f64, f64)> = (0..11)
            .map(|i| {
                let x = 0.1 * i as f64;
                (x, 3.0 - 5.0 * (x - 0.47) * (x - 0.47))
            })
            .collect();
        let (xm, ym) = locate_fs_peak(&curve).unwrap();
        assert_relative_eq!(xm, 0.47, epsilon = 1e-12);
        assert_relative_eq!(ym, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn tent_peak_at_midpoint() {
        let curve: Vec<(f64, f64)> = (0..9)
            .map(|i| {
                let x = i as f64;
                (x, 4.0 - (x - 4.0).abs())
            })
            .collect();
        let (xm, _) = locate_fs_peak(&curve).unwrap();
        assert_relative_eq!(xm, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn endpoint_peak_is_rejected() {
        let curve = vec![(0.0, 3.0), (1.0, 2.0), (2.0, 1.0)];
        assert!(matches!(
            locate_fs_peak(&curve),
            Err(ScalingError::PeakAtEndpoint)
        ));
    }

    fn synthetic_dataset(nu: f64) -> (ScalingDataset, Vec<PeakRef>) {
        // χ(λ; N) = χmax / (1 + f(x)), x = N^ν (λ - λmax), so that
        // (χmax - χ)/χ = f(x) exactly; common x samples across sizes.
        let master = |x: f64| x * x / (1.0 + 0.2 * x * x);
        let sizes = [32u32, 64, 128, 256];
        let xs: Vec<f64> = (-10..=10).map(|i| 0.3 * i as f64).collect();
        let mut entries = Vec::new();
        let mut peaks = Vec::new();
        for &n in &sizes {
            let nf = f64::from(n);
            let lmax = 0.5 - 0.3 / nf;
            let chimax = 2.0 * nf.powf(0.9);
            let curve: Vec<(f64, f64)> = xs
                .iter()
                .map(|&x| (lmax + x / nf.powf(nu), chimax / (1.0 + master(x))))
                .collect();
            entries.push(SizeCurve { n, curve });
            peaks.push(PeakRef {
                n,
                lambda_max: lmax,
                value_max: chimax,
            });
        }
        (
            ScalingDataset::new("fs_avg", entries).unwrap(),
            peaks,
        )
    }

    #[test]
    fn constructed_collapse_is_perfect_at_true_exponent() {
        let (ds, peaks) = synthetic_dataset(2.0 / 3.0);
        let q = collapse_quality(&ds, 2.0 / 3.0, &peaks).unwrap();
        assert!(q < 1e-10, "quality {q}");
        let q_wrong = collapse_quality(&ds, 1.0 / 3.0, &peaks).unwrap();
        assert!(q_wrong > 0.05, "quality off-exponent {q_wrong}");
    }

    #[test]
    fn collapse_quality_invariant_under_common_x_rescale() {
        // scaling all λ offsets by c rescales every x by c and must not
        // change the quality
        let (ds, peaks) = synthetic_dataset(2.0 / 3.0);
        let scaled_entries: Vec<SizeCurve> = ds
            .entries
            .iter()
            .map(|e| {
                let peak = peaks.iter().find(|p| p.n == e.n).unwrap();
                SizeCurve {
                    n: e.n,
                    curve: e
                        .curve
                        .iter()
                        .map(|&(l, v)| (peak.lambda_max + 3.0 * (l - peak.lambda_max), v))
                        .collect(),
                }
            })
            .collect();
        let ds2 = ScalingDataset::new("fs_avg", scaled_entries).unwrap();
        let q1 = collapse_quality(&ds, 2.0 / 3.0, &peaks).unwrap();
        let q2 = collapse_quality(&ds2, 2.0 / 3.0, &peaks).unwrap();
        assert_relative_eq!(q1, q2, epsilon = 1e-9);
    }

    #[test]
    fn nu_search_finds_the_constructed_exponent() {
        let (ds, peaks) = synthetic_dataset(2.0 / 3.0);
        let (nu, q) = best_collapse_exponent(&ds, &peaks, (0.3, 1.2)).unwrap();
        assert!((nu - 2.0 / 3.0).abs() < 1e-3, "nu = {nu}");
        // away from the exact exponent the common samples decohere, so the
        // floor is set by interpolation spread rather than zero
        assert!(q < 1e-4, "quality {q}");
    }

    #[test]
    fn exact_power_law_slope() {
        let pts: Vec<(f64, f64)> = [16u32, 32, 64, 128, 256]
            .iter()
            .map(|&n| (f64::from(n), f64::from(n).powf(-2.0 / 3.0)))
            .collect();
        let fit = loglog_slope_fit(&pts).unwrap();
        assert_relative_eq!(fit.exponent, -2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(fit.extrapolated_intercept, -2.0 / 3.0, epsilon = 1e-12);
        assert!(fit.stderr < 1e-12);
    }

    #[test]
    fn corrected_power_law_extrapolates_better() {
        let pts: Vec<(f64, f64)> = [16u32, 32, 64, 128, 256, 512]
            .iter()
            .map(|&n| {
                let nf = f64::from(n);
                (nf, 1.7 * nf.powf(-1.0 / 3.0) * (1.0 + 4.0 / nf))
            })
            .collect();
        let fit = loglog_slope_fit(&pts).unwrap();
        let raw_err = (fit.exponent + 1.0 / 3.0).abs();
        let ext_err = (fit.extrapolated_intercept + 1.0 / 3.0).abs();
        assert!(ext_err < raw_err, "ext {ext_err} raw {raw_err}");
        assert!(ext_err < 0.01);
    }

    #[test]
    fn scale_equivariance_of_slope_estimators() {
        let pts: Vec<(f64, f64)> = [16u32, 32, 64, 128]
            .iter()
            .map(|&n| (f64::from(n), 0.3 * f64::from(n).powf(-0.41)))
            .collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(n, v)| (n, 7.3 * v)).collect();
        let f1 = loglog_slope_fit(&pts).unwrap();
        let f2 = loglog_slope_fit(&scaled).unwrap();
        assert_relative_eq!(f1.exponent, f2.exponent, epsilon = 1e-12);
        assert_relative_eq!(
            f1.extrapolated_intercept,
            f2.extrapolated_intercept,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rejects_nonpositive_values() {
        let pts = vec![(16.0, 1.0), (32.0, 0.5), (64.0, 0.0), (128.0, 0.1)];
        assert!(matches!(
            loglog_slope_fit(&pts),
            Err(ScalingError::NonPositiveValue(_))
        ));
    }

    #[test]
    fn exact_extrapolation_model_recovery() {
        let pts: Vec<(f64, f64)> = [8u32, 16, 32, 64, 128, 256]
            .iter()
            .map(|&n| (f64::from(n), 0.3 - f64::from(n).powf(-1.0 / 3.0)))
            .collect();
        let (c_inf, fit) = extrapolate_c_infinity(&pts).unwrap();
        assert_relative_eq!(c_inf, 0.3, epsilon = 1e-8);
        assert_relative_eq!(fit.exponent, -1.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn non_monotone_sequence_rejected() {
        let pts = vec![(8.0, 0.1), (16.0, 0.3), (32.0, 0.2), (64.0, 0.25)];
        assert!(matches!(
            extrapolate_c_infinity(&pts),
            Err(ScalingError::NonMonotone)
        ));
    }

    #[test]
    fn pchip_is_monotone_between_knots() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 0.7).tanh()).collect();
        let p = Pchip::new(&xs, &ys);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..500 {
            let x = 9.0 * i as f64 / 499.0;
            let v = p.eval(x);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        // reproduces knots
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert_relative_eq!(p.eval(*x), *y, epsilon = 1e-14);
        }
    }
}
