//! Small fitting helpers.

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Lorentzian `A / ((x − x₀)² + w²)` fitted to samples.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LorentzianFit {
    pub center: f64,
    /// Half width at half maximum.
    pub half_width: f64,
    pub amplitude: f64,
}

impl LorentzianFit {
    pub fn full_width(&self) -> f64 {
        2.0 * self.half_width
    }
}

/// Fits a Lorentzian by linear least squares on `1/y = (x² − 2x₀x + x₀² + w²)/A`,
/// weighting by `y²` so that the peak dominates. Samples with `y ≤ 0` are ignored.
pub fn fit_lorentzian(xs: &[f64], ys: &[f64]) -> Option<LorentzianFit> {
    // 1/y = c0 + c1 x + c2 x²
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    let x_ref = xs[xs.len() / 2];
    let scale = xs.iter().map(|x| (x - x_ref).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for (&x, &y) in xs.iter().zip(ys) {
        if !(y > 0.0) {
            continue;
        }
        let u = (x - x_ref) / scale;
        let w = y * y;
        let row = [1.0, u, u * u];
        for r in 0..3 {
            for c in 0..3 {
                ata[r][c] += w * row[r] * row[c];
            }
            atb[r] += w * row[r] / y;
        }
    }
    let coef = solve3(ata, atb)?;
    let (c0, c1, c2) = (coef[0], coef[1], coef[2]);
    if !(c2 > 0.0) {
        return None;
    }
    let u0 = -c1 / (2.0 * c2);
    let w2 = c0 / c2 - u0 * u0;
    if !(w2 > 0.0) {
        return None;
    }
    Some(LorentzianFit {
        center: x_ref + u0 * scale,
        half_width: w2.sqrt() * scale,
        amplitude: scale * scale / c2,
    })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn slope_of_line() {
        assert_relative_eq!(least_squares_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]), 2.0);
    }

    #[test]
    fn recovers_exact_lorentzian() {
        let xs: Vec<f64> = (0..101).map(|k| 4.0 + 0.002 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 / ((x - 4.1).powi(2) + 0.01f64.powi(2))).collect();
        let fit = fit_lorentzian(&xs, &ys).unwrap();
        assert_relative_eq!(fit.center, 4.1, epsilon = 1e-9);
        assert_relative_eq!(fit.half_width, 0.01, epsilon = 1e-9);
        assert_relative_eq!(fit.amplitude, 3.0, max_relative = 1e-8);
    }
}
