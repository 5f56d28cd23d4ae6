//! Tiny dense least squares for the profile and θ fits.

use crate::error::{Error, Result};

/// Solve `min ‖A c − y‖₂` for a tall `rows × cols` design given row-wise.
///
/// Columns are scaled to unit norm, the normal equations are formed and
/// solved by Gaussian elimination with partial pivoting. A pivot below
/// `1e-12` of the largest diagonal entry means the design is rank deficient.
pub fn solve(design: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let cols = design.first().map_or(0, Vec::len);
    if cols == 0 || design.len() < cols || design.len() != y.len() {
        return Err(Error::InsufficientSamples {
            needed: cols.max(1),
            got: design.len(),
        });
    }
    let scale: Vec<f64> = (0..cols)
        .map(|j| design.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt())
        .collect();
    if scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::DegenerateSamples);
    }

    let mut m = vec![vec![0.0; cols + 1]; cols];
    for (row, &yi) in design.iter().zip(y) {
        for i in 0..cols {
            let ai = row[i] / scale[i];
            for j in 0..cols {
                m[i][j] += ai * row[j] / scale[j];
            }
            m[i][cols] += ai * yi;
        }
    }

    let max_diag = (0..cols).map(|i| m[i][i]).fold(0.0, f64::max);
    for k in 0..cols {
        let piv = (k..cols)
            .max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs()))
            .unwrap();
        if m[piv][k].abs() <= 1e-12 * max_diag {
            return Err(Error::DegenerateSamples);
        }
        m.swap(k, piv);
        for r in k + 1..cols {
            let factor = m[r][k] / m[k][k];
            for c in k..=cols {
                m[r][c] -= factor * m[k][c];
            }
        }
    }
    let mut c = vec![0.0; cols];
    for k in (0..cols).rev() {
        let tail: f64 = (k + 1..cols).map(|j| m[k][j] * c[j]).sum();
        c[k] = (m[k][cols] - tail) / m[k][k];
    }
    Ok(c.iter().zip(&scale).map(|(v, s)| v / s).collect())
}

/// Root-mean-square of `A c − y`.
pub fn rms_residual(design: &[Vec<f64>], y: &[f64], coeffs: &[f64]) -> f64 {
    let ss: f64 = design
        .iter()
        .zip(y)
        .map(|(row, yi)| {
            let fit: f64 = row.iter().zip(coeffs).map(|(a, c)| a * c).sum();
            (fit - yi).powi(2)
        })
        .sum();
    (ss / y.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let design: Vec<Vec<f64>> = xs.iter().map(|x| vec![1.0, *x]).collect();
        let y: Vec<f64> = xs.iter().map(|x| 2.0 - 4.0 * x).collect();
        let c = solve(&design, &y).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] + 4.0).abs() < 1e-12);
        assert!(rms_residual(&design, &y, &c) < 1e-12);
    }

    #[test]
    fn rank_deficiency_detected() {
        let design = vec![vec![1.0, 2.0]; 6];
        assert!(matches!(solve(&design, &[1.0; 6]), Err(Error::DegenerateSamples)));
    }
}
