//! Small dense least-squares fits with coefficient covariances.

use faer::Mat;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LsqFit {
    pub coeffs: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `(XᵀX)⁻¹`: multiply by a noise variance to get coefficient covariances.
    pub unscaled_cov: Vec<Vec<f64>>,
    /// Pseudo-inverse rows: `coeffs = pinv · y`.
    pub pinv: Vec<Vec<f64>>,
}

impl LsqFit {
    pub fn rms(&self) -> f64 {
        if self.residuals.is_empty() {
            return 0.0;
        }
        (self.residuals.iter().map(|r| r * r).sum::<f64>() / self.residuals.len() as f64).sqrt()
    }

    /// Standard errors from the residual variance `Σr²/(m − p)`.
    pub fn standard_errors(&self) -> Vec<f64> {
        let m = self.residuals.len();
        let p = self.coeffs.len();
        let dof = m.saturating_sub(p).max(1) as f64;
        let s2 = self.residuals.iter().map(|r| r * r).sum::<f64>() / dof;
        (0..p).map(|i| (s2 * self.unscaled_cov[i][i]).sqrt()).collect()
    }

    /// Coefficient standard errors induced by independent data errors `sigma`.
    pub fn propagated_errors(&self, sigma: &[f64]) -> Vec<f64> {
        self.pinv
            .iter()
            .map(|row| {
                row.iter()
                    .zip(sigma)
                    .map(|(a, s)| (a * s).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }
}

/// Minimizes `‖X c − y‖₂` through a thin SVD; columns are equilibrated
/// first, and a relative singular-value floor of `1e-12` marks rank loss.
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Result<LsqFit> {
    let m = design.len();
    let p = design.first().map_or(0, |r| r.len());
    if m != y.len() {
        return Err(Error::ShapeMismatch {
            expected: m,
            got: y.len(),
        });
    }
    if p == 0 || m < p {
        return Err(Error::RankDeficient { rows: m, cols: p });
    }
    let scale: Vec<f64> = (0..p)
        .map(|j| {
            let s = design.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
            if s > 0.0 {
                1.0 / s
            } else {
                0.0
            }
        })
        .collect();
    if scale.iter().any(|&s| s == 0.0) {
        return Err(Error::RankDeficient { rows: m, cols: p });
    }
    let x = Mat::<f64>::from_fn(m, p, |i, j| design[i][j] * scale[j]);
    let svd = x
        .thin_svd()
        .map_err(|e| Error::invalid(format!("svd failed: {e:?}")))?;
    let s = svd.S();
    let u = svd.U();
    let v = svd.V();
    let smax = s[0];
    let smin = s[p - 1];
    if !(smin > 1e-12 * smax) {
        return Err(Error::RankDeficient { rows: m, cols: p });
    }
    // pinv = D V S⁻¹ Uᵀ
    let mut pinv = vec![vec![0.0; m]; p];
    for (a, row) in pinv.iter_mut().enumerate() {
        for (i, slot) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..p {
                acc += v[(a, k)] * u[(i, k)] / s[k];
            }
            *slot = acc * scale[a];
        }
    }
    let coeffs: Vec<f64> = pinv
        .iter()
        .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum())
        .collect();
    let residuals: Vec<f64> = design
        .iter()
        .zip(y)
        .map(|(r, &yi)| yi - r.iter().zip(&coeffs).map(|(a, c)| a * c).sum::<f64>())
        .collect();
    let mut unscaled_cov = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in 0..p {
            let mut acc = 0.0;
            for k in 0..p {
                acc += v[(a, k)] * v[(b, k)] / (s[k] * s[k]);
            }
            unscaled_cov[a][b] = acc * scale[a] * scale[b];
        }
    }
    Ok(LsqFit {
        coeffs,
        residuals,
        unscaled_cov,
        pinv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let design: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 2.0 + 3.0 * i as f64).collect();
        let fit = least_squares(&design, &y).unwrap();
        assert!((fit.coeffs[0] - 2.0).abs() < 1e-12);
        assert!((fit.coeffs[1] - 3.0).abs() < 1e-12);
        assert!(fit.rms() < 1e-12);
        // Unit data errors propagate as the square roots of (XᵀX)⁻¹.
        let prop = fit.propagated_errors(&[1.0; 5]);
        for i in 0..2 {
            assert!((prop[i] - fit.unscaled_cov[i][i].sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_loss_detected() {
        let design = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        assert!(matches!(
            least_squares(&design, &[1.0, 2.0, 3.0]),
            Err(Error::RankDeficient { .. })
        ));
    }
}
