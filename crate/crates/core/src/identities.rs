//! Algebraic facts about odd-degree angular polynomials: the sine product
//! formula, the rank of evaluations along `k` equispaced directions, and
//! the zeros of `g(α) = P(cos α, sin α)`.

use std::f64::consts::{PI, TAU};

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::check_odd;

/// Coefficients `c_j` of `x₁^{d−j} x₂^j`, `j = 0..=d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneousPoly {
    coeffs: Vec<f64>,
}

impl HomogeneousPoly {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("a homogeneous polynomial needs at least one coefficient"));
        }
        Ok(HomogeneousPoly { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        let d = self.degree();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * x1.powi((d - j) as i32) * x2.powi(j as i32))
            .sum()
    }

    /// `g(α) = P(cos α, sin α)`.
    pub fn angular(&self, alpha: f64) -> f64 {
        self.eval(alpha.cos(), alpha.sin())
    }

    /// `Re(e^{−i d·shift}(x₁ + i x₂)^d)` scaled by `amplitude`.
    pub fn harmonic(degree: usize, amplitude: f64, shift: f64) -> Self {
        let rot = Complex64::from_polar(amplitude, -(degree as f64) * shift);
        let mut binom = 1.0;
        let coeffs = (0..=degree)
            .map(|j| {
                if j > 0 {
                    binom *= (degree - j + 1) as f64 / j as f64;
                }
                (rot * Complex64::i().powu(j as u32) * binom).re
            })
            .collect();
        HomogeneousPoly { coeffs }
    }
}

/// `∏_{j=1..k} sin(π(2j−1)/(2k) − α)`, which equals `2^{1−k} cos(kα)`.
pub fn sin_product(k: usize, alpha: f64) -> Result<f64> {
    check_odd(k)?;
    Ok((1..=k)
        .map(|j| (PI * (2 * j - 1) as f64 / (2 * k) as f64 - alpha).sin())
        .product())
}

/// Pivot threshold for [`direction_rank`].
pub const RANK_TOL: f64 = 1e-10;

/// Rank of `M[j][i] = cos^{h−i}(θ_j) sin^i(θ_j)` with `θ_j = θ̄ + 2πj/k`,
/// the evaluation of degree-`h` homogeneous polynomials along `k`
/// equispaced directions. Singular values below `RANK_TOL` times the largest
/// count as zero.
pub fn direction_rank(h: usize, k: usize, theta_bar: f64) -> Result<usize> {
    check_odd(k)?;
    let m = Mat::<f64>::from_fn(k, h + 1, |j, i| {
        let t = theta_bar + TAU * j as f64 / k as f64;
        t.cos().powi((h - i) as i32) * t.sin().powi(i as i32)
    });
    let s = m
        .singular_values()
        .map_err(|e| Error::invalid(format!("singular values did not converge: {e:?}")))?;
    let top = s.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > RANK_TOL * top).count())
}

#[derive(Debug, Clone, Serialize)]
pub struct AngularRoots {
    /// Zeros of `g` in `(0, π)`, increasing.
    pub roots: Vec<f64>,
    /// Whether `g` has as many simple zeros in `(0, π)` as its degree.
    pub complete: bool,
}

/// Imaginary parts below this (relative to the root size) are rounding.
const REAL_TOL: f64 = 1e-7;

/// Zeros of `g(α) = P(cos α, sin α)` in `(0, π)`. With `t = cot α`,
/// `g(α) = sinᵈ(α)·P̃(t)` where `P̃(t) = Σ c_j t^{d−j}`, so the zeros are
/// `arccot` of the real roots of `P̃`, found as companion-matrix eigenvalues
/// and polished by Newton steps.
pub fn factor_roots(poly: &HomogeneousPoly) -> Result<AngularRoots> {
    let d = poly.degree();
    let c = poly.coeffs();
    if c[0] == 0.0 {
        return Err(Error::invalid("leading coefficient c₀ must be nonzero"));
    }
    if d == 0 {
        return Ok(AngularRoots {
            roots: Vec::new(),
            complete: true,
        });
    }
    // Monic P̃(t) = t^d + a_{d−1} t^{d−1} + … + a_0, a_i = c_{d−i}/c₀.
    let a: Vec<f64> = (0..d).map(|i| c[d - i] / c[0]).collect();
    let companion = Mat::<f64>::from_fn(d, d, |i, j| {
        if j == d - 1 {
            -a[i]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eig = companion
        .eigenvalues()
        .map_err(|e| Error::invalid(format!("companion eigenvalues did not converge: {e:?}")))?;
    let eval = |t: f64| -> (f64, f64) {
        // Horner for P̃ and its derivative, on the original coefficients.
        let (mut p, mut dp) = (0.0, 0.0);
        for &cj in c {
            dp = dp * t + p;
            p = p * t + cj;
        }
        (p, dp)
    };
    let mut roots = Vec::new();
    for z in eig {
        if z.im.abs() > REAL_TOL * (1.0 + z.re.abs()) {
            continue;
        }
        let mut t = z.re;
        for _ in 0..20 {
            let (p, dp) = eval(t);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            t -= step;
            if step.abs() <= 1e-16 * (1.0 + t.abs()) {
                break;
            }
        }
        // arccot with range (0, π)
        roots.push(1.0f64.atan2(t));
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    Ok(AngularRoots {
        complete: roots.len() == d,
        roots,
    })
}

/// `π(2j−1)/(2k) + shift`, `j = 1..k`, reduced to `[0, π)` and sorted: the
/// zeros of `cos(k(α − shift))` in one half turn.
pub fn expected_roots(k: usize, shift: f64) -> Vec<f64> {
    let mut r: Vec<f64> = (1..=k)
        .map(|j| (PI * (2 * j - 1) as f64 / (2 * k) as f64 + shift).rem_euclid(PI))
        .collect();
    r.sort_by(f64::total_cmp);
    r
}
