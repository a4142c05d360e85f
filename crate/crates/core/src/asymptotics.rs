//! Pole sweeps: eigenvalues `λ_a` for poles around a base point, the
//! normalized difference `(λ₀ − λ_a)/|a|ᵏ`, and the homogeneous polynomial
//! that describes it to leading order.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{smallest_eigenpairs_with, EigenOptions};
use crate::error::{Error, Result};
use crate::expansion::{extract_expansion, wrap_period, ExpansionOptions, LocalExpansion};
use crate::extrapolate::{observed_order, richardson_extrapolate, ExtrapolationResult};
use crate::geom::{check_odd, Point};
use crate::grid::{build_grid_with, DomainSpec, Grid, GridOptions};
use crate::lsq::least_squares;
use crate::operator::{assemble_ab_laplacian_real, CutGauge, PoleOptions};

/// Grid on `domain` with `pole` at the centre of a plaquette.
pub fn pole_grid(domain: &DomainSpec, pole: Point, h: f64) -> Result<Grid> {
    build_grid_with(
        domain,
        h,
        &GridOptions {
            anchor: pole + Point::new(0.5 * h, 0.5 * h),
            ..GridOptions::default()
        },
    )
}

/// Lowest eigenpairs at one pole, vectors in the Peierls gauge of the pole
/// and normalized in the mesh L² norm.
#[derive(Debug, Clone)]
pub struct PoleSpectrum {
    pub pole: Point,
    pub grid: Grid,
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    pub clusters: Vec<Vec<usize>>,
}

impl PoleSpectrum {
    /// Whether eigenvalue `index` (1-based) is simple.
    pub fn is_simple(&self, index: usize) -> bool {
        self.clusters.iter().any(|c| c.len() == 1 && c[0] + 1 == index)
    }
}

/// Solves in a real cut gauge (cut along the positive `x₁` direction) and
/// transports the vectors back to the Peierls gauge.
pub fn solve_at_pole(
    domain: &DomainSpec,
    pole: Point,
    h: f64,
    count: usize,
    opts: &EigenOptions,
) -> Result<PoleSpectrum> {
    let grid = pole_grid(domain, pole, h)?;
    let gauge = CutGauge::new(pole, 0.0);
    let op = assemble_ab_laplacian_real(&grid, gauge, PoleOptions::default())?;
    let sol = smallest_eigenpairs_with(&op, count, opts, None)?;
    let values = sol.values();
    let vectors = sol
        .pairs
        .iter()
        .map(|p| gauge.to_peierls(&grid, &p.vector))
        .collect::<Result<_>>()?;
    Ok(PoleSpectrum {
        pole,
        grid,
        values,
        vectors,
        clusters: sol.clusters,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub domain: DomainSpec,
    pub base: Point,
    /// 1-based index of the tracked eigenvalue.
    pub index: usize,
    /// Distances `|a − base|`.
    pub radii: Vec<f64>,
    /// Directions of `a − base`.
    pub angles: Vec<f64>,
    /// Strictly decreasing grid spacings.
    pub h_seq: Vec<f64>,
}

impl SweepConfig {
    /// Unit disk, base `(0.3, 0)`, first eigenvalue, four radii and 16
    /// equispaced angles.
    pub fn flagship(h_seq: Vec<f64>) -> Self {
        SweepConfig {
            domain: DomainSpec::unit_disk(),
            base: Point::new(0.3, 0.0),
            index: 1,
            radii: vec![0.02, 0.03, 0.045, 0.0675],
            angles: (0..16).map(|j| TAU * j as f64 / 16.0).collect(),
            h_seq,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.index == 0 {
            return Err(Error::invalid("eigenvalue index is 1-based"));
        }
        if self.h_seq.is_empty() || self.h_seq.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("spacings must be nonempty and strictly decreasing"));
        }
        let finest = *self.h_seq.last().unwrap();
        if !(finest > 0.0) {
            return Err(Error::invalid("spacings must be positive"));
        }
        for &r in &self.radii {
            if !(r >= 4.0 * finest) {
                return Err(Error::RadiusOutOfRange {
                    r,
                    lo: 4.0 * finest,
                    hi: f64::INFINITY,
                });
            }
        }
        if self.angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("angles must be finite"));
        }
        if !self.domain.contains(self.base) {
            return Err(Error::PoleOutside(self.base.x1, self.base.x2));
        }
        Ok(())
    }

    pub fn poles(&self) -> Vec<(f64, f64, Point)> {
        self.angles
            .iter()
            .flat_map(|&alpha| {
                self.radii
                    .iter()
                    .map(move |&r| (alpha, r, self.base + Point::polar(r, alpha)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub radius: f64,
    pub pole: Point,
    /// `λ_a` at each spacing.
    pub lambda: Vec<f64>,
    /// `λ₀ − λ_a` at each spacing, extrapolated to `h = 0`.
    pub difference: Option<ExtrapolationResult>,
    pub lambda_limit: Option<ExtrapolationResult>,
    /// Why the pole failed, if it did.
    pub failure: Option<String>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    /// `λ₀` at each spacing.
    pub base_lambda: Vec<f64>,
    pub lambda0: ExtrapolationResult,
    /// `λ_{n₀+1} − λ_{n₀}` at the base pole on the finest grid.
    pub gap: f64,
    pub rows: Vec<SweepRow>,
}

/// Spacing order assumed when fewer than three spacings are available.
pub const SWEEP_SPACING_ORDER: f64 = 1.0;

/// Extrapolates values on strictly decreasing spacings to `h = 0`, at the
/// observed order when it is plausible and at [`SWEEP_SPACING_ORDER`]
/// otherwise.
pub fn extrapolate_in_h(h_seq: &[f64], values: &[f64]) -> Result<ExtrapolationResult> {
    let samples: Vec<(f64, f64)> = h_seq.iter().copied().zip(values.iter().copied()).collect();
    if samples.len() == 1 {
        return Ok(ExtrapolationResult::exact(h_seq[0], values[0], f64::NAN));
    }
    let order = observed_order(h_seq, values)
        .filter(|p| (0.5..=2.5).contains(p))
        .unwrap_or(SWEEP_SPACING_ORDER);
    richardson_extrapolate(&samples, Some(order))
}

/// Runs every pole of the configuration on at most `jobs` threads. Poles
/// that fail are recorded in their row; a degenerate tracked eigenvalue at
/// the base aborts.
pub fn run_sweep(config: &SweepConfig, opts: &EigenOptions, jobs: usize) -> Result<SweepResult> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep_inner(config, opts))
}

fn run_sweep_inner(config: &SweepConfig, opts: &EigenOptions) -> Result<SweepResult> {
    let n0 = config.index;
    let base: Vec<PoleSpectrum> = config
        .h_seq
        .par_iter()
        .map(|&h| solve_at_pole(&config.domain, config.base, h, n0 + 1, opts))
        .collect::<Result<_>>()?;
    for s in &base {
        if !s.is_simple(n0) {
            let cluster = s.clusters.iter().find(|c| c.contains(&(n0 - 1)));
            let other = cluster.and_then(|c| c.iter().copied().find(|&i| i != n0 - 1)).unwrap_or(n0);
            return Err(Error::Clustered {
                index: n0,
                value: s.values[n0 - 1],
                neighbour: s.values[other.min(s.values.len() - 1)],
            });
        }
    }
    let base_lambda: Vec<f64> = base.iter().map(|s| s.values[n0 - 1]).collect();
    let lambda0 = extrapolate_in_h(&config.h_seq, &base_lambda)?;
    let finest = base.last().unwrap();
    let gap = finest.values[n0] - finest.values[n0 - 1];
    let jobs: Vec<(f64, f64, Point, f64)> = config
        .poles()
        .into_iter()
        .flat_map(|(a, r, p)| config.h_seq.iter().map(move |&h| (a, r, p, h)))
        .collect();
    let solved: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(_, _, p, h)| solve_at_pole(&config.domain, p, h, n0, opts).map(|s| s.values[n0 - 1]))
        .collect();
    let nh = config.h_seq.len();
    let rows = config
        .poles()
        .into_iter()
        .zip(solved.chunks(nh))
        .map(|((alpha, radius, pole), chunk)| {
            let mut row = SweepRow {
                alpha,
                radius,
                pole,
                lambda: Vec::new(),
                difference: None,
                lambda_limit: None,
                failure: None,
            };
            let lambda: std::result::Result<Vec<f64>, String> =
                chunk.iter().map(|r| r.as_ref().copied().map_err(|e| e.to_string())).collect();
            let outcome = lambda.and_then(|l| {
                let diff: Vec<f64> = base_lambda.iter().zip(&l).map(|(b, a)| b - a).collect();
                let d = extrapolate_in_h(&config.h_seq, &diff).map_err(|e| e.to_string())?;
                let lim = extrapolate_in_h(&config.h_seq, &l).map_err(|e| e.to_string())?;
                Ok((d, lim, l))
            });
            match outcome {
                Ok((d, l, values)) => {
                    row.difference = Some(d);
                    row.lambda_limit = Some(l);
                    row.lambda = values;
                }
                Err(e) => row.failure = Some(e),
            }
            row
        })
        .collect();
    Ok(SweepResult {
        config: config.clone(),
        base_lambda,
        lambda0,
        gap,
        rows,
    })
}

fn same_angle(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d) < 1e-9
}

/// Local expansion of the normalized eigenfunction at the base pole on
/// each grid, with the amplitude `|β₁|² + |β₂|²` extrapolated in `h`. The
/// returned coefficients are those of the finest grid rescaled to the
/// extrapolated amplitude; `beta_error` includes the extrapolation error.
pub fn base_expansion(config: &SweepConfig, radii: &[f64], opts: &EigenOptions) -> Result<LocalExpansion> {
    config.validate()?;
    let mut expansions = Vec::with_capacity(config.h_seq.len());
    for &h in &config.h_seq {
        let s = solve_at_pole(&config.domain, config.base, h, config.index, opts)?;
        let n = config.index - 1;
        let e = extract_expansion(
            &s.grid,
            &s.vectors[n],
            config.base,
            radii,
            &ExpansionOptions {
                eigenvalue: Some(s.values[n]),
                ..ExpansionOptions::default()
            },
        )?;
        expansions.push(e);
    }
    let mut finest = expansions.pop().unwrap();
    if let Some(e) = expansions.iter().find(|e| e.k != finest.k) {
        return Err(Error::InconclusiveOrder { max: e.k.max(finest.k) });
    }
    expansions.push(finest.clone());
    let amps: Vec<f64> = expansions.iter().map(|e| e.amplitude_sq()).collect();
    let amp = extrapolate_in_h(&config.h_seq, &amps)?;
    if amp.limit > 0.0 && expansions.len() > 1 {
        let s = (amp.limit / finest.amplitude_sq()).sqrt();
        finest.beta1 *= s;
        finest.beta2 *= s;
        finest.beta_error = finest.beta_error.hypot(amp.error_estimate / (2.0 * amp.limit.sqrt()));
    }
    Ok(finest)
}

/// Directions `α₀`, `α₀ + π/(2k)` and `α₀ + π/k`, where the leading term is
/// largest, vanishes and changes sign.
pub fn sign_pattern_angles(alpha0: f64, k: usize) -> [f64; 3] {
    let q = PI / k as f64;
    [alpha0, alpha0 + 0.5 * q, alpha0 + q].map(|a| a.rem_euclid(TAU))
}

/// Sweeps the directions in `angles` that `result` lacks (same domain,
/// base, radii and spacings) and appends their rows.
pub fn ensure_directions(result: &mut SweepResult, angles: &[f64], opts: &EigenOptions, jobs: usize) -> Result<()> {
    let missing: Vec<f64> = angles
        .iter()
        .copied()
        .filter(|&a| !result.rows.iter().any(|r| same_angle(r.alpha, a)))
        .collect();
    if missing.is_empty() {
        return Ok(());
    }
    let config = SweepConfig {
        angles: missing,
        ..result.config.clone()
    };
    let extra = run_sweep(&config, opts, jobs)?;
    result.config.angles.extend(config.angles);
    result.rows.extend(extra.rows);
    Ok(())
}

/// Limit of `(λ₀ − λ_a)/|a|ᵏ` along direction `alpha`, by first-order
/// Richardson extrapolation in `|a|` over the rows at that direction.
pub fn directional_limit(result: &SweepResult, alpha: f64, k: usize) -> Result<ExtrapolationResult> {
    check_odd(k)?;
    let mut samples: Vec<(f64, f64)> = result
        .rows
        .iter()
        .filter(|r| same_angle(r.alpha, alpha))
        .filter_map(|r| r.difference.as_ref().map(|d| (r.radius, d.limit / r.radius.powi(k as i32))))
        .collect();
    if samples.len() < 3 {
        return Err(Error::invalid(format!(
            "direction {alpha} has {} usable radii, need at least 3",
            samples.len()
        )));
    }
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    richardson_extrapolate(&samples, Some(1.0))
}

/// Fitted leading polynomial `P(a) = Σ c_j a₁^{k−j} a₂^j` of `λ₀ − λ_a`.
#[derive(Debug, Clone, Serialize)]
pub struct PolyFit {
    pub k: usize,
    pub coeffs: Vec<f64>,
    /// Standard errors of `coeffs`.
    pub coeff_errors: Vec<f64>,
    pub c0: f64,
    /// In `[0, 2π/k)`.
    pub alpha0_fit: f64,
    pub rms: f64,
    /// Coefficients of the full polynomial fit of degrees `0..=k+2`, grouped
    /// by degree, with their error bars.
    pub lower_degrees: Vec<DegreeCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeCheck {
    pub degree: usize,
    pub coeffs: Vec<f64>,
    pub errors: Vec<f64>,
}

impl DegreeCheck {
    /// Every coefficient within `factor` error bars of zero.
    pub fn is_zero(&self, factor: f64) -> bool {
        self.coeffs.iter().zip(&self.errors).all(|(c, e)| c.abs() <= factor * e)
    }
}

impl PolyFit {
    /// `g(α) = P(cos α, sin α)`.
    pub fn angular(&self, alpha: f64) -> f64 {
        eval_homogeneous(&self.coeffs, Point::polar(1.0, alpha))
    }

    /// `C₀ cos(k(α − α₀))`, the harmonic part of `g`.
    pub fn model(&self, alpha: f64) -> f64 {
        self.c0 * (self.k as f64 * (alpha - self.alpha0_fit)).cos()
    }
}

pub fn eval_homogeneous(coeffs: &[f64], a: Point) -> f64 {
    let deg = coeffs.len() - 1;
    coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| c * a.x1.powi((deg - j) as i32) * a.x2.powi(j as i32))
        .sum()
}

fn monomials(deg: usize, a: Point) -> impl Iterator<Item = f64> {
    (0..=deg).map(move |j| a.x1.powi((deg - j) as i32) * a.x2.powi(j as i32))
}

/// Degrees fitted above `k` to absorb the next Taylor terms.
pub const NUISANCE_DEGREES: usize = 2;

/// Least-squares fit of the degree-`k` homogeneous polynomial (plus
/// nuisance degrees `k+1..=k+2`) to the extrapolated differences, then the
/// Fourier projection of `g(α) = P(cos α, sin α)` onto `cos kα`, `sin kα`.
pub fn fit_polynomial(result: &SweepResult, k: usize) -> Result<PolyFit> {
    check_odd(k)?;
    let rows: Vec<(Point, f64, f64)> = result
        .rows
        .iter()
        .filter_map(|r| {
            r.difference
                .as_ref()
                .map(|d| (r.pole - result.config.base, d.limit, d.error_estimate))
        })
        .collect();
    fit_polynomial_points(&rows, k)
}

/// [`fit_polynomial`] on raw `(a, λ₀ − λ_a, error)` triples.
pub fn fit_polynomial_points(rows: &[(Point, f64, f64)], k: usize) -> Result<PolyFit> {
    check_odd(k)?;
    let top = k + NUISANCE_DEGREES;
    let ncols: usize = (k..=top).map(|d| d + 1).sum();
    if rows.len() < ncols.max(2 * (k + 1)) {
        return Err(Error::RankDeficient {
            rows: rows.len(),
            cols: ncols,
        });
    }
    let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let design: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| (k..=top).flat_map(|d| monomials(d, r.0)).collect())
        .collect();
    let fit = least_squares(&design, &y)?;
    let coeffs = fit.coeffs[..=k].to_vec();
    let coeff_errors = fit.standard_errors()[..=k].to_vec();
    let (c0, alpha0_fit) = harmonic_part(&coeffs, k);

    let full_design: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| (0..=top).flat_map(|d| monomials(d, r.0)).collect())
        .collect();
    let full = least_squares(&full_design, &y)?;
    let sigma: Vec<f64> = rows.iter().map(|r| if r.2.is_finite() { r.2 } else { 0.0 }).collect();
    let propagated = full.propagated_errors(&sigma);
    let regression = full.standard_errors();
    let mut lower_degrees = Vec::new();
    let mut at = 0;
    for d in 0..=top {
        let n = d + 1;
        if d < k {
            lower_degrees.push(DegreeCheck {
                degree: d,
                coeffs: full.coeffs[at..at + n].to_vec(),
                errors: (at..at + n).map(|i| propagated[i].hypot(regression[i])).collect(),
            });
        }
        at += n;
    }
    Ok(PolyFit {
        k,
        coeffs,
        coeff_errors,
        c0,
        alpha0_fit,
        rms: fit.rms(),
        lower_degrees,
    })
}

/// `(C₀, α₀)` with `C₀ ≥ 0` from the `cos kα`, `sin kα` Fourier modes of
/// `g(α) = P(cos α, sin α)`.
pub fn harmonic_part(coeffs: &[f64], k: usize) -> (f64, f64) {
    let n = 64 * (k + 1);
    let (mut c, mut s) = (0.0, 0.0);
    for m in 0..n {
        let t = TAU * m as f64 / n as f64;
        let g = eval_homogeneous(coeffs, Point::polar(1.0, t));
        c += g * (k as f64 * t).cos();
        s += g * (k as f64 * t).sin();
    }
    c *= 2.0 / n as f64;
    s *= 2.0 / n as f64;
    let period = TAU / k as f64;
    (c.hypot(s), wrap_period(s.atan2(c) / k as f64, period))
}

/// Coefficients of `C₀ Re(e^{−ikα₀}(a₁ + i a₂)ᵏ)` in the monomial basis
/// `a₁^{k−j} a₂^j`.
pub fn harmonic_coefficients(k: usize, c0: f64, alpha0: f64) -> Vec<f64> {
    let rot = Complex64::from_polar(c0, -(k as f64) * alpha0);
    let mut binom = 1.0;
    (0..=k)
        .map(|j| {
            if j > 0 {
                binom *= (k - j + 1) as f64 / j as f64;
            }
            let ij = Complex64::i().powu(j as u32);
            (rot * ij * binom).re
        })
        .collect()
}

/// Coefficients of `ΔP` (degree `k − 2`).
pub fn laplacian_coefficients(coeffs: &[f64]) -> Vec<f64> {
    let deg = coeffs.len() - 1;
    if deg < 2 {
        return Vec::new();
    }
    let mut out = vec![0.0; deg - 1];
    for (j, &c) in coeffs.iter().enumerate() {
        let (m, n) = ((deg - j) as f64, j as f64);
        if deg - j >= 2 {
            out[j] += c * m * (m - 1.0);
        }
        if j >= 2 {
            out[j - 2] += c * n * (n - 1.0);
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub k: usize,
    pub mk: f64,
    pub amplitude_sq: f64,
    pub c0_predicted: f64,
    pub c0_fitted: f64,
    pub c0_relative_error: f64,
    pub alpha0_expansion: f64,
    pub alpha0_fit: f64,
    /// Distance modulo `2π/k`.
    pub alpha0_difference: f64,
    /// `‖ΔP‖ / ‖P‖` on coefficient vectors.
    pub harmonicity_defect: f64,
    /// Largest coefficient gap between `P` and its harmonic reconstruction,
    /// relative to `‖P‖`.
    pub reconstruction_defect: f64,
    pub lower_degrees: Vec<DegreeCheck>,
    /// Whether every lower-degree coefficient lies within three error bars.
    pub lower_degrees_vanish: bool,
}

/// Noise multiple below which a lower-degree coefficient counts as zero.
pub const NOISE_FACTOR: f64 = 3.0;

/// Compares the fitted polynomial with the prediction
/// `C₀ = −4(|β₁|² + |β₂|²)𝔪_k/π` and checks its structure.
pub fn check_theorem(fit: &PolyFit, expansion: &LocalExpansion, mk: f64) -> Result<TheoremReport> {
    if !expansion.normalized {
        return Err(Error::MixedNormalization(
            "the local expansion must come from a unit-norm eigenfunction".into(),
        ));
    }
    if expansion.k != fit.k {
        return Err(Error::MixedNormalization(format!(
            "fit has order {} but the expansion has order {}",
            fit.k, expansion.k
        )));
    }
    let k = fit.k;
    let amplitude_sq = expansion.amplitude_sq();
    let c0_predicted = -4.0 * amplitude_sq * mk / PI;
    let period = TAU / k as f64;
    let d = (fit.alpha0_fit - expansion.alpha0).rem_euclid(period);
    let pnorm = norm(&fit.coeffs);
    let recon = harmonic_coefficients(k, fit.c0, fit.alpha0_fit);
    let reconstruction_defect = fit
        .coeffs
        .iter()
        .zip(&recon)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / pnorm;
    let lower_degrees_vanish = fit.lower_degrees.iter().all(|d| d.is_zero(NOISE_FACTOR));
    Ok(TheoremReport {
        k,
        mk,
        amplitude_sq,
        c0_predicted,
        c0_fitted: fit.c0,
        c0_relative_error: (fit.c0 - c0_predicted).abs() / c0_predicted.abs(),
        alpha0_expansion: expansion.alpha0,
        alpha0_fit: fit.alpha0_fit,
        alpha0_difference: d.min(period - d),
        harmonicity_defect: norm(&laplacian_coefficients(&fit.coeffs)) / pnorm,
        reconstruction_defect,
        lower_degrees: fit.lower_degrees.clone(),
        lower_degrees_vanish,
    })
}
