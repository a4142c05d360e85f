//! Magnetic-harmonic limit problems on large disks: the pole sits on the
//! unit circle at angle `α`, and the boundary data on `|x| = R` is the
//! half-angle profile `r^{k/2} sin(kt/2)` carried into the gauge of that
//! pole. As `R → ∞` the solutions approximate the limit profile whose first
//! angular coefficient on the unit circle determines `f(α)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::LocalExpansion;
use crate::extrapolate::{layered_limit, richardson_extrapolate, ExtrapolationResult};
use crate::field::{interpolate, Closure};
use crate::geom::{branched_angle, check_odd, psi_k_eval, theta0, Point};
use crate::grid::{build_grid_with, DomainSpec, Grid, GridOptions};
use crate::linalg::solve_pd;
use crate::lsq::least_squares;
use crate::operator::{assemble_ab_laplacian_real, dirichlet_lift, CutGauge, PoleOptions};

/// Minimum number of quadrature points on a circle.
pub const MIN_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileProblem {
    pub k: usize,
    pub alpha: f64,
    /// Radius of the disk carrying the boundary data.
    pub r_trunc: f64,
    pub h: f64,
}

impl ProfileProblem {
    pub fn new(k: usize, alpha: f64, r_trunc: f64, h: f64) -> Result<Self> {
        let p = ProfileProblem { k, alpha, r_trunc, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_odd(self.k)?;
        if !(0.0..TAU).contains(&self.alpha) {
            return Err(Error::invalid(format!("pole angle must lie in [0, 2π), got {}", self.alpha)));
        }
        if !(self.r_trunc > 2.0) {
            return Err(Error::invalid(format!("disk radius must exceed 2, got {}", self.r_trunc)));
        }
        if !(self.h > 0.0 && self.h <= 0.125) {
            return Err(Error::invalid(format!("grid spacing must lie in (0, 1/8], got {}", self.h)));
        }
        Ok(())
    }

    pub fn pole(&self) -> Point {
        Point::polar(1.0, self.alpha)
    }

    /// Real gauge whose cut is the outward radial ray through the pole.
    pub fn gauge(&self) -> CutGauge {
        CutGauge::new(self.pole(), self.alpha)
    }

    /// Boundary data `e^{i(θ_p − θ₀^p)/2} e^{iθ₀/2} ψ_k` in the gauge of the
    /// pole.
    pub fn boundary_value(&self, x: Point) -> Result<Complex64> {
        let around_pole = branched_angle(x - self.pole(), self.alpha)?.value;
        let around_origin = branched_angle(x, self.alpha)?.value;
        let plain = theta0(x)?.value;
        let phase = 0.5 * (around_pole - around_origin + plain);
        Ok(Complex64::from_polar(psi_k_eval(self.k, x)?, phase))
    }
}

#[derive(Debug, Clone)]
pub struct ProfileSolution {
    pub problem: ProfileProblem,
    pub grid: Grid,
    /// Solution in the gauge of the pole.
    pub field: Vec<Complex64>,
    /// The same solution in the real cut gauge.
    pub real_field: Vec<f64>,
}

/// Grid on `D_R` with the pole at the centre of a plaquette.
pub fn profile_grid(problem: &ProfileProblem) -> Result<Grid> {
    problem.validate()?;
    let h = problem.h;
    let anchor = problem.pole() + Point::new(0.5 * h, 0.5 * h);
    build_grid_with(
        &DomainSpec::disk(Point::ORIGIN, problem.r_trunc),
        h,
        &GridOptions {
            anchor,
            ..GridOptions::default()
        },
    )
}

pub fn solve_wr(problem: &ProfileProblem) -> Result<ProfileSolution> {
    let grid = profile_grid(problem)?;
    let gauge = problem.gauge();
    let op = assemble_ab_laplacian_real(&grid, gauge, PoleOptions::default())?;
    let data = |x: Point| problem.boundary_value(x).unwrap_or_default();
    let load = dirichlet_lift(&grid, &op, data)?;
    let real_field = solve_pd(&op, &load)?;
    let field = gauge.to_peierls(&grid, &real_field)?;
    Ok(ProfileSolution {
        problem: *problem,
        grid,
        field,
        real_field,
    })
}

impl ProfileSolution {
    /// Field at an arbitrary point of the disk, in the gauge of the pole.
    /// On the outer circle this is the boundary data itself.
    pub fn value_at(&self, x: Point) -> Result<Complex64> {
        let p = &self.problem;
        if (x.norm() - p.r_trunc).abs() <= 1e-12 * p.r_trunc {
            return p.boundary_value(x);
        }
        let data = |y: Point| p.boundary_value(y).unwrap_or_default();
        interpolate(&self.grid, &self.field, Some(p.pole()), x, Closure::Data(&data))
    }
}

/// One sample of the angular coefficient against `ψ₂ᵏ` on a circle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UpsilonSample {
    pub r: f64,
    pub re: f64,
    pub im: f64,
}

impl UpsilonSample {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `∫ e^{−iθ_p/2} w e^{iθ₀^p/2} conj(ψ₂ᵏ(t)) dt` over the circle of radius
/// `r`. The angle runs over `[α, α + 2π)`, where the two gauge factors reduce
/// the weight to `sin(kt/2)/√π`; midpoint samples never land on the cut.
pub fn compute_upsilon(sol: &ProfileSolution, r_grid: &[f64]) -> Result<Vec<UpsilonSample>> {
    let p = &sol.problem;
    r_grid
        .iter()
        .map(|&r| {
            if !(r >= 1.0 && r <= p.r_trunc) {
                return Err(Error::RadiusOutOfRange { r, lo: 1.0, hi: p.r_trunc });
            }
            let n = MIN_SAMPLES.max((8.0 * PI * r / p.h).ceil() as usize);
            let dt = TAU / n as f64;
            let pole = p.pole();
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let t = p.alpha + (j as f64 + 0.5) * dt;
                let x = Point::polar(r, t);
                let w = sol.value_at(x)?;
                let around_pole = branched_angle(x - pole, p.alpha)?.value;
                let u = w * Complex64::from_polar(1.0, -0.5 * around_pole);
                acc += u * (0.5 * p.k as f64 * t).sin();
            }
            let v = acc * dt / PI.sqrt();
            Ok(UpsilonSample { r, re: v.re, im: v.im })
        })
        .collect()
}

/// Coefficients `(A, B)` of `υ_R(r) = A r^{k/2} + B r^{−k/2}` implied by
/// the boundary condition and the value at `r = 1`.
pub fn closed_form_coefficients(k: usize, r_trunc: f64, upsilon_one: Complex64) -> (Complex64, Complex64) {
    let rk = r_trunc.powi(k as i32);
    let sp = PI.sqrt();
    let a = (rk * sp - upsilon_one) / (rk - 1.0);
    let b = -(sp - upsilon_one) * rk / (rk - 1.0);
    (a, b)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct UpsilonFit {
    pub a: [f64; 2],
    pub b: [f64; 2],
    /// `‖υ − fit‖ / ‖υ‖` over the samples.
    pub relative_rms: f64,
}

impl UpsilonFit {
    pub fn at(&self, k: usize, r: f64) -> Complex64 {
        let e = 0.5 * k as f64;
        Complex64::new(self.a[0], self.a[1]) * r.powf(e) + Complex64::new(self.b[0], self.b[1]) * r.powf(-e)
    }
}

/// Least-squares fit of `A r^{k/2} + B r^{−k/2}` through the samples.
pub fn fit_upsilon(k: usize, samples: &[UpsilonSample]) -> Result<UpsilonFit> {
    let e = 0.5 * k as f64;
    let design: Vec<Vec<f64>> = samples.iter().map(|s| vec![s.r.powf(e), s.r.powf(-e)]).collect();
    let re = least_squares(&design, &samples.iter().map(|s| s.re).collect::<Vec<_>>())?;
    let im = least_squares(&design, &samples.iter().map(|s| s.im).collect::<Vec<_>>())?;
    let mut fit = UpsilonFit {
        a: [re.coeffs[0], im.coeffs[0]],
        b: [re.coeffs[1], im.coeffs[1]],
        relative_rms: 0.0,
    };
    fit.relative_rms = relative_rms(samples, |r| fit.at(k, r));
    Ok(fit)
}

/// `‖υ − model‖ / ‖υ‖` over the samples.
pub fn relative_rms(samples: &[UpsilonSample], model: impl Fn(f64) -> Complex64) -> f64 {
    let (num, den) = samples.iter().fold((0.0, 0.0), |(n, d), s| {
        (n + (s.value() - model(s.r)).norm_sqr(), d + s.value().norm_sqr())
    });
    (num / den).sqrt()
}

/// `ik√π Rᵏ(√π − υ_R(1))/(Rᵏ − 1)`.
pub fn kappa_tilde(k: usize, r_trunc: f64, upsilon_one: Complex64) -> Complex64 {
    let rk = r_trunc.powi(k as i32);
    let sp = PI.sqrt();
    Complex64::new(0.0, k as f64 * sp * rk / (rk - 1.0)) * (sp - upsilon_one)
}

/// Angular coefficients and derived quantities of one solve.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub k: usize,
    pub alpha: f64,
    pub r_trunc: f64,
    pub h: f64,
    pub upsilon_one: [f64; 2],
    pub fit: UpsilonFit,
    pub kappa: [f64; 2],
}

/// Radii at which `υ_R` is sampled for a disk of radius `r_trunc`.
pub fn upsilon_radii(r_trunc: f64) -> Vec<f64> {
    let n = 24;
    (0..=n).map(|i| 1.0 + (r_trunc - 1.0) * i as f64 / n as f64).collect()
}

pub fn profile_row(problem: &ProfileProblem) -> Result<ProfileRow> {
    let sol = solve_wr(problem)?;
    let samples = compute_upsilon(&sol, &upsilon_radii(problem.r_trunc))?;
    let one = samples[0].value();
    let fit = fit_upsilon(problem.k, &samples)?;
    let kappa = kappa_tilde(problem.k, problem.r_trunc, one);
    Ok(ProfileRow {
        k: problem.k,
        alpha: problem.alpha,
        r_trunc: problem.r_trunc,
        h: problem.h,
        upsilon_one: [one.re, one.im],
        fit,
        kappa: [kappa.re, kappa.im],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FAlpha {
    pub alpha: f64,
    pub k: usize,
    /// `Re ξ_p(1) − √π`.
    pub value: f64,
    pub xi: [f64; 2],
    pub error: f64,
    /// Limits `R → ∞` of `Re υ_R(1)` at each spacing.
    pub truncation: Vec<ExtrapolationResult>,
    pub spacing: ExtrapolationResult,
    pub rows: Vec<ProfileRow>,
}

impl FAlpha {
    pub fn sqrt_pi(&self) -> f64 {
        PI.sqrt()
    }

    /// Whether `Im ξ` is negligible, as it must be for a real `f`.
    pub fn is_real(&self) -> bool {
        self.xi[1].abs() <= 1e-3 * (1.0 + self.xi[0].hypot(self.xi[1]))
    }
}

/// Spacing order of `υ_R(1)`: the half-order singularity at the pole costs
/// one order in `h`.
pub const PROFILE_SPACING_ORDER: f64 = 1.0;

/// Truncation orders of `υ_R(1)` in `1/R`. The closed form only removes the
/// `R^{−k}` drift of the growing coefficient; the boundary data misses the
/// `O(|x|^{−1/2})` tail of the limit profile, which the pole couples into every
/// angular mode, so the leading error is `O(1/R)` for all `k`.
pub const PROFILE_TRUNCATION_ORDERS: [f64; 2] = [1.0, 2.0];

/// `ξ_p(1)` from the table of solves over `h_seq × r_seq`: first `R → ∞` at
/// each spacing, then `h → 0`.
pub fn xi_and_f(k: usize, alpha: f64, r_seq: &[f64], h_seq: &[f64]) -> Result<FAlpha> {
    check_odd(k)?;
    if r_seq.len() < 2 || h_seq.len() < 2 {
        return Err(Error::invalid("need at least two radii and two spacings"));
    }
    if r_seq.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("radii must be strictly increasing"));
    }
    let problems: Vec<ProfileProblem> = h_seq
        .iter()
        .flat_map(|&h| r_seq.iter().map(move |&r| ProfileProblem { k, alpha, r_trunc: r, h }))
        .collect();
    for p in &problems {
        p.validate()?;
    }
    let rows: Vec<ProfileRow> = problems.par_iter().map(profile_row).collect::<Result<_>>()?;
    let truncation: Vec<ExtrapolationResult> = rows
        .chunks(r_seq.len())
        .map(|chunk| {
            let samples: Vec<(f64, f64)> = chunk.iter().map(|r| (1.0 / r.r_trunc, r.upsilon_one[0])).collect();
            layered_limit(&samples, &PROFILE_TRUNCATION_ORDERS)
        })
        .collect::<Result<_>>()?;
    let samples: Vec<(f64, f64)> = h_seq.iter().zip(&truncation).map(|(&h, t)| (h, t.limit)).collect();
    let mut spacing = richardson_extrapolate(&samples, Some(PROFILE_SPACING_ORDER))?;
    spacing.error_estimate = spacing.error_estimate.hypot(truncation.last().unwrap().error_estimate);
    let imag = rows.last().unwrap().upsilon_one[1];
    Ok(FAlpha {
        alpha,
        k,
        value: spacing.limit - PI.sqrt(),
        xi: [spacing.limit, imag],
        error: spacing.error_estimate,
        truncation,
        spacing: spacing.clone(),
        rows,
    })
}

/// The limit profile approximated by Richardson extrapolation in `1/R` of
/// solutions on nested disks (same pole, same spacing), pointwise.
#[derive(Debug, Clone)]
pub struct ProfileLimit {
    pub solutions: Vec<ProfileSolution>,
}

impl ProfileLimit {
    pub fn new(solutions: Vec<ProfileSolution>) -> Result<Self> {
        let first = solutions.first().ok_or_else(|| Error::invalid("no profile solutions"))?.problem;
        for s in &solutions {
            let p = s.problem;
            if p.k != first.k || p.alpha != first.alpha || p.h != first.h {
                return Err(Error::invalid("profile solutions differ in order, pole or spacing"));
            }
        }
        if solutions.windows(2).any(|w| w[1].problem.r_trunc <= w[0].problem.r_trunc) {
            return Err(Error::invalid("profile radii must be strictly increasing"));
        }
        Ok(ProfileLimit { solutions })
    }

    pub fn solve(k: usize, alpha: f64, r_seq: &[f64], h: f64) -> Result<Self> {
        let solutions = r_seq
            .par_iter()
            .map(|&r| solve_wr(&ProfileProblem::new(k, alpha, r, h)?))
            .collect::<Result<Vec<_>>>()?;
        Self::new(solutions)
    }

    pub fn problem(&self) -> &ProfileProblem {
        &self.solutions.last().unwrap().problem
    }

    pub fn value_at(&self, x: Point) -> Result<Complex64> {
        let vals: Vec<Complex64> = self.solutions.iter().map(|s| s.value_at(x)).collect::<Result<_>>()?;
        if vals.len() == 1 {
            return Ok(vals[0]);
        }
        let params: Vec<f64> = self.solutions.iter().map(|s| 1.0 / s.problem.r_trunc).collect();
        let comp = |f: fn(&Complex64) -> f64| -> Result<f64> {
            let samples: Vec<(f64, f64)> = params.iter().copied().zip(vals.iter().map(f)).collect();
            Ok(layered_limit(&samples, &PROFILE_TRUNCATION_ORDERS)?.limit)
        };
        Ok(Complex64::new(comp(|z| z.re)?, comp(|z| z.im)?))
    }
}

/// Relative L² distance, on the annulus `1.5 ≤ |x| ≤ 3` of blow-up
/// coordinates around `base`, between `φ_a(base + |a−base|x)/|a−base|^{k/2}`
/// and `(β₂/√π)·Ψ` where `Ψ` is the limit profile for the pole direction
/// measured from the nodal direction of the expansion. The remaining global
/// phase is fixed by the best unimodular match.
pub fn blowup_compare(
    eig_grid: &Grid,
    eig_field: &[Complex64],
    base: Point,
    pole: Point,
    expansion: &LocalExpansion,
    profile: &ProfileLimit,
) -> Result<f64> {
    let k = expansion.k;
    let problem = profile.problem();
    if problem.k != k {
        return Err(Error::invalid("profile and expansion have different vanishing orders"));
    }
    let d = pole - base;
    let scale = d.norm();
    if scale == 0.0 {
        return Err(Error::invalid("pole coincides with the base point"));
    }
    let rot = expansion.alpha0;
    let (_, beta2) = expansion.rotated(rot);
    let expected = blowup_angle(base, pole, rot);
    let gap = (expected - problem.alpha).rem_euclid(TAU);
    if gap.min(TAU - gap) > 1e-9 {
        return Err(Error::invalid(format!(
            "profile pole angle {} does not match the rotated pole direction {}",
            problem.alpha, expected
        )));
    }
    let amp = beta2 / PI.sqrt();
    let power = scale.powf(0.5 * k as f64);
    let (nr, nt) = (16usize, 256usize);
    let mut cross = Complex64::new(0.0, 0.0);
    let mut eig_sq = 0.0;
    let mut prof_sq = 0.0;
    for i in 0..nr {
        let rho = 1.5 + 1.5 * (i as f64 + 0.5) / nr as f64;
        for j in 0..nt {
            let t = TAU * (j as f64 + 0.5) / nt as f64;
            let x = Point::polar(rho, t);
            let y = base + x.rotate(rot).scale(scale);
            let e = interpolate(eig_grid, eig_field, Some(pole), y, Closure::Reject).map_err(|_| {
                Error::CircleOutside {
                    x1: base.x1,
                    x2: base.x2,
                    radius: 3.0 * scale,
                }
            })? / power;
            let w = amp * profile.value_at(x)?;
            cross += e * w.conj() * rho;
            eig_sq += e.norm_sqr() * rho;
            prof_sq += w.norm_sqr() * rho;
        }
    }
    // min over |c| = 1 of ‖e − c w‖² = ‖e‖² + ‖w‖² − 2|⟨e, w⟩|
    let dist = (eig_sq + prof_sq - 2.0 * cross.norm()).max(0.0);
    Ok((dist / prof_sq).sqrt())
}

/// Angle in `[0, 2π)` of the pole seen from `base`, measured from the
/// nodal direction `alpha0`: the angle of the profile problem that the
/// blow-up at this pole converges to.
pub fn blowup_angle(base: Point, pole: Point, alpha0: f64) -> f64 {
    let d = pole - base;
    (d.x2.atan2(d.x1) - alpha0).rem_euclid(TAU)
}

/// Angular structure of sampled values `f(α_j)` on equispaced angles.
#[derive(Debug, Clone, Serialize)]
pub struct AngularSummary {
    pub k: usize,
    /// `(2/N) Σ f(α_j) cos(kα_j)`.
    pub cos_coeff: f64,
    pub sin_coeff: f64,
    /// Share of `Σ f²` carried by the `cos(kα)` projection.
    pub cos_energy_fraction: f64,
    /// `max |f(α) − f(2π − α)|` over sample pairs, relative to `max |f|`.
    pub reflection_defect: f64,
    /// `max |f(α) − f(α + 2π/k)|` over sample pairs, relative to `max |f|`.
    pub periodicity_defect: f64,
    pub max_abs: f64,
}

fn find_angle(samples: &[(f64, f64)], alpha: f64) -> Option<f64> {
    samples.iter().find_map(|&(a, f)| {
        let d = (a - alpha).rem_euclid(TAU);
        (d.min(TAU - d) < 1e-9).then_some(f)
    })
}

/// Fourier projection and symmetry defects of `f` sampled at `N ≥ 3`
/// equispaced angles covering one full turn.
pub fn angular_summary(samples: &[(f64, f64)], k: usize) -> Result<AngularSummary> {
    check_odd(k)?;
    let n = samples.len();
    if n < 3 {
        return Err(Error::invalid("need at least three angles"));
    }
    let step = TAU / n as f64;
    let mut sorted: Vec<f64> = samples.iter().map(|s| s.0.rem_euclid(TAU)).collect();
    sorted.sort_by(f64::total_cmp);
    let equispaced = sorted.windows(2).all(|w| (w[1] - w[0] - step).abs() < 1e-9)
        && (sorted[0] + TAU - sorted[n - 1] - step).abs() < 1e-9;
    if !equispaced {
        return Err(Error::invalid("angles must be equispaced over a full turn"));
    }
    let kf = k as f64;
    let (mut c, mut s, mut energy, mut max_abs) = (0.0, 0.0, 0.0, 0.0f64);
    for &(a, f) in samples {
        c += f * (kf * a).cos();
        s += f * (kf * a).sin();
        energy += f * f;
        max_abs = max_abs.max(f.abs());
    }
    c *= 2.0 / n as f64;
    s *= 2.0 / n as f64;
    let defect = |partner: &dyn Fn(f64) -> f64| {
        samples
            .iter()
            .filter_map(|&(a, f)| find_angle(samples, partner(a)).map(|g| (f - g).abs()))
            .fold(0.0, f64::max)
            / max_abs
    };
    Ok(AngularSummary {
        k,
        cos_coeff: c,
        sin_coeff: s,
        cos_energy_fraction: 0.5 * n as f64 * c * c / energy,
        reflection_defect: defect(&|a| TAU - a),
        periodicity_defect: defect(&|a| a + TAU / kf),
        max_abs,
    })
}
