//! Local expansion of an eigenfunction at its pole: vanishing order, the two
//! leading angular coefficients and the nodal direction.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{circle_angles, interpolate, Closure};
use crate::geom::{check_odd, AngularMode, Point};
use crate::grid::Grid;

/// Largest vanishing index searched.
pub const MAX_ORDER: usize = 9;

/// Minimum number of quadrature points on a circle.
const MIN_SAMPLES: usize = 256;

#[derive(Debug, Clone, Serialize)]
pub struct LocalExpansion {
    pub k: usize,
    #[serde(serialize_with = "ser_complex")]
    pub beta1: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub beta2: Complex64,
    /// Nodal direction in `[0, 2π/k)`.
    pub alpha0: f64,
    /// Spread of the per-radius estimates of `(β₁, β₂)`.
    pub beta_error: f64,
    pub radii: Vec<f64>,
    /// Whether the field was normalized to unit L² norm.
    pub normalized: bool,
}

pub(crate) fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl LocalExpansion {
    /// `|β₁|² + |β₂|²`, the gauge-invariant amplitude.
    pub fn amplitude_sq(&self) -> f64 {
        self.beta1.norm_sqr() + self.beta2.norm_sqr()
    }

    /// Phase mismatch `arg(β₂ conj β₁)` reduced to `[−π/2, π/2]`; zero for a
    /// real angular profile.
    pub fn reality_defect(&self) -> f64 {
        let z = self.beta2 * self.beta1.conj();
        if z.norm() == 0.0 {
            return 0.0;
        }
        let a = z.arg();
        let r = a - PI * (a / PI).round();
        r.abs()
    }

    /// Coefficients after rotating the coordinates by `angle`, i.e. of
    /// `x ↦ φ(R_angle x)`.
    pub fn rotated(&self, angle: f64) -> (Complex64, Complex64) {
        let half = 0.5 * self.k as f64 * angle;
        let (s, c) = half.sin_cos();
        let phase = Complex64::from_polar(1.0, 0.5 * angle);
        (
            phase * (self.beta1 * c + self.beta2 * s),
            phase * (self.beta2 * c - self.beta1 * s),
        )
    }
}

/// Nodal direction `(2/k)·arccot(−β₂/β₁)` in `[0, 2π/k)`, with arccot in
/// `(0, π)`; zero when `β₁ = 0`.
pub fn nodal_angle(k: usize, beta1: Complex64, beta2: Complex64) -> f64 {
    let b1 = beta1.norm_sqr();
    if b1 == 0.0 {
        return 0.0;
    }
    // Real ratio β₂/β₁ computed as Re(β₂ conj β₁)/|β₁|², stable when β₁ → 0.
    let cross = (beta2 * beta1.conj()).re;
    let arccot = 1.0f64.atan2(-cross / b1);
    let period = TAU / k as f64;
    let a = 2.0 * arccot / k as f64;
    wrap_period(a, period)
}

/// `a mod period` in `[0, period)`, with values within rounding of the
/// period folded to zero.
pub(crate) fn wrap_period(a: f64, period: f64) -> f64 {
    let r = a.rem_euclid(period);
    if period - r <= 1e-9 * period {
        0.0
    } else {
        r
    }
}

/// Spherical-Bessel profile `Γ(k/2+1)(2/x)^{k/2} J_{k/2}(x)`, normalized to
/// 1 at the origin: the radial shape of the order-`k` angular coefficient
/// of a solution of `−Δ_A u = λu` with `x = √λ r`.
pub fn bessel_profile(k: usize, x: f64) -> f64 {
    let n = (k - 1) / 2;
    let y = -0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..60 {
        term *= y / (m as f64 * (2 * n + 2 * m + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Projections `(⟨u, ψ₁ʲ⟩, ⟨u, ψ₂ʲ⟩)` over the circle of radius `r` around
/// `pole`, for a field in the Peierls gauge of that pole.
pub fn circle_fourier(
    grid: &Grid,
    field: &[Complex64],
    pole: Point,
    r: f64,
    j: usize,
) -> Result<(Complex64, Complex64)> {
    let c = circle_projections(grid, field, pole, r, &[j])?;
    Ok(c.coeffs[0])
}

struct CircleData {
    coeffs: Vec<(Complex64, Complex64)>,
    /// `∫|u|² dt`
    power: f64,
}

fn circle_projections(
    grid: &Grid,
    field: &[Complex64],
    pole: Point,
    r: f64,
    js: &[usize],
) -> Result<CircleData> {
    for &j in js {
        check_odd(j)?;
    }
    let lo = 4.0 * grid.h();
    if !(r >= lo) {
        return Err(Error::RadiusOutOfRange { r, lo, hi: f64::INFINITY });
    }
    let jmax = js.iter().copied().max().unwrap_or(1);
    let n = MIN_SAMPLES.max(8 * jmax);
    let dt = TAU / n as f64;
    let modes: Vec<(AngularMode, AngularMode)> = js
        .iter()
        .map(|&j| (AngularMode::cosine(j).unwrap(), AngularMode::sine(j).unwrap()))
        .collect();
    let mut coeffs = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); js.len()];
    let mut power = 0.0;
    for t in circle_angles(n, 0.0) {
        let x = pole + Point::polar(r, t);
        let u = interpolate(grid, field, Some(pole), x, Closure::Reject).map_err(|_| {
            Error::CircleOutside {
                x1: pole.x1,
                x2: pole.x2,
                radius: r,
            }
        })?;
        power += u.norm_sqr() * dt;
        for (slot, (m1, m2)) in coeffs.iter_mut().zip(&modes) {
            slot.0 += u * m1.eval(t).conj() * dt;
            slot.1 += u * m2.eval(t).conj() * dt;
        }
    }
    Ok(CircleData { coeffs, power })
}

/// How the per-radius scaled coefficients are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialModel {
    /// Linear extrapolation to `r = 0` through the two smallest radii.
    Richardson,
    /// Plain average; appropriate once the radial profile is divided out.
    Mean,
}

#[derive(Debug, Clone)]
pub struct ExpansionOptions {
    /// Eigenvalue of the field; when present the exact radial Bessel
    /// profile is divided out of every coefficient.
    pub eigenvalue: Option<f64>,
    pub model: Option<RadialModel>,
    /// Whether the caller normalized the field to unit L² norm.
    pub normalized: bool,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions {
            eigenvalue: None,
            model: None,
            normalized: true,
        }
    }
}

pub fn extract_expansion(
    grid: &Grid,
    field: &[Complex64],
    pole: Point,
    radii: &[f64],
    opts: &ExpansionOptions,
) -> Result<LocalExpansion> {
    if radii.len() < 3 {
        return Err(Error::invalid("at least three radii are required"));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("radii must be distinct"));
    }
    let js: Vec<usize> = (1..=MAX_ORDER).step_by(2).collect();
    let data: Vec<CircleData> = radii
        .iter()
        .map(|&r| circle_projections(grid, field, pole, r, &js))
        .collect::<Result<_>>()?;
    let profile = |j: usize, r: f64| match opts.eigenvalue {
        Some(l) => bessel_profile(j, l.max(0.0).sqrt() * r),
        None => 1.0,
    };
    let outer = data.last().unwrap().power.sqrt();
    let mut k = None;
    for (jdx, &j) in js.iter().enumerate() {
        let mags: Vec<f64> = data
            .iter()
            .zip(&radii)
            .map(|(d, &r)| {
                let (a, b) = d.coeffs[jdx];
                (a.norm_sqr() + b.norm_sqr()).sqrt() / profile(j, r)
            })
            .collect();
        if *mags.last().unwrap() < 1e-3 * outer {
            continue;
        }
        let p = 0.5 * j as f64;
        let num: f64 = mags.iter().zip(&radii).map(|(m, r)| m * r.powf(p)).sum();
        let den: f64 = radii.iter().map(|r| r.powf(2.0 * p)).sum();
        let c = num / den;
        let res: f64 = mags.iter().zip(&radii).map(|(m, r)| (m - c * r.powf(p)).powi(2)).sum();
        let tot: f64 = mags.iter().map(|m| m * m).sum();
        if (res / tot).sqrt() < 0.1 {
            k = Some((jdx, j));
            break;
        }
    }
    let (jdx, k) = k.ok_or(Error::InconclusiveOrder { max: MAX_ORDER })?;
    let p = 0.5 * k as f64;
    let scaled: Vec<(Complex64, Complex64)> = data
        .iter()
        .zip(&radii)
        .map(|(d, &r)| {
            let s = 1.0 / (r.powf(p) * profile(k, r));
            (d.coeffs[jdx].0 * s, d.coeffs[jdx].1 * s)
        })
        .collect();
    let model = opts.model.unwrap_or(if opts.eigenvalue.is_some() {
        RadialModel::Mean
    } else {
        RadialModel::Richardson
    });
    let (beta1, beta2) = match model {
        RadialModel::Richardson => {
            let (r0, r1) = (radii[0], radii[1]);
            let w = r1 / (r1 - r0);
            let lin = |a: Complex64, b: Complex64| a * w + b * (1.0 - w);
            (lin(scaled[0].0, scaled[1].0), lin(scaled[0].1, scaled[1].1))
        }
        RadialModel::Mean => {
            let n = scaled.len() as f64;
            (
                scaled.iter().map(|s| s.0).sum::<Complex64>() / n,
                scaled.iter().map(|s| s.1).sum::<Complex64>() / n,
            )
        }
    };
    let beta_error = scaled
        .iter()
        .map(|s| ((s.0 - beta1).norm_sqr() + (s.1 - beta2).norm_sqr()).sqrt())
        .fold(0.0, f64::max);
    Ok(LocalExpansion {
        k,
        beta1,
        beta2,
        alpha0: nodal_angle(k, beta1, beta2),
        beta_error,
        radii,
        normalized: opts.normalized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::theta0;
    use crate::grid::{build_grid_with, DomainSpec, GridOptions};

    fn synthetic(k: usize, b1: f64, b2: f64) -> impl Fn(Point) -> Complex64 {
        move |x: Point| {
            if x.norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let t = theta0(x).unwrap().value;
            let r = x.norm();
            let h = 0.5 * k as f64 * t;
            Complex64::from_polar(r.powf(0.5 * k as f64), 0.5 * t) * (b1 * h.cos() + b2 * h.sin()) / PI.sqrt()
        }
    }

    fn grid() -> Grid {
        build_grid_with(
            &DomainSpec::disk(Point::ORIGIN, 1.5),
            1.0 / 64.0,
            &GridOptions {
                anchor: Point::new(0.5 / 64.0, 0.5 / 64.0),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn projections_of_basis_modes() {
        let g = grid();
        let u = g.sample(synthetic(3, 0.0, PI.sqrt()));
        // synthetic(3, 0, √π) = r^{3/2} e^{it/2} sin(3t/2) = √π r^{3/2} ψ₂³
        let (c1, c2) = circle_fourier(&g, &u, Point::ORIGIN, 0.5, 3).unwrap();
        let expect = PI.sqrt() * 0.5f64.powf(1.5);
        assert!(c1.norm() < 2e-3 * expect, "{c1}");
        assert!((c2 - expect).norm() < 2e-3 * expect, "{c2}");
        let (d1, d2) = circle_fourier(&g, &u, Point::ORIGIN, 0.5, 1).unwrap();
        assert!(d1.norm() < 1e-3 && d2.norm() < 1e-3);
    }

    #[test]
    fn mixed_first_modes() {
        let g = grid();
        // ψ₁¹ + 2ψ₂¹ scaled by r^{1/2}
        let u = g.sample(synthetic(1, 1.0, 2.0));
        let r: f64 = 0.6;
        let (c1, c2) = circle_fourier(&g, &u, Point::ORIGIN, r, 1).unwrap();
        assert!((c1 - r.sqrt()).norm() < 5e-3 * r.sqrt(), "{c1}");
        assert!((c2 - 2.0 * r.sqrt()).norm() < 5e-3 * r.sqrt(), "{c2}");
    }

    #[test]
    fn sine_mode_extraction() {
        let g = grid();
        let u = g.sample(synthetic(1, 0.0, PI.sqrt()));
        let e = extract_expansion(&g, &u, Point::ORIGIN, &[0.2, 0.3, 0.45], &Default::default()).unwrap();
        assert_eq!(e.k, 1);
        assert!(e.beta1.norm() < 1e-2);
        assert!((e.beta2 - PI.sqrt()).norm() < 1e-2);
        assert!(e.alpha0 < 1e-2 || (TAU - e.alpha0) < 1e-2);
    }

    #[test]
    fn nodal_angle_examples() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert!((nodal_angle(1, one, one) - 1.5 * PI).abs() < 1e-14);
        assert!((nodal_angle(1, one, zero) - PI).abs() < 1e-14);
        assert_eq!(nodal_angle(1, zero, one), 0.0);
        for k in [1, 3, 5] {
            let a = nodal_angle(k, Complex64::new(0.3, 0.1), Complex64::new(-0.6, -0.2));
            assert!((0.0..TAU / k as f64).contains(&a));
        }
    }

    #[test]
    fn synthetic_equal_coefficients() {
        let g = grid();
        let u = g.sample(synthetic(1, 1.0, 1.0));
        let e = extract_expansion(&g, &u, Point::ORIGIN, &[0.2, 0.3, 0.45], &Default::default()).unwrap();
        assert!((e.alpha0 - 1.5 * PI).abs() < 1e-2);
        assert!(e.reality_defect() < 1e-3);
    }

    #[test]
    fn higher_order_detected_and_doubling_invariant() {
        let g = grid();
        let u = g.sample(synthetic(3, 0.4, -1.1));
        let small = extract_expansion(&g, &u, Point::ORIGIN, &[0.15, 0.22, 0.33], &Default::default()).unwrap();
        let big = extract_expansion(&g, &u, Point::ORIGIN, &[0.3, 0.44, 0.66], &Default::default()).unwrap();
        assert_eq!(small.k, 3);
        assert_eq!(big.k, 3);
        assert!((small.alpha0 - big.alpha0).abs() < 1e-2);
        assert!((small.beta1 - big.beta1).norm() < 2e-2);
        assert!((small.beta2 - big.beta2).norm() < 2e-2);
    }

    #[test]
    fn rephasing_changes_coefficients_by_common_factor() {
        let g = grid();
        let u = g.sample(synthetic(1, 0.7, 1.3));
        let w = Complex64::from_polar(1.0, 0.77);
        let v: Vec<Complex64> = u.iter().map(|z| z * w).collect();
        let opts = ExpansionOptions::default();
        let a = extract_expansion(&g, &u, Point::ORIGIN, &[0.2, 0.3, 0.45], &opts).unwrap();
        let b = extract_expansion(&g, &v, Point::ORIGIN, &[0.2, 0.3, 0.45], &opts).unwrap();
        assert!((a.amplitude_sq() - b.amplitude_sq()).abs() < 1e-12);
        assert!((a.beta1 * w - b.beta1).norm() < 1e-12);
        assert!((a.alpha0 - b.alpha0).abs() < 1e-12);
    }

    #[test]
    fn zero_field_is_inconclusive() {
        let g = grid();
        let u = vec![Complex64::new(0.0, 0.0); g.len()];
        assert!(matches!(
            extract_expansion(&g, &u, Point::ORIGIN, &[0.2, 0.3, 0.45], &Default::default()),
            Err(Error::InconclusiveOrder { .. })
        ));
    }

    #[test]
    fn circle_leaving_domain_rejected() {
        let g = grid();
        let u = g.sample(synthetic(1, 0.0, 1.0));
        assert!(matches!(
            circle_fourier(&g, &u, Point::ORIGIN, 1.49, 1),
            Err(Error::CircleOutside { .. })
        ));
        assert!(matches!(
            circle_fourier(&g, &u, Point::ORIGIN, 0.01, 1),
            Err(Error::RadiusOutOfRange { .. })
        ));
    }

    #[test]
    fn bessel_profile_closed_forms() {
        for x in [0.1f64, 0.7, 1.9, 3.0] {
            let s = x.sin() / x;
            assert!((bessel_profile(1, x) - s).abs() < 1e-14);
            let t = 3.0 * (x.sin() - x * x.cos()) / (x * x * x);
            assert!((bessel_profile(3, x) - t).abs() < 1e-12);
        }
        assert_eq!(bessel_profile(5, 0.0), 1.0);
    }

    #[test]
    fn rotation_removes_first_coefficient() {
        let e = LocalExpansion {
            k: 1,
            beta1: Complex64::new(0.4, 0.0),
            beta2: Complex64::new(1.2, 0.0),
            alpha0: nodal_angle(1, Complex64::new(0.4, 0.0), Complex64::new(1.2, 0.0)),
            beta_error: 0.0,
            radii: vec![],
            normalized: true,
        };
        let (b1, b2) = e.rotated(e.alpha0);
        assert!(b1.norm() < 1e-14);
        assert!((b2.norm_sqr() - e.amplitude_sq()).abs() < 1e-12);
    }
}
