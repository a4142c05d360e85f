//! Oracles shared by the integration tests. Each one is computed from
//! scratch here and does not call into the library.

#![allow(dead_code)]

use std::f64::consts::PI;

/// `Γ(x)` for `x` a positive multiple of ½.
pub fn gamma_half_integer(x: f64) -> f64 {
    let twice = (2.0 * x).round() as i64;
    assert!(twice > 0 && ((2.0 * x) - twice as f64).abs() < 1e-12);
    let (mut g, mut t) = if twice % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while t < x - 1e-12 {
        g *= t;
        t += 1.0;
    }
    g
}

/// `J_ν(x)` by its power series; accurate for moderate `x`.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powf(nu) / gamma_half_integer(nu + 1.0);
    let mut sum = term;
    for m in 1..200 {
        term *= -half * half / (m as f64 * (m as f64 + nu));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// A zero of `J_ν` bracketed by `[lo, hi]`, by bisection.
pub fn bessel_zero(nu: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = bessel_j(nu, lo);
    assert!(flo * bessel_j(nu, hi) < 0.0, "zero not bracketed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = bessel_j(nu, mid);
        if fm * flo <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// The slit constant for `k ∈ {1, 3}` from the closed-form trace of the
/// minimizer on the axis, `w(x, 0) = √(1 − x)·Q_k(x)` with `Q₁ = 1` and
/// `Q₃ = x + ½`, integrated against the data `(k/2)x^{k/2−1}` on `(0, 1)`.
/// The substitution `x = sin²θ` removes both endpoint singularities.
pub fn slit_constant(k: usize) -> f64 {
    let q = |x: f64| match k {
        1 => 1.0,
        3 => x + 0.5,
        _ => panic!("no closed form for k = {k}"),
    };
    let kf = k as f64;
    let integrand = |t: f64| {
        let (s, c) = t.sin_cos();
        let x = s * s;
        // (k/2) x^{k/2−1} √(1−x) Q(x) dx with dx = 2 s c dt
        kf * s.powi(k as i32 - 1) * c * c * q(x)
    };
    -0.5 * simpson(integrand, 0.0, 0.5 * PI, 4000)
}

pub fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
