mod common;

use std::f64::consts::PI;

use num_complex::Complex64;

use abpole::asymptotics::{base_expansion, solve_at_pole, SweepConfig};
use abpole::eigen::EigenOptions;
use abpole::extrapolate::layered_limit;
use abpole::profile::{
    blowup_angle, blowup_compare, closed_form_coefficients, compute_upsilon, fit_upsilon, kappa_tilde, profile_row,
    solve_wr, upsilon_radii, xi_and_f, ProfileLimit, ProfileProblem, PROFILE_TRUNCATION_ORDERS,
};
use abpole::Point;

use common::slit_constant;

#[test]
fn outer_circle_reproduces_the_boundary_data() {
    for (k, alpha) in [(1usize, 0.0), (1, 2.0), (3, 0.7)] {
        let r = 4.0;
        let sol = solve_wr(&ProfileProblem::new(k, alpha, r, 1.0 / 16.0).unwrap()).unwrap();
        let s = compute_upsilon(&sol, &[r]).unwrap()[0];
        let expected = PI.sqrt() * r.powf(0.5 * k as f64);
        assert!((s.value() - expected).norm() < 1e-6 * expected, "k {k}: {:?} vs {expected}", s.value());
    }
}

#[test]
fn first_coefficient_exceeds_its_free_value() {
    let row = profile_row(&ProfileProblem::new(1, 0.0, 8.0, 1.0 / 32.0).unwrap()).unwrap();
    assert!(row.upsilon_one[0] > PI.sqrt());
}

#[test]
fn radial_coefficient_follows_the_two_term_law() {
    for (k, alpha) in [(1usize, 0.0), (1, 1.0), (3, 0.5)] {
        let big_r = 8.0;
        let sol = solve_wr(&ProfileProblem::new(k, alpha, big_r, 1.0 / 32.0).unwrap()).unwrap();
        let samples = compute_upsilon(&sol, &upsilon_radii(big_r)).unwrap();
        let fit = fit_upsilon(k, &samples).unwrap();
        assert!(fit.relative_rms < 5e-3, "k {k}: fit rms {}", fit.relative_rms);

        // coefficients fixed by υ(1) and υ(R) = √π R^{k/2}
        let one = samples[0].value();
        let rk = big_r.powi(k as i32);
        let sp = PI.sqrt();
        let a = (rk * sp - one) / (rk - 1.0);
        let b = -(sp - one) * rk / (rk - 1.0);
        let (la, lb) = closed_form_coefficients(k, big_r, one);
        assert!((la - a).norm() < 1e-12 * a.norm() && (lb - b).norm() < 1e-12 * b.norm());
        let fa = Complex64::new(fit.a[0], fit.a[1]);
        let fb = Complex64::new(fit.b[0], fit.b[1]);
        assert!((fa - a).norm() < 1e-2 * a.norm(), "k {k}: A {fa} vs {a}");
        assert!((fb - b).norm() < 1e-2 * b.norm(), "k {k}: B {fb} vs {b}");
    }
}

#[test]
fn kappa_vanishes_at_the_free_value_and_is_consistent_with_real_f() {
    for k in [1usize, 3] {
        assert_eq!(kappa_tilde(k, 8.0, Complex64::new(PI.sqrt(), 0.0)), Complex64::new(0.0, 0.0));
    }
    let row = profile_row(&ProfileProblem::new(1, 1.2, 8.0, 1.0 / 32.0).unwrap()).unwrap();
    let scaled = Complex64::new(row.kappa[0], row.kappa[1]) / Complex64::new(0.0, PI.sqrt());
    assert!(scaled.im.abs() < 1e-6 * scaled.re.abs().max(1e-3), "{scaled}");
}

#[test]
fn kappa_limit_matches_the_extrapolated_coefficient() {
    let f = xi_and_f(1, 0.0, &[4.0, 8.0, 16.0], &[1.0 / 16.0, 1.0 / 32.0]).unwrap();
    let finest: Vec<_> = f.rows.iter().filter(|r| r.h == 1.0 / 32.0).collect();
    let samples: Vec<(f64, f64)> = finest.iter().map(|r| (1.0 / r.r_trunc, r.kappa[1])).collect();
    let kappa = layered_limit(&samples, &PROFILE_TRUNCATION_ORDERS).unwrap();
    let xi = f.truncation.last().unwrap();
    let expected = PI.sqrt() * (PI.sqrt() - xi.limit);
    let tol = 3.0 * (kappa.error_estimate + PI.sqrt() * xi.error_estimate) + 1e-6;
    assert!((kappa.limit - expected).abs() < tol, "{} vs {expected} (tol {tol})", kappa.limit);
}

#[test]
fn angular_function_follows_the_cosine_law() {
    let mk = slit_constant(1);
    for alpha in [0.0, 2.0] {
        let f = xi_and_f(1, alpha, &[4.0, 8.0, 16.0], &[1.0 / 16.0, 1.0 / 32.0]).unwrap();
        let expected = -4.0 * mk / PI.sqrt() * alpha.cos();
        assert!(f.is_real());
        assert!((f.value - expected).abs() < 0.03 * expected.abs(), "alpha {alpha}: {} vs {expected}", f.value);
    }
}

#[test]
fn blowup_discrepancy_ignores_global_phase() {
    let config = SweepConfig {
        radii: vec![0.16],
        angles: vec![1.0],
        ..SweepConfig::flagship(vec![1.0 / 64.0])
    };
    let opts = EigenOptions::default();
    let e = base_expansion(&config, &[0.1, 0.15, 0.2, 0.25], &opts).unwrap();
    let pole = config.base + Point::polar(0.16, 1.0);
    let s = solve_at_pole(&config.domain, pole, 1.0 / 64.0, 1, &opts).unwrap();
    let angle = blowup_angle(config.base, pole, e.alpha0);
    let profile = ProfileLimit::solve(1, angle, &[8.0], 1.0 / 16.0).unwrap();
    let d = blowup_compare(&s.grid, &s.vectors[0], config.base, pole, &e, &profile).unwrap();
    let turned: Vec<Complex64> = s.vectors[0].iter().map(|v| v * Complex64::from_polar(1.0, 0.9)).collect();
    let dt = blowup_compare(&s.grid, &turned, config.base, pole, &e, &profile).unwrap();
    assert!(d.is_finite() && d < 0.5, "{d}");
    assert!((d - dt).abs() < 1e-10);

    let wrong = ProfileLimit::solve(1, angle + 0.5, &[8.0], 1.0 / 16.0).unwrap();
    assert!(blowup_compare(&s.grid, &s.vectors[0], config.base, pole, &e, &wrong).is_err());
}
