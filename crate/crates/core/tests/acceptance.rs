//! End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

mod common;

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use abpole::asymptotics::{
    base_expansion, check_theorem, directional_limit, ensure_directions, extrapolate_in_h, fit_polynomial, run_sweep,
    sign_pattern_angles, solve_at_pole, SweepConfig,
};
use abpole::eigen::EigenOptions;
use abpole::grid::DomainSpec;
use abpole::identities::{direction_rank, sin_product};
use abpole::profile::{
    blowup_angle, blowup_compare, compute_upsilon, solve_wr, upsilon_radii, xi_and_f, ProfileLimit, ProfileProblem,
};
use abpole::slit::compute_mk;
use abpole::Point;

use common::bessel_zero;

struct Ledger {
    all_pass: bool,
}

impl Ledger {
    fn report(&mut self, n: usize, pass: bool, detail: String) {
        println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
        self.all_pass &= pass;
    }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn main() {
    faer::set_global_parallelism(faer::Par::Seq);
    let opts = EigenOptions::default();
    let mut ledger = Ledger { all_pass: true };

    // 1. centred pole on the unit disk against j_{1/2,1}² = π²
    let t = Instant::now();
    let hs = [1.0 / 64.0, 1.0 / 128.0];
    let mut lowest = Vec::new();
    let mut double = true;
    for &h in &hs {
        let s = solve_at_pole(&DomainSpec::unit_disk(), Point::ORIGIN, h, 3, &opts).unwrap();
        double &= s.clusters.iter().any(|c| c == &vec![0, 1]);
        lowest.push(s.values[0]);
    }
    let limit = extrapolate_in_h(&hs, &lowest).unwrap().limit;
    let oracle = bessel_zero(0.5, 3.0, 3.3).powi(2);
    let rel = (limit - oracle).abs() / oracle;
    let secs = t.elapsed().as_secs_f64();
    ledger.report(
        1,
        rel <= 5e-3 && double && secs <= 120.0,
        format!("lambda = {limit:.6} vs {oracle:.6}, rel {rel:.2e} (<= 5e-3), multiplicity 2: {double}, {secs:.1}s (<= 120s)"),
    );

    // 2. identities
    let t = Instant::now();
    let mut worst = 0.0f64;
    for k in [1usize, 3, 5, 7, 9] {
        for m in 0..1000 {
            let a = TAU * m as f64 / 1000.0 + 0.123;
            let exact = 2f64.powi(1 - k as i32) * (k as f64 * a).cos();
            worst = worst.max((sin_product(k, a).unwrap() - exact).abs());
        }
    }
    let mut deficient = 0;
    for k in [1usize, 3, 5, 7, 9] {
        for h in 0..k {
            for trial in 0..20 {
                let theta = 0.37 * trial as f64;
                if direction_rank(h, k, theta).unwrap() != h + 1 {
                    deficient += 1;
                }
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ledger.report(
        2,
        worst <= 1e-12 && deficient == 0 && secs <= 5.0,
        format!("sin-product defect {worst:.2e} (<= 1e-12), rank-deficient cases {deficient}, {secs:.2}s (<= 5s)"),
    );

    // 3. slit constant by two routes
    let t = Instant::now();
    let mut mk1 = f64::NAN;
    let mut ok3 = true;
    let mut detail = String::new();
    for k in [1usize, 3] {
        let e = compute_mk(k, &[1.0 / 16.0, 1.0 / 32.0], &[4.0, 8.0, 16.0]).unwrap();
        let (energy, boundary) = (e.energy.limit, e.boundary.limit);
        let agree = (energy - boundary).abs() / energy.abs();
        ok3 &= energy < 0.0 && boundary < 0.0 && agree <= 1e-2;
        detail += &format!("k={k}: energy {energy:.6}, boundary {boundary:.6}, rel {agree:.2e}; ");
        if k == 1 {
            mk1 = energy;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ledger.report(3, ok3 && secs <= 180.0, format!("{detail}(<= 1e-2, negative) {secs:.1}s (<= 180s)"));

    // 4. angular structure of f over 12 angles
    let t = Instant::now();
    let n = 12;
    let angles: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
    let f: Vec<f64> = angles
        .iter()
        .map(|&a| xi_and_f(1, a, &[4.0, 8.0, 16.0], &[1.0 / 16.0, 1.0 / 32.0]).unwrap().value)
        .collect();
    let max_abs = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // 2π − α_j = α_{n−j}; α_j + 2π/k = α_j + 2π for k = 1
    let reflection = (0..n).map(|j| (f[j] - f[(n - j) % n]).abs()).fold(0.0, f64::max) / max_abs;
    let periodicity = (0..n).map(|j| (f[j] - f[(j + n) % n]).abs()).fold(0.0, f64::max) / max_abs;
    let cos_coeff: f64 = 2.0 / n as f64 * (0..n).map(|j| f[j] * angles[j].cos()).sum::<f64>();
    let energy: f64 = f.iter().map(|v| v * v).sum();
    let captured = cos_coeff * cos_coeff * n as f64 / 2.0 / energy;
    let secs = t.elapsed().as_secs_f64();
    ledger.report(
        4,
        reflection <= 0.02 && periodicity <= 0.02 && captured >= 0.97 && secs <= 600.0,
        format!(
            "reflection {reflection:.2e}, periodicity {periodicity:.2e} (<= 2e-2), cos energy {captured:.6} (>= 0.97), {secs:.1}s (<= 600s)"
        ),
    );

    // 5. f(0) against the slit constant
    let from_f = f[0] * PI.sqrt() / -4.0;
    let rel = (from_f - mk1).abs() / mk1.abs();
    ledger.report(5, rel <= 0.03, format!("f(0)·√π/(−4) = {from_f:.6} vs mk {mk1:.6}, rel {rel:.2e} (<= 3e-2)"));

    // 6. radial coefficient against its two-term closed form
    let big_r = 8.0;
    let sol = solve_wr(&ProfileProblem::new(1, 0.0, big_r, 1.0 / 32.0).unwrap()).unwrap();
    let samples = compute_upsilon(&sol, &upsilon_radii(big_r)).unwrap();
    let one = samples[0].value();
    let sp = PI.sqrt();
    let a = (big_r * sp - one) / (big_r - 1.0);
    let b = -(sp - one) * big_r / (big_r - 1.0);
    let (mut num, mut den) = (0.0, 0.0);
    for s in &samples {
        let closed = a * s.r.sqrt() + b / s.r.sqrt();
        num += (s.value() - closed).norm_sqr();
        den += s.value().norm_sqr();
    }
    let rms = (num / den).sqrt();
    ledger.report(6, rms <= 0.01, format!("relative rms {rms:.2e} (<= 1e-2)"));

    // 7. flagship fit
    let t = Instant::now();
    let config = SweepConfig::flagship(vec![1.0 / 128.0, 1.0 / 256.0]);
    let mut sweep = run_sweep(&config, &opts, jobs()).unwrap();
    let expansion = base_expansion(&config, &[0.1, 0.15, 0.2, 0.25], &opts).unwrap();
    let fit = fit_polynomial(&sweep, expansion.k).unwrap();
    let report = check_theorem(&fit, &expansion, mk1).unwrap();
    let degree0 = &fit.lower_degrees[0];
    let secs = t.elapsed().as_secs_f64();
    ledger.report(
        7,
        expansion.k == 1
            && report.c0_relative_error <= 0.10
            && report.alpha0_difference <= 0.05
            && report.harmonicity_defect <= 0.05
            && degree0.is_zero(3.0)
            && secs <= 1800.0,
        format!(
            "C0 {:.5} vs {:.5} rel {:.2e} (<= 0.1), alpha0 diff {:.2e} (<= 0.05), harmonicity {:.2e} (<= 0.05), degree-0 {:.2e} ± {:.2e} (<= 3 bars), {secs:.1}s (<= 1800s)",
            report.c0_fitted,
            report.c0_predicted,
            report.c0_relative_error,
            report.alpha0_difference,
            report.harmonicity_defect,
            degree0.coeffs[0],
            degree0.errors[0],
        ),
    );

    // 8. directional limits
    let dirs = sign_pattern_angles(expansion.alpha0, expansion.k);
    ensure_directions(&mut sweep, &dirs, &opts, jobs()).unwrap();
    let lim: Vec<f64> = dirs
        .iter()
        .map(|&d| directional_limit(&sweep, d, expansion.k).unwrap().limit)
        .collect();
    let top = lim[0];
    ledger.report(
        8,
        top > 0.0 && lim[1].abs() <= 0.1 * top && (lim[2] + top).abs() <= 0.1 * top,
        format!("limits {:.5}, {:.5}, {:.5}", lim[0], lim[1], lim[2]),
    );

    // 9. blow-up discrepancy over a dyadic sequence of distances
    let alpha = 1.0;
    let angle = blowup_angle(config.base, config.base + Point::polar(1.0, alpha), expansion.alpha0);
    let profile = ProfileLimit::solve(1, angle, &[8.0, 16.0], 1.0 / 32.0).unwrap();
    let h = 1.0 / 256.0;
    let disc: Vec<f64> = [0.16, 0.08, 0.04, 0.02]
        .iter()
        .map(|&r| {
            let pole = config.base + Point::polar(r, alpha);
            let s = solve_at_pole(&config.domain, pole, h, 1, &opts).unwrap();
            blowup_compare(&s.grid, &s.vectors[0], config.base, pole, &expansion, &profile).unwrap()
        })
        .collect();
    let monotone = disc.windows(2).all(|w| w[1] < w[0]);
    let last = *disc.last().unwrap();
    ledger.report(
        9,
        monotone && last <= 0.05,
        format!("discrepancies {disc:.4?}, monotone {monotone}, final {last:.4} (<= 0.05)"),
    );

    if !ledger.all_pass {
        eprintln!("acceptance criteria failed");
        std::process::exit(1);
    }
}
