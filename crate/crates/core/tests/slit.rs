mod common;

use abpole::grid::NodeStatus;
use abpole::slit::{compute_mk, solve_wk, SlitProblem};

use common::{relative, slit_constant};

#[test]
fn first_order_constant_matches_closed_form() {
    let e = compute_mk(1, &[1.0 / 16.0, 1.0 / 32.0], &[4.0, 8.0, 16.0]).unwrap();
    let oracle = slit_constant(1);
    assert!(e.value() < 0.0 && e.boundary.limit < 0.0);
    assert!(relative(e.value(), oracle) < 1e-2, "{} vs {oracle}", e.value());
    assert!(relative(e.boundary.limit, e.value()) < 1e-2);
}

#[test]
fn third_order_constant_is_negative_and_close() {
    let e = compute_mk(3, &[1.0 / 16.0, 1.0 / 32.0], &[4.0, 8.0, 16.0]).unwrap();
    let oracle = slit_constant(3);
    assert!(e.value() < 0.0 && e.boundary.limit < 0.0);
    assert!(relative(e.value(), oracle) < 3e-2, "{} vs {oracle}", e.value());
}

#[test]
fn halving_the_spacing_shrinks_the_increment() {
    let m: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|&h| solve_wk(&SlitProblem::new(1, 4.0, h).unwrap()).unwrap().m_energy)
        .collect();
    let ratio = (m[0] - m[1]).abs() / (m[1] - m[2]).abs();
    assert!(ratio >= 1.5, "ratio {ratio}");
}

#[test]
fn solution_vanishes_on_the_slit() {
    let s = solve_wk(&SlitProblem::new(1, 4.0, 1.0 / 16.0).unwrap()).unwrap();
    for i in 16..=64 {
        assert!(matches!(s.grid.status_at(i, 0), NodeStatus::Dirichlet), "node {i}");
        assert_eq!(s.axis_value(i as f64 / 16.0), Some(0.0));
    }
    assert!(s.axis_value(0.5).unwrap() > 0.0);
    assert!(s.el_defect < 1e-8);
}
