//! The variational problem on the upper half-plane with the slit
//! `{x₁ ≥ 1, x₂ = 0}`: minimize `½∫|∇w|² − ∫ (∂ψ_k/∂x₂) w` over functions
//! vanishing on the slit. Its (negative) minimum is the constant `𝔪_k`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extrapolate::{layered_limit, richardson_extrapolate, ExtrapolationResult};
use crate::geom::{check_odd, Point};
use crate::grid::{build_grid_with, BoundaryTreatment, DomainSpec, Grid, GridOptions, LinkTarget, NodeStatus};
use crate::linalg::solve_pd;
use crate::operator::{assemble_mixed_laplacian, SlitData};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlitProblem {
    pub k: usize,
    /// Radius of the artificial arc carrying a zero Dirichlet condition.
    pub r_trunc: f64,
    pub h: f64,
}

impl SlitProblem {
    pub fn new(k: usize, r_trunc: f64, h: f64) -> Result<Self> {
        let p = SlitProblem { k, r_trunc, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_odd(self.k)?;
        if !(self.r_trunc >= 4.0) {
            return Err(Error::invalid(format!("truncation radius must be at least 4, got {}", self.r_trunc)));
        }
        if !(self.h > 0.0 && self.h <= 1.0 / 16.0) {
            return Err(Error::invalid(format!("grid spacing must lie in (0, 1/16], got {}", self.h)));
        }
        let cells = 1.0 / self.h;
        if (cells - cells.round()).abs() > 1e-9 {
            return Err(Error::invalid("1/h must be an integer so that the slit tip is a node"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SlitSolution {
    pub problem: SlitProblem,
    pub grid: Grid,
    pub field: Vec<f64>,
    /// `∫|∇w|²` of the piecewise-linear solution.
    pub energy: f64,
    pub m_energy: f64,
    /// `−½∫₀¹ g w(x₁, 0) dx₁` from the reconstructed trace; see
    /// [`boundary_integral`].
    pub m_boundary: f64,
    /// `|E − load·w| / E`, the discrete Euler–Lagrange defect.
    pub el_defect: f64,
}

impl SlitSolution {
    /// Value of the solution at the axis node `x₁` (zero on the slit).
    pub fn axis_value(&self, x1: f64) -> Option<f64> {
        let i = (x1 / self.problem.h).round() as i64;
        match self.grid.status_at(i, 0) {
            NodeStatus::Unknown(n) => Some(self.field[n]),
            NodeStatus::Dirichlet => Some(0.0),
            NodeStatus::Outside => None,
        }
    }
}

pub fn slit_grid(problem: &SlitProblem) -> Result<Grid> {
    problem.validate()?;
    build_grid_with(
        &DomainSpec::slit_half_disk(problem.r_trunc),
        problem.h,
        &GridOptions {
            anchor: Point::ORIGIN,
            treatment: BoundaryTreatment::Staircase,
        },
    )
}

pub fn solve_wk(problem: &SlitProblem) -> Result<SlitSolution> {
    solve_wk_with_data(problem, &SlitData::new(problem.k)?)
}

/// Same problem with rescaled free-boundary data.
pub fn solve_wk_with_data(problem: &SlitProblem, data: &SlitData) -> Result<SlitSolution> {
    let grid = slit_grid(problem)?;
    let (op, load) = assemble_mixed_laplacian(&grid, data)?;
    let field = solve_pd(&op, &load)?;
    let energy = dirichlet_energy(&grid, &field);
    let work: f64 = load.iter().zip(&field).map(|(a, b)| a * b).sum();
    let el_defect = if energy > 0.0 { (energy - work).abs() / energy } else { 0.0 };
    let m_boundary = -0.5 * boundary_integral(problem, data, &grid, &field)?;
    Ok(SlitSolution {
        problem: *problem,
        grid,
        energy,
        m_energy: -0.5 * energy,
        m_boundary,
        el_defect,
        field,
    })
}

/// `∫₀¹ g(x₁) w(x₁, 0) dx₁` from the axis values of `w` alone, independent
/// of the load vector. The trace is reconstructed as `√(1 − x₁)·u(x₁)` with
/// `u` cubic through the nodes, which follows the square-root vanishing at
/// the slit tip, and integrated after `x₁ = sin²θ`, which removes the end
/// singularities of both `g` and the trace.
pub fn boundary_integral(problem: &SlitProblem, data: &SlitData, grid: &Grid, field: &[f64]) -> Result<f64> {
    let h = problem.h;
    let n = (1.0 / h).round() as usize;
    let u: Vec<f64> = (0..n)
        .map(|i| {
            let w = match grid.status_at(i as i64, 0) {
                NodeStatus::Unknown(m) => field[m],
                NodeStatus::Dirichlet => 0.0,
                NodeStatus::Outside => return Err(Error::invalid("axis node outside the slit grid")),
            };
            Ok(w / (1.0 - i as f64 * h).sqrt())
        })
        .collect::<Result<_>>()?;
    let quotient = |x: f64| -> f64 {
        let t = x / h;
        let first = (t.floor() as i64 - 1).clamp(0, n as i64 - 4) as usize;
        (first..first + 4)
            .map(|i| {
                let basis: f64 = (first..first + 4)
                    .filter(|&j| j != i)
                    .map(|j| (t - j as f64) / (i as f64 - j as f64))
                    .product();
                u[i] * basis
            })
            .sum()
    };
    let k = data.k as f64;
    // g dx = (k/2) x^{k/2−1} dx = k sin^{k−1}θ cosθ dθ, and √(1−x) = cosθ
    let integrand = |theta: f64| {
        let (s, c) = theta.sin_cos();
        k * s.powi(data.k as i32 - 1) * c * c * quotient(s * s)
    };
    let m = 64 * n;
    let step = 0.5 * PI / m as f64;
    let mut sum = integrand(0.0) + integrand(0.5 * PI);
    for i in 1..m {
        sum += integrand(i as f64 * step) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    Ok(data.factor * sum * step / 3.0)
}

/// `∫|∇u|²` of the piecewise-linear interpolant, summed edge by edge
/// (each edge once, boundary walls holding zero).
pub fn dirichlet_energy(grid: &Grid, u: &[f64]) -> f64 {
    let mut e = 0.0;
    for n in 0..grid.len() {
        for link in grid.links(n) {
            match link.target {
                LinkTarget::Node(m) if m > n => e += link.weight * (u[n] - u[m]).powi(2),
                LinkTarget::Wall { fraction, .. } => e += link.weight * u[n] * u[n] / fraction,
                _ => {}
            }
        }
    }
    e
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlitRow {
    pub k: usize,
    pub h: f64,
    pub r_trunc: f64,
    pub m_energy: f64,
    pub m_boundary: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MkEstimate {
    pub k: usize,
    /// Energy-route estimate with its error bar.
    pub energy: ExtrapolationResult,
    /// Boundary-integral route.
    pub boundary: ExtrapolationResult,
    /// Truncation limits `R → ∞` at each spacing (energy route).
    pub truncation: Vec<ExtrapolationResult>,
    pub rows: Vec<SlitRow>,
}

impl MkEstimate {
    pub fn value(&self) -> f64 {
        self.energy.limit
    }

    pub fn error(&self) -> f64 {
        self.energy.error_estimate
    }
}

/// Leading truncation order in `1/R`: the correction to `ψ_k` at infinity
/// is `O(|x|^{-1/2})` for every odd `k`, so the arc condition costs `O(1/R)`
/// in energy, followed by `O(1/R²)`.
pub const TRUNCATION_ORDERS: [f64; 2] = [1.0, 2.0];

/// Spacing error order: the `√(x₁ − 1)` singularity at the slit tip limits
/// the energy to first order in `h`.
pub const SPACING_ORDER: f64 = 1.0;

/// Double extrapolation over the full table of spacings × radii: first
/// `R → ∞` at each spacing, then `h → 0` on those limits. The spacing error
/// constant depends on `R` (through the amplitude at the slit tip), so the
/// table is not collapsed to a separable correction.
pub fn compute_mk(k: usize, h_seq: &[f64], r_seq: &[f64]) -> Result<MkEstimate> {
    check_odd(k)?;
    if h_seq.len() < 2 || r_seq.len() < 2 {
        return Err(Error::invalid("need at least two spacings and two radii"));
    }
    if h_seq.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("spacings must be strictly decreasing"));
    }
    if r_seq.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("radii must be strictly increasing"));
    }
    let jobs: Vec<SlitProblem> = h_seq
        .iter()
        .flat_map(|&h| r_seq.iter().map(move |&r| SlitProblem { k, r_trunc: r, h }))
        .collect();
    for j in &jobs {
        j.validate()?;
    }
    let rows: Vec<SlitRow> = jobs
        .par_iter()
        .map(|p| {
            solve_wk(p).map(|s| SlitRow {
                k,
                h: p.h,
                r_trunc: p.r_trunc,
                m_energy: s.m_energy,
                m_boundary: s.m_boundary,
            })
        })
        .collect::<Result<_>>()?;
    let route = |pick: fn(&SlitRow) -> f64| -> Result<(ExtrapolationResult, Vec<ExtrapolationResult>)> {
        let per_h: Vec<ExtrapolationResult> = rows
            .chunks(r_seq.len())
            .map(|chunk| {
                let samples: Vec<(f64, f64)> = chunk.iter().map(|r| (1.0 / r.r_trunc, pick(r))).collect();
                layered_limit(&samples, &TRUNCATION_ORDERS)
            })
            .collect::<Result<_>>()?;
        let samples: Vec<(f64, f64)> = h_seq.iter().zip(&per_h).map(|(&h, r)| (h, r.limit)).collect();
        let order = crate::extrapolate::observed_order(
            &samples.iter().map(|s| s.0).collect::<Vec<_>>(),
            &samples.iter().map(|s| s.1).collect::<Vec<_>>(),
        )
        .filter(|p| (0.5..=2.5).contains(p))
        .unwrap_or(SPACING_ORDER);
        let mut total = richardson_extrapolate(&samples, Some(order))?;
        let finest = per_h.last().unwrap();
        total.error_estimate = total.error_estimate.hypot(finest.error_estimate);
        total.flag = total.flag.or(per_h.iter().find_map(|r| r.flag));
        Ok((total, per_h))
    };
    let (energy, truncation) = route(|r| r.m_energy)?;
    let (boundary, _) = route(|r| r.m_boundary)?;
    Ok(MkEstimate {
        k,
        energy,
        boundary,
        truncation,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SlitProblem::new(2, 8.0, 1.0 / 16.0).is_err());
        assert!(SlitProblem::new(1, 3.0, 1.0 / 16.0).is_err());
        assert!(SlitProblem::new(1, 8.0, 0.1).is_err());
        assert!(SlitProblem::new(1, 8.0, 1.0 / 20.5).is_err());
        assert!(SlitProblem::new(1, 8.0, 1.0 / 16.0).is_ok());
    }

    #[test]
    fn coarse_solution_properties() {
        for k in [1, 3] {
            let s = solve_wk(&SlitProblem::new(k, 4.0, 1.0 / 16.0).unwrap()).unwrap();
            assert!(s.m_energy < 0.0);
            assert!(s.el_defect < 1e-9, "{}", s.el_defect);
            assert!(s.m_boundary < 0.0);
            assert!((s.m_energy - s.m_boundary).abs() < 0.05 * s.m_energy.abs(), "{} {}", s.m_energy, s.m_boundary);
            for x in [1.0, 1.5, 2.0, 3.0] {
                assert_eq!(s.axis_value(x), Some(0.0));
            }
        }
    }

    #[test]
    fn data_scaling_is_quadratic() {
        let p = SlitProblem::new(1, 4.0, 1.0 / 16.0).unwrap();
        let base = solve_wk(&p).unwrap();
        let scaled = solve_wk_with_data(&p, &SlitData { k: 1, factor: 3.0 }).unwrap();
        assert!((scaled.m_energy - 9.0 * base.m_energy).abs() < 1e-10 * base.m_energy.abs());
        assert!((scaled.m_boundary - 9.0 * base.m_boundary).abs() < 1e-10 * base.m_boundary.abs());
        for (a, b) in base.field.iter().zip(&scaled.field) {
            assert!((3.0 * a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn boundary_integral_of_a_square_root_trace() {
        // ∫₀¹ ½x^{−1/2} √(1−x) dx = π/4
        let p = SlitProblem::new(1, 4.0, 1.0 / 16.0).unwrap();
        let s = solve_wk(&p).unwrap();
        let mut field = s.field.clone();
        for i in 0..16 {
            if let NodeStatus::Unknown(m) = s.grid.status_at(i, 0) {
                field[m] = (1.0 - i as f64 / 16.0).sqrt();
            }
        }
        let v = boundary_integral(&p, &SlitData::new(1).unwrap(), &s.grid, &field).unwrap();
        assert!((v - PI / 4.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn larger_truncation_lowers_the_minimum() {
        let a = solve_wk(&SlitProblem::new(1, 4.0, 1.0 / 16.0).unwrap()).unwrap();
        let b = solve_wk(&SlitProblem::new(1, 8.0, 1.0 / 16.0).unwrap()).unwrap();
        assert!(b.m_energy < a.m_energy);
    }
}
