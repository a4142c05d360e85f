//! Aharonov–Bohm potential, branched angle functions, gauge link phases and
//! the angular eigenbasis of the half-flux operator on the circle.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x1: f64,
    pub x2: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Point { x1, x2 }
    }

    pub fn polar(r: f64, t: f64) -> Self {
        Point::new(r * t.cos(), r * t.sin())
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn norm_sq(self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x1 * o.x1 + self.x2 * o.x2
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x1 * o.x2 - self.x2 * o.x1
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x1 * s, self.x2 * s)
    }

    /// Counter-clockwise rotation by `angle`.
    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x1 - s * self.x2, s * self.x1 + c * self.x2)
    }

    pub fn distance(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl std::ops::Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x1, -self.x2)
    }
}

/// An angle together with the base of the branch it was taken on: the value
/// always lies in `[branch_base, branch_base + 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchedAngle {
    pub value: f64,
    pub branch_base: f64,
}

/// Cosine-type or sine-type angular mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeKind {
    Cosine,
    Sine,
}

/// One element `e^{it/2} cos(jt/2)/√π` or `e^{it/2} sin(jt/2)/√π` of the
/// orthonormal angular basis, `j` odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngularMode {
    j: usize,
    kind: ModeKind,
}

impl AngularMode {
    pub fn new(j: usize, kind: ModeKind) -> Result<Self> {
        check_odd(j)?;
        Ok(AngularMode { j, kind })
    }

    pub fn cosine(j: usize) -> Result<Self> {
        Self::new(j, ModeKind::Cosine)
    }

    pub fn sine(j: usize) -> Result<Self> {
        Self::new(j, ModeKind::Sine)
    }

    pub fn index(&self) -> usize {
        self.j
    }

    pub fn kind(&self) -> ModeKind {
        self.kind
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let half = 0.5 * self.j as f64 * t;
        let profile = match self.kind {
            ModeKind::Cosine => half.cos(),
            ModeKind::Sine => half.sin(),
        };
        Complex64::from_polar(profile / PI.sqrt(), 0.5 * t)
    }
}

pub(crate) fn check_odd(k: usize) -> Result<()> {
    if k % 2 == 1 {
        Ok(())
    } else {
        Err(Error::EvenIndex(k))
    }
}

fn singular(x: Point) -> Error {
    Error::SingularPoint { x1: x.x1, x2: x.x2 }
}

/// Vector potential with pole `a` and circulation one half.
pub fn ab_potential(x: Point, a: Point) -> Result<(f64, f64)> {
    let d = x - a;
    let r2 = d.norm_sq();
    if r2 == 0.0 {
        return Err(singular(x));
    }
    Ok((-0.5 * d.x2 / r2, 0.5 * d.x1 / r2))
}

/// Angle of `x` around the origin in `[0, 2π)`, discontinuous across the
/// non-negative `x1` half-axis.
pub fn theta0(x: Point) -> Result<BranchedAngle> {
    let (x1, x2) = (x.x1, x.x2);
    let value = if x1 > 0.0 && x2 >= 0.0 {
        (x2 / x1).atan()
    } else if x1 == 0.0 && x2 > 0.0 {
        FRAC_PI_2
    } else if x1 < 0.0 {
        PI + (x2 / x1).atan()
    } else if x1 == 0.0 && x2 < 0.0 {
        1.5 * PI
    } else if x1 > 0.0 && x2 < 0.0 {
        TAU + (x2 / x1).atan()
    } else {
        return Err(singular(x));
    };
    Ok(BranchedAngle {
        value: clamp_below(value, 0.0),
        branch_base: 0.0,
    })
}

/// Angle of the vector `d` taken in `[base, base + 2π)`.
pub fn branched_angle(d: Point, base: f64) -> Result<BranchedAngle> {
    if d.x1 == 0.0 && d.x2 == 0.0 {
        return Err(singular(d));
    }
    let mut value = d.x2.atan2(d.x1);
    value = base + (value - base).rem_euclid(TAU);
    Ok(BranchedAngle {
        value: clamp_below(value, base),
        branch_base: base,
    })
}

/// Keeps rounding from pushing a value onto the excluded end of its branch.
fn clamp_below(value: f64, base: f64) -> f64 {
    let top = base + TAU;
    if value >= top {
        let shifted = value - TAU;
        if shifted >= base {
            shifted
        } else {
            base
        }
    } else if value < base {
        base
    } else {
        value
    }
}

/// Direction angle `α ∈ [0, 2π)` of a nonzero pole, `b = |b|(cos α, sin α)`.
pub fn pole_direction(b: Point) -> Result<f64> {
    if b.x1 == 0.0 && b.x2 == 0.0 {
        return Err(Error::UndefinedBranch);
    }
    Ok(theta0(b)?.value)
}

/// Angle functions attached to a pole `b ≠ 0` whose branch starts at the
/// direction of `b`: with `centered = false` the angle of `x − b`, with
/// `centered = true` the angle of `x` around the origin.
pub fn theta_pole(x: Point, b: Point, centered: bool) -> Result<BranchedAngle> {
    let base = pole_direction(b)?;
    let d = if centered { x } else { x - b };
    branched_angle(d, base)
}

/// Signed angle subtended at `a` by the segment from `x` to `y`, in `(−π, π)`.
pub fn subtended_angle(x: Point, y: Point, a: Point) -> Result<f64> {
    let u = x - a;
    let v = y - a;
    let cross = u.cross(v);
    let dot = u.dot(v);
    if u.norm_sq() == 0.0 || v.norm_sq() == 0.0 {
        return Err(Error::SingularEdge(x.x1, x.x2, y.x1, y.x2));
    }
    // The segment passes through `a` exactly when the endpoints are
    // collinear with `a` and on opposite sides.
    let scale = u.norm() * v.norm();
    if cross.abs() <= 1e-14 * scale && dot < 0.0 {
        return Err(Error::SingularEdge(x.x1, x.x2, y.x1, y.x2));
    }
    Ok(cross.atan2(dot))
}

/// Exact line integral of the potential along the straight segment, as the
/// unit phase `exp(i ∫ A·dl)`.
pub fn peierls_phase(x: Point, y: Point, a: Point) -> Result<Complex64> {
    let delta = subtended_angle(x, y, a)?;
    Ok(Complex64::from_polar(1.0, 0.5 * delta))
}

pub fn angular_mode_eval(mode: AngularMode, t: f64) -> Complex64 {
    mode.eval(t)
}

/// The real profile `r^{k/2} sin(kt/2)` with `t = θ₀(x)`.
pub fn psi_k_eval(k: usize, x: Point) -> Result<f64> {
    check_odd(k)?;
    if x.x1 == 0.0 && x.x2 == 0.0 {
        return Ok(0.0);
    }
    let t = theta0(x)?.value;
    Ok(x.norm().powf(0.5 * k as f64) * (0.5 * k as f64 * t).sin())
}

/// Normal derivative `∂ψ_k/∂x₂` on the boundary line `x₂ = 0⁺`.
pub fn psi_k_normal_derivative(k: usize, x1: f64) -> Result<f64> {
    check_odd(k)?;
    let half = 0.5 * k as f64;
    if x1 > 0.0 {
        Ok(half * x1.powf(half - 1.0))
    } else {
        // Polar gradient at t = π carries the factor cos(kπ/2) = 0.
        Ok(0.0)
    }
}
