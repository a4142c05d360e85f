//! Off-lattice evaluation of node fields.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::{subtended_angle, Point};
use crate::grid::{Grid, NodeStatus};

/// What to use at cell corners that are not unknowns.
#[derive(Clone, Copy)]
pub enum Closure<'a> {
    /// Fail: the evaluation point is too close to the boundary.
    Reject,
    Zero,
    /// Boundary data extended off the boundary.
    Data(&'a dyn Fn(Point) -> Complex64),
}

/// Bilinear interpolation of a complex node field. With a pole, corner
/// values are first parallel-transported to `x` along straight segments,
/// so the result is gauge covariant in the Peierls gauge of that pole.
pub fn interpolate(
    grid: &Grid,
    values: &[Complex64],
    pole: Option<Point>,
    x: Point,
    closure: Closure<'_>,
) -> Result<Complex64> {
    if values.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    let (u, v) = grid.lattice_coords(x);
    let (i, j) = (u.floor() as i64, v.floor() as i64);
    let (fx, fy) = (u - i as f64, v - j as f64);
    let mut acc = Complex64::new(0.0, 0.0);
    for (di, dj, w) in [
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ] {
        if w == 0.0 {
            continue;
        }
        let c = grid.node_point(i + di, j + dj);
        let value = match (grid.status_at(i + di, j + dj), closure) {
            (NodeStatus::Unknown(n), _) => values[n],
            (_, Closure::Reject) => {
                return Err(Error::CircleOutside {
                    x1: x.x1,
                    x2: x.x2,
                    radius: 0.0,
                })
            }
            (_, Closure::Zero) => Complex64::new(0.0, 0.0),
            (_, Closure::Data(g)) => g(c),
        };
        let transport = match pole {
            Some(a) if c != x => Complex64::from_polar(1.0, 0.5 * subtended_angle(c, x, a)?),
            _ => Complex64::new(1.0, 0.0),
        };
        acc += value * transport * w;
    }
    Ok(acc)
}

/// Equispaced angles `2π(m + offset)/n`, `m = 0..n`.
pub fn circle_angles(n: usize, offset: f64) -> Vec<f64> {
    (0..n)
        .map(|m| std::f64::consts::TAU * (m as f64 + offset) / n as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, DomainSpec};

    #[test]
    fn bilinear_reproduces_bilinear_functions() {
        let g = build_grid(&DomainSpec::unit_square(), 0.125).unwrap();
        let f = |p: Point| Complex64::new(1.0 + 2.0 * p.x1 - p.x2 + 3.0 * p.x1 * p.x2, p.x2);
        let vals = g.sample(f);
        for x in [Point::new(0.3, 0.4), Point::new(0.51, 0.77), Point::new(0.2, 0.2)] {
            let z = interpolate(&g, &vals, None, x, Closure::Reject).unwrap();
            assert!((z - f(x)).norm() < 1e-13);
        }
        assert!(interpolate(&g, &vals, None, Point::new(0.05, 0.5), Closure::Reject).is_err());
        assert!(interpolate(&g, &vals, None, Point::new(0.05, 0.5), Closure::Zero).is_ok());
    }

    #[test]
    fn covariant_interpolation_is_gauge_covariant() {
        // A field of the form e^{iθ/2}·smooth in the Peierls gauge around a
        // pole is interpolated to second order away from the pole.
        let pole = Point::new(0.5 + 1.0 / 64.0, 0.5 + 1.0 / 64.0);
        let f = |p: Point| {
            let d = p - pole;
            Complex64::from_polar(1.0, 0.5 * d.x2.atan2(d.x1)) * (1.0 + p.x1 * p.x2)
        };
        let mut errs = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let g = build_grid(&DomainSpec::unit_square(), h).unwrap();
            let vals = g.sample(f);
            let x = Point::new(0.8, 0.3);
            let z = interpolate(&g, &vals, Some(pole), x, Closure::Reject).unwrap();
            errs.push((z - f(x)).norm());
        }
        assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
    }
}
