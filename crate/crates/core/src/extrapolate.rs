//! Richardson extrapolation of parameter sequences.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lsq::least_squares;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtrapolationFlag {
    /// Parameters were not strictly decreasing; no extrapolation was done.
    NonMonotone,
    /// Successive differences change sign.
    Oscillating,
    /// No order was given and none could be estimated.
    OrderUnresolved,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtrapolationResult {
    pub params: Vec<f64>,
    pub values: Vec<f64>,
    pub limit: f64,
    /// Order estimated from the last three samples (never from fewer).
    pub observed_order: Option<f64>,
    /// Order actually used to eliminate the leading term.
    pub used_order: Option<f64>,
    /// `|last − limit|`, or the last increment when nothing was eliminated.
    pub error_estimate: f64,
    pub flag: Option<ExtrapolationFlag>,
}

impl ExtrapolationResult {
    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn is_flagged(&self) -> bool {
        self.flag.is_some()
    }

    /// A result that only records one value with a given error bar.
    pub fn exact(param: f64, value: f64, error: f64) -> Self {
        ExtrapolationResult {
            params: vec![param],
            values: vec![value],
            limit: value,
            observed_order: None,
            used_order: None,
            error_estimate: error,
            flag: None,
        }
    }
}

/// Order `p` such that the increments of `c·h^p` reproduce the ratio of the
/// last two increments; `None` when undefined.
pub fn observed_order(params: &[f64], values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let (h1, h2, h3) = (params[n - 3], params[n - 2], params[n - 1]);
    let d1 = values[n - 3] - values[n - 2];
    let d2 = values[n - 2] - values[n - 1];
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() {
        return None;
    }
    let target = (d1 / d2).ln();
    let ratio = |p: f64| ((h1.powf(p) - h2.powf(p)) / (h2.powf(p) - h3.powf(p))).ln();
    let (mut lo, mut hi) = (1e-3, 16.0);
    let (flo, fhi) = (ratio(lo) - target, ratio(hi) - target);
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = ratio(mid) - target;
        if f.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

pub fn richardson_extrapolate(samples: &[(f64, f64)], model_order: Option<f64>) -> Result<ExtrapolationResult> {
    if samples.len() < 2 {
        return Err(Error::invalid("extrapolation needs at least two samples"));
    }
    if let Some(p) = model_order {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::invalid(format!("model order must be positive, got {p}")));
        }
    }
    let params: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let n = values.len();
    let last = values[n - 1];
    let increment = (values[n - 1] - values[n - 2]).abs();
    let monotone = params.windows(2).all(|w| w[1] < w[0]) && params[n - 1] > 0.0;
    if !monotone {
        return Ok(ExtrapolationResult {
            params,
            values,
            limit: last,
            observed_order: None,
            used_order: None,
            error_estimate: increment,
            flag: Some(ExtrapolationFlag::NonMonotone),
        });
    }
    let observed = observed_order(&params, &values);
    let diffs_zero = values.windows(2).all(|w| w[0] == w[1]);
    let oscillating = n >= 3 && {
        let d1 = values[n - 3] - values[n - 2];
        let d2 = values[n - 2] - values[n - 1];
        d1 * d2 < 0.0
    };
    let used = model_order.or(observed);
    let (limit, mut flag) = match used {
        Some(p) => {
            let r = (params[n - 2] / params[n - 1]).powf(p);
            (last + (last - values[n - 2]) / (r - 1.0), None)
        }
        None if diffs_zero => (last, None),
        None => (last, Some(ExtrapolationFlag::OrderUnresolved)),
    };
    if oscillating && flag.is_none() {
        flag = Some(ExtrapolationFlag::Oscillating);
    }
    let error_estimate = if used.is_some() { (last - limit).abs() } else { increment };
    Ok(ExtrapolationResult {
        params,
        values,
        limit,
        observed_order: observed,
        used_order: used,
        error_estimate,
        flag,
    })
}

/// Least-squares fit of `v(h) = L + Σ c_i h^{p_i}`; the error estimate is
/// `|last − L|`.
pub fn extrapolate_series(samples: &[(f64, f64)], orders: &[f64]) -> Result<ExtrapolationResult> {
    if samples.len() < orders.len() + 1 {
        return Err(Error::invalid("not enough samples for the requested orders"));
    }
    let design: Vec<Vec<f64>> = samples
        .iter()
        .map(|&(h, _)| std::iter::once(1.0).chain(orders.iter().map(|&p| h.powf(p))).collect())
        .collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let fit = least_squares(&design, &y)?;
    let params: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let last = *y.last().unwrap();
    Ok(ExtrapolationResult {
        observed_order: observed_order(&params, &y),
        used_order: orders.first().copied(),
        params,
        limit: fit.coeffs[0],
        error_estimate: (last - fit.coeffs[0]).abs(),
        values: y,
        flag: None,
    })
}

/// Leading-order Richardson step, upgraded to a least-squares fit with the
/// given correction orders when there are enough samples. The error bar of
/// the upgraded fit is the distance between the two models.
pub fn layered_limit(samples: &[(f64, f64)], orders: &[f64]) -> Result<ExtrapolationResult> {
    let first = *orders
        .first()
        .ok_or_else(|| Error::invalid("at least one correction order is required"))?;
    let one = richardson_extrapolate(samples, Some(first))?;
    if orders.len() < 2 || samples.len() < orders.len() + 1 || one.is_flagged() {
        return Ok(one);
    }
    let mut fit = extrapolate_series(samples, orders)?;
    fit.error_estimate = (fit.limit - one.limit).abs();
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_model_is_exact() {
        let s: Vec<(f64, f64)> = [0.25, 0.125, 0.0625].iter().map(|&h| (h, 1.5 + 3.0 * h * h)).collect();
        let r = richardson_extrapolate(&s, Some(2.0)).unwrap();
        assert!((r.limit - 1.5).abs() < 1e-14);
        assert!((r.observed_order.unwrap() - 2.0).abs() < 1e-9);
        assert!((r.error_estimate - 3.0 * 0.0625f64.powi(2)).abs() < 1e-14);
        let est = richardson_extrapolate(&s, None).unwrap();
        assert!((est.limit - 1.5).abs() < 1e-10);
    }

    #[test]
    fn layered_limit_removes_two_terms() {
        let s: Vec<(f64, f64)> = [0.25, 0.125, 0.0625]
            .iter()
            .map(|&x| (x, -0.4 + 0.2 * x - 0.07 * x * x))
            .collect();
        let r = layered_limit(&s, &[1.0, 2.0]).unwrap();
        assert!((r.limit + 0.4).abs() < 1e-13);
        let one = richardson_extrapolate(&s, Some(1.0)).unwrap();
        assert!((r.error_estimate - (one.limit + 0.4).abs()).abs() < 1e-13);
        let short = layered_limit(&s[1..], &[1.0, 2.0]).unwrap();
        assert!((short.limit - one.limit).abs() < 1e-15);
    }

    #[test]
    fn constant_sequence() {
        let r = richardson_extrapolate(&[(0.5, 2.0), (0.25, 2.0), (0.125, 2.0)], None).unwrap();
        assert_eq!(r.limit, 2.0);
        assert_eq!(r.error_estimate, 0.0);
        assert!(r.flag.is_none());
        assert!(r.observed_order.is_none());
    }

    #[test]
    fn non_monotone_is_flagged() {
        let r = richardson_extrapolate(&[(0.25, 1.0), (0.5, 2.0)], Some(2.0)).unwrap();
        assert_eq!(r.flag, Some(ExtrapolationFlag::NonMonotone));
        assert_eq!(r.limit, 2.0);
    }

    #[test]
    fn two_samples_report_no_order() {
        let r = richardson_extrapolate(&[(0.5, 1.25), (0.25, 1.0625)], Some(2.0)).unwrap();
        assert!(r.observed_order.is_none());
        assert!((r.limit - 1.0).abs() < 1e-14);
    }

    #[test]
    fn uneven_ratios() {
        let f = |h: f64| 4.0 - 2.0 * h.powf(1.5);
        let s: Vec<(f64, f64)> = [0.3, 0.2, 0.07].iter().map(|&h| (h, f(h))).collect();
        let p = observed_order(&s.iter().map(|x| x.0).collect::<Vec<_>>(), &s.iter().map(|x| x.1).collect::<Vec<_>>());
        assert!((p.unwrap() - 1.5).abs() < 1e-9);
        let r = richardson_extrapolate(&s, None).unwrap();
        assert!((r.limit - 4.0).abs() < 1e-9);
    }

    #[test]
    fn series_fit() {
        let s: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025].iter().map(|&h| (h, 1.0 + h + 0.5 * h * h)).collect();
        let r = extrapolate_series(&s, &[1.0, 2.0]).unwrap();
        assert!((r.limit - 1.0).abs() < 1e-12);
    }
}
