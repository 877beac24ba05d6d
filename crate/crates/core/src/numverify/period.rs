use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::NumericError;

use super::field::{norm, NumericField};
use super::integrator::{IntegratorOptions, Stepper};
use super::scans::ResidualCurve;
use super::{bracketed_root, with_thread_limit};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeriodOptions {
    pub integrator: IntegratorOptions,
    /// Tolerance on the return time.
    pub root_tol: f64,
    /// Crossings slower than this are treated as grazing and skipped.
    pub min_crossing_speed: f64,
    /// Accepted returns land within this fraction of `|x0|`.
    pub return_tol: f64,
}

impl Default for PeriodOptions {
    fn default() -> Self {
        PeriodOptions {
            integrator: IntegratorOptions::tol(1e-12, 1e-16),
            root_tol: 1e-10,
            min_crossing_speed: 1e-12,
            return_tol: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodEstimate {
    pub x0: Vec<f64>,
    pub period: f64,
    pub return_distance: f64,
    pub return_point: Vec<f64>,
    /// Unit normal of the section through `x0`.
    pub section_normal: Vec<f64>,
    pub crossing_speed: f64,
}

pub fn detect_period(f: &NumericField, x0: &[f64], expected: f64) -> Result<PeriodEstimate, NumericError> {
    detect_period_with(f, x0, expected, &PeriodOptions::default())
}

/// First positive return to the hyperplane through `x0` orthogonal to `f(x0)`, searched up to `3·expected`.
pub fn detect_period_with(
    f: &NumericField,
    x0: &[f64],
    expected: f64,
    opts: &PeriodOptions,
) -> Result<PeriodEstimate, NumericError> {
    if !(expected > 0.0) {
        return Err(NumericError::InvalidInput("expected period must be positive".into()));
    }
    let v0 = f.eval_vec(x0);
    let speed = norm(&v0);
    if norm(x0) == 0.0 || speed == 0.0 {
        return Err(NumericError::InvalidInput("initial point is an equilibrium".into()));
    }
    let normal: Vec<f64> = v0.iter().map(|v| v / speed).collect();
    let section = |x: &[f64]| x.iter().zip(x0).zip(&normal).map(|((a, b), n)| (a - b) * n).sum::<f64>();
    let limit = 3.0 * expected;
    let mut st = Stepper::new(f, x0, opts.integrator)?;
    let mut s_prev = 0.0;
    while st.t < limit {
        let dense = st.step(limit)?;
        let s_new = section(&st.y);
        if s_prev < 0.0 && s_new >= 0.0 {
            let t = bracketed_root(|t| section(&dense.eval(t)), dense.t0, dense.t1(), opts.root_tol)
                .expect("sign change on the step");
            let x = dense.eval(t);
            let crossing = f.eval_vec(&x).iter().zip(&normal).map(|(a, b)| a * b).sum::<f64>();
            let dist = norm(&x.iter().zip(x0).map(|(a, b)| a - b).collect::<Vec<_>>());
            if crossing > opts.min_crossing_speed && dist <= opts.return_tol * norm(x0) {
                return Ok(PeriodEstimate {
                    x0: x0.to_vec(),
                    period: t,
                    return_distance: dist,
                    return_point: x,
                    section_normal: normal,
                    crossing_speed: crossing,
                });
            }
        }
        s_prev = s_new;
    }
    Err(NumericError::NoReturn { limit })
}

/// Deviation `|T(r) − T₀|` along `x0 = r·direction`, with `T₀ = 2π/λ` unless overridden.
pub fn period_flatness_scan(
    f: &NumericField,
    lambda: f64,
    radii: &[f64],
    direction: &[f64],
    p: f64,
    expected: Option<f64>,
    opts: &PeriodOptions,
) -> Result<(ResidualCurve, Vec<PeriodEstimate>), NumericError> {
    let t0 = expected.unwrap_or(2.0 * PI / lambda);
    let dn = norm(direction);
    if dn == 0.0 || direction.len() != f.dim() {
        return Err(NumericError::InvalidInput("bad scan direction".into()));
    }
    let estimates: Vec<Result<PeriodEstimate, NumericError>> = with_thread_limit(|| {
        radii
            .par_iter()
            .map(|&r| {
                let x0: Vec<f64> = direction.iter().map(|d| r * d / dn).collect();
                detect_period_with(f, &x0, t0, opts)
            })
            .collect()
    });
    let estimates = estimates.into_iter().collect::<Result<Vec<_>, _>>()?;
    let deviations: Vec<f64> = estimates.iter().map(|e| (e.period - t0).abs()).collect();
    let floor = vec![1e-9 * t0; radii.len()];
    let curve = ResidualCurve::new("period", radii, deviations, floor, p)?;
    Ok((curve, estimates))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scaled_rotation(k: f64) -> NumericField {
        NumericField::from_fn(2, move |x, o| {
            let s = 1.0 + k * (x[0] * x[0] + x[1] * x[1]);
            o[0] = -s * x[1];
            o[1] = s * x[0];
        })
    }

    #[test]
    fn pure_rotation_period() {
        let e = detect_period(&scaled_rotation(0.0), &[0.1, 0.0], 2.0 * PI).unwrap();
        assert!((e.period - 2.0 * PI).abs() < 1e-9, "{}", e.period);
        assert!(e.return_distance < 1e-10);
    }

    #[test]
    fn speeded_rotation_matches_closed_form() {
        for r in [0.3, 0.1, 0.02] {
            let e = detect_period(&scaled_rotation(1.0), &[r, 0.0], 2.0 * PI).unwrap();
            let exact = 2.0 * PI / (1.0 + r * r);
            assert!((e.period - exact).abs() < 1e-8, "{r}: {}", e.period - exact);
        }
    }

    #[test]
    fn linear_elliptic_period_is_radius_independent() {
        let f = NumericField::from_fn(4, |x, o| {
            o[0] = -3.0 * x[1];
            o[1] = 3.0 * x[0];
            o[2] = -6.0 * x[3];
            o[3] = 6.0 * x[2];
        });
        for r in [1e-3, 1e-2, 1e-1] {
            let a = detect_period(&f, &[r, 0.0, 0.0, 0.0], 2.0 * PI / 3.0).unwrap();
            let b = detect_period(&f, &[0.0, 0.0, r, 0.0], 2.0 * PI / 6.0).unwrap();
            assert!((a.period - 2.0 * PI / 3.0).abs() < 1e-9);
            assert!((b.period - 2.0 * PI / 6.0).abs() < 1e-9);
        }
    }

    #[test]
    fn saddle_never_returns() {
        let f = NumericField::from_fn(2, |x, o| {
            o[0] = x[0];
            o[1] = -x[1];
        });
        let e = detect_period(&f, &[0.1, 0.1], 2.0 * PI);
        assert!(matches!(e, Err(NumericError::NoReturn { .. }) | Err(NumericError::LeftDomain { .. })));
    }

    #[test]
    fn undivided_factor_shows_quadratic_deviation() {
        let radii = [0.1, 0.05, 0.025, 0.0125];
        let (c, _) = period_flatness_scan(&scaled_rotation(1.0), 1.0, &radii, &[1.0, 0.0], 4.0, None, &PeriodOptions::default())
            .unwrap();
        let s = c.slope.unwrap();
        assert!((s - 2.0).abs() < 0.05, "{s}");
        assert!(!c.pass);
        let (c2, _) =
            period_flatness_scan(&scaled_rotation(1.0), 1.0, &radii, &[1.0, 0.0], 2.0 - 0.05, None, &PeriodOptions::default())
                .unwrap();
        assert!(c2.pass);
    }

    #[test]
    fn flat_perturbation_beats_every_power() {
        let f = NumericField::from_fn(2, |x, o| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let s = 1.0 + (-1.0 / r2).exp();
            o[0] = -s * x[1];
            o[1] = s * x[0];
        });
        let radii = [0.5, 0.4, 0.3, 0.25];
        let (c, _) = period_flatness_scan(&f, 1.0, &radii, &[1.0, 0.0], 12.0, None, &PeriodOptions::default()).unwrap();
        assert!(c.pass, "{c:?}");
    }
}
