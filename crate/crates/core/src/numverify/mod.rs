//! Floating-point checks of the dynamics: conservation, periods, residual decay, 2D locus.

mod dd;
mod field;
mod integrator;
mod locus;
mod period;
mod scans;

pub use dd::{compensated_sum, DD};
pub use field::{norm, CompiledSeries, NumericField, Perturbation};
pub use integrator::{integrate_flow, integrate_flow_with, DenseStep, IntegratorOptions, Stepper, Trajectory};
pub use locus::{singular_locus_scan_2d, LocusPoint, LocusScan, DEFAULT_LOCUS_TOL};
pub use period::{detect_period, detect_period_with, period_flatness_scan, PeriodEstimate, PeriodOptions};
pub use scans::{
    conjugacy_residual_scan, conservation_residual, fit_slope, sample_directions, ResidualCurve, DEFAULT_RADII,
};

/// Runs `f` on a pool capped by `NFFORGE_THREADS` when set, else on the global pool.
pub fn with_thread_limit<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var("NFFORGE_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    match cap.map(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build()) {
        Some(Ok(pool)) => pool.install(f),
        _ => f(),
    }
}

/// Illinois false position on a bracket `g(a)·g(b) ≤ 0`.
pub(crate) fn bracketed_root(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let (mut fa, mut fb) = (g(a), g(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c.is_finite() && c > a.min(b) && c < a.max(b) { c } else { 0.5 * (a + b) };
        let fc = g(c);
        if fc == 0.0 || (b - a).abs() < tol {
            return Some(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() < tol {
            return Some(if fa.abs() < fb.abs() { a } else { b });
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn illinois_finds_cube_root() {
        let r = bracketed_root(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
        assert!(bracketed_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }
}
