use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::NumericError;
use crate::normalform::GeometricNormalForm;
use crate::series::VectorFieldJet;

use super::dd::DD;
use super::field::{norm, CompiledSeries};
use super::integrator::Trajectory;
use super::with_thread_limit;

pub const DEFAULT_RADII: [f64; 4] = [1e-1, 3e-2, 1e-2, 3e-3];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualCurve {
    pub name: String,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Values at or below the floor count as numerical zero.
    pub noise_floor: Vec<f64>,
    /// Least-squares log-log slope over the points above the floor.
    pub slope: Option<f64>,
    pub threshold: f64,
    /// Fewer than two points above the floor.
    pub saturated: bool,
    pub pass: bool,
}

impl ResidualCurve {
    pub fn new(name: &str, radii: &[f64], values: Vec<f64>, noise_floor: Vec<f64>, threshold: f64) -> Result<Self, NumericError> {
        if radii.len() != values.len() || radii.len() != noise_floor.len() {
            return Err(NumericError::InvalidInput("radii and values differ in length".into()));
        }
        if radii.windows(2).any(|w| !(w[0] > w[1])) || radii.iter().any(|&r| !(r > 0.0)) {
            return Err(NumericError::InvalidInput("radii must be positive and strictly decreasing".into()));
        }
        let (rs, vs): (Vec<f64>, Vec<f64>) =
            radii.iter().zip(&values).zip(&noise_floor).filter(|((_, v), f)| *v > *f).map(|((r, v), _)| (*r, *v)).unzip();
        let saturated = rs.len() < 2;
        let slope = if saturated { None } else { Some(fit_slope(&rs, &vs)) };
        let pass = saturated || slope.is_some_and(|s| s >= threshold);
        Ok(ResidualCurve { name: name.to_string(), radii: radii.to_vec(), values, noise_floor, slope, threshold, saturated, pass })
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.radii.iter().copied().zip(self.values.iter().copied())
    }
}

/// Least-squares slope of `log v` against `log r`.
pub fn fit_slope(radii: &[f64], values: &[f64]) -> f64 {
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Largest drift `|Fᵢ(x(t)) − Fᵢ(x0)|`, each divided by `max(|Fᵢ(x0)|, |x0|^hᵢ)` with `hᵢ`
/// the lowest nonconstant degree of `Fᵢ`.
pub fn conservation_residual(traj: &Trajectory, integrals: &[CompiledSeries]) -> f64 {
    let x0 = &traj.states[0];
    let r0 = norm(x0);
    integrals
        .iter()
        .map(|f| {
            let f0 = f.eval(x0);
            let scale = f0.abs().max(r0.powi(f.lowest_nonconstant_degree().unwrap_or(0) as i32));
            let drift = traj.states.iter().map(|x| (f.eval(x) - f0).abs()).fold(0.0, f64::max);
            if scale > 0.0 {
                drift / scale
            } else {
                drift
            }
        })
        .fold(0.0, f64::max)
}

/// Seeded unit vectors, uniform on the sphere.
pub fn sample_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = norm(&v);
            if r > 1e-3 && r <= 1.0 {
                break v.into_iter().map(|x| x / r).collect();
            }
        })
        .collect()
}

struct Conjugacy {
    x: Vec<CompiledSeries>,
    phi: Vec<CompiledSeries>,
    dphi: Vec<Vec<CompiledSeries>>,
    f: CompiledSeries,
    x1: Vec<CompiledSeries>,
}

impl Conjugacy {
    fn residual(&self, p: &[f64]) -> f64 {
        let pd: Vec<DD> = p.iter().map(|&v| DD::from_f64(v)).collect();
        let xv: Vec<DD> = self.x.iter().map(|c| c.eval_dd(&pd)).collect();
        let y: Vec<DD> = self.phi.iter().map(|c| c.eval_dd(&pd)).collect();
        let fy = self.f.eval_dd(&y);
        let mut sq = DD::ZERO;
        for (i, row) in self.dphi.iter().enumerate() {
            let lhs = row.iter().zip(&xv).fold(DD::ZERO, |acc, (d, v)| acc + d.eval_dd(&pd) * *v);
            let r = lhs - fy * self.x1[i].eval_dd(&y);
            sq = sq + r * r;
        }
        sq.to_f64().sqrt()
    }
}

/// `max |DΦ(x)·X(x) − F(Φ(x))·X⁽¹⁾(Φ(x))|` over `|x| = r`, evaluated in double-double.
pub fn conjugacy_residual_scan(
    x: &VectorFieldJet,
    nf: &GeometricNormalForm,
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ResidualCurve, NumericError> {
    let compile = |v: &[crate::series::TruncatedSeries]| v.iter().map(CompiledSeries::new).collect::<Result<Vec<_>, _>>();
    let data = Conjugacy {
        x: compile(x.components())?,
        phi: compile(nf.phi.components())?,
        dphi: nf.phi.jacobian().iter().map(|row| compile(row)).collect::<Result<Vec<_>, _>>()?,
        f: CompiledSeries::new(&nf.f)?,
        x1: compile(nf.x1.components())?,
    };
    let dirs = sample_directions(x.dim(), samples.max(1), seed);
    let values: Vec<f64> = with_thread_limit(|| {
        radii
            .par_iter()
            .map(|&r| {
                dirs.iter().map(|d| data.residual(&d.iter().map(|v| r * v).collect::<Vec<_>>())).fold(0.0, f64::max)
            })
            .collect()
    });
    let floor: Vec<f64> = radii.iter().map(|r| 1e-26 * r).collect();
    ResidualCurve::new("conjugacy", radii, values, floor, nf.residual_order as f64 + 0.5)
}
