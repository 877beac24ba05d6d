//! Dormand–Prince 5(4) with Hairer's continuous extension.

use serde::Serialize;

use crate::error::NumericError;

use super::field::{norm, NumericField};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// States with larger Euclidean norm abort the integration.
    pub domain_radius: f64,
    pub max_steps: usize,
    pub h_min: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { rtol: 1e-10, atol: 1e-14, domain_radius: 1e6, max_steps: 1_000_000, h_min: 1e-14 }
    }
}

impl IntegratorOptions {
    pub fn tol(rtol: f64, atol: f64) -> Self {
        IntegratorOptions { rtol, atol, ..Default::default() }
    }
}

/// Continuous extension over one accepted step.
#[derive(Clone, Debug)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    r: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        (0..self.r[0].len())
            .map(|i| {
                let r = |k: usize| self.r[k][i];
                r(0) + th * (r(1) + th1 * (r(2) + th * (r(3) + th1 * r(4))))
            })
            .collect()
    }

    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }
}

/// Step-by-step driver; `integrate_flow` and the section search both run on it.
pub struct Stepper<'a> {
    f: &'a NumericField,
    opts: IntegratorOptions,
    pub t: f64,
    pub y: Vec<f64>,
    k1: Vec<f64>,
    h: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(f: &'a NumericField, x0: &[f64], opts: IntegratorOptions) -> Result<Self, NumericError> {
        if x0.len() != f.dim() {
            return Err(NumericError::InvalidInput(format!("initial point has {} entries, field dimension {}", x0.len(), f.dim())));
        }
        if !(opts.rtol > 0.0 && opts.atol > 0.0) {
            return Err(NumericError::InvalidInput("tolerances must be positive".into()));
        }
        if norm(x0) > opts.domain_radius {
            return Err(NumericError::LeftDomain { t: 0.0 });
        }
        let k1 = f.eval_vec(x0);
        let h = initial_step(f, x0, &k1, &opts);
        Ok(Stepper { f, opts, t: 0.0, y: x0.to_vec(), k1, h, accepted: 0, rejected: 0 })
    }

    fn sc(&self, a: f64, b: f64) -> f64 {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    /// One accepted step, not passing `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<DenseStep, NumericError> {
        let n = self.y.len();
        loop {
            if self.accepted + self.rejected >= self.opts.max_steps {
                return Err(NumericError::TooManySteps { t: self.t });
            }
            let mut h = self.h.min(t_end - self.t);
            let last = h >= t_end - self.t;
            if h < self.opts.h_min * self.t.abs().max(1.0) && !last {
                return Err(NumericError::StepSizeUnderflow { t: self.t });
            }
            if h <= 0.0 {
                h = t_end - self.t;
            }
            let mut k: Vec<Vec<f64>> = vec![self.k1.clone()];
            let mut stage = vec![0.0; n];
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate() {
                        acc += A[s][j] * kj[i];
                    }
                    stage[i] = self.y[i] + h * acc;
                }
                k.push(self.f.eval_vec(&stage));
            }
            // stage now holds y1 (FSAL: row 7 of A equals the 5th-order weights)
            let y1 = stage.clone();
            let mut err = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for s in 0..7 {
                    e += E[s] * k[s][i];
                }
                let r = h * e / self.sc(self.y[i], y1[i]);
                err += r * r;
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                self.h = h * 0.2;
                self.rejected += 1;
                continue;
            }
            let fac = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            if err <= 1.0 {
                let ydiff: Vec<f64> = (0..n).map(|i| y1[i] - self.y[i]).collect();
                let bspl: Vec<f64> = (0..n).map(|i| h * k[0][i] - ydiff[i]).collect();
                let r3: Vec<f64> = (0..n).map(|i| ydiff[i] - h * k[6][i] - bspl[i]).collect();
                let r4: Vec<f64> = (0..n).map(|i| h * (0..7).map(|s| D[s] * k[s][i]).sum::<f64>()).collect();
                let dense = DenseStep { t0: self.t, h, r: [self.y.clone(), ydiff, bspl, r3, r4] };
                self.t = if last { t_end } else { self.t + h };
                self.y = y1;
                self.k1 = k.pop().expect("seven stages");
                self.h = h * fac.min(if self.rejected > 0 && err > 0.5 { 1.0 } else { 10.0 });
                self.accepted += 1;
                if norm(&self.y) > self.opts.domain_radius {
                    return Err(NumericError::LeftDomain { t: self.t });
                }
                return Ok(dense);
            }
            self.h = h * fac.min(1.0);
            self.rejected += 1;
        }
    }
}

fn initial_step(f: &NumericField, x0: &[f64], f0: &[f64], opts: &IntegratorOptions) -> f64 {
    let n = x0.len() as f64;
    let sc: Vec<f64> = x0.iter().map(|x| opts.atol + opts.rtol * x.abs()).collect();
    let d0 = (x0.iter().zip(&sc).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let x1: Vec<f64> = x0.iter().zip(f0).map(|(x, v)| x + h0 * v).collect();
    let f1 = f.eval_vec(&x1);
    let d2 = (f1.iter().zip(f0).zip(&sc).map(|((a, b), s)| ((a - b) / s).powi(2)).sum::<f64>() / n).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub rtol: f64,
    pub atol: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("nonempty")
    }
}

pub fn integrate_flow(f: &NumericField, x0: &[f64], t_end: f64, rtol: f64, atol: f64) -> Result<Trajectory, NumericError> {
    integrate_flow_with(f, x0, t_end, IntegratorOptions::tol(rtol, atol))
}

pub fn integrate_flow_with(f: &NumericField, x0: &[f64], t_end: f64, opts: IntegratorOptions) -> Result<Trajectory, NumericError> {
    if !(t_end > 0.0) {
        return Err(NumericError::InvalidInput("integration time must be positive".into()));
    }
    let mut st = Stepper::new(f, x0, opts)?;
    let mut times = vec![0.0];
    let mut states = vec![x0.to_vec()];
    while st.t < t_end {
        st.step(t_end)?;
        times.push(st.t);
        states.push(st.y.clone());
    }
    Ok(Trajectory { times, states, rtol: opts.rtol, atol: opts.atol, accepted: st.accepted, rejected: st.rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotation() -> NumericField {
        NumericField::from_fn(2, |x, o| {
            o[0] = -x[1];
            o[1] = x[0];
        })
    }

    #[test]
    fn rotation_closes_after_two_pi() {
        let tr = integrate_flow(&rotation(), &[1.0, 0.0], 2.0 * PI, 1e-12, 1e-14).unwrap();
        let y = tr.last();
        assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8, "{y:?}");
        assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn exponential_growth() {
        let f = NumericField::from_fn(2, |x, o| {
            o[0] = x[0];
            o[1] = 0.0;
        });
        let tr = integrate_flow(&f, &[1.0, 0.0], 1.0, 1e-12, 1e-14).unwrap();
        assert!((tr.last()[0] - std::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn dense_output_is_accurate_between_steps() {
        let f = rotation();
        let mut st = Stepper::new(&f, &[1.0, 0.0], IntegratorOptions::tol(1e-11, 1e-14)).unwrap();
        let mut worst: f64 = 0.0;
        while st.t < 6.0 {
            let d = st.step(6.0).unwrap();
            for j in 1..8 {
                let t = d.t0 + d.h * j as f64 / 8.0;
                let y = d.eval(t);
                worst = worst.max((y[0] - t.cos()).abs()).max((y[1] - t.sin()).abs());
            }
        }
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn tightening_rtol_reduces_error() {
        let err = |rtol: f64| {
            let tr = integrate_flow(&rotation(), &[1.0, 0.0], 2.0 * PI, rtol, 1e-16).unwrap();
            let y = tr.last();
            ((y[0] - 1.0).powi(2) + y[1].powi(2)).sqrt()
        };
        // global error tracks the tolerance roughly linearly
        for rtol in [1e-6, 1e-8] {
            assert!(err(rtol) / err(rtol / 16.0) >= 4.0, "{rtol}");
        }
    }

    #[test]
    fn blow_up_leaves_domain() {
        let f = NumericField::from_fn(1, |x, o| o[0] = x[0] * x[0]);
        let r = integrate_flow(&f, &[1.0], 2.0, 1e-8, 1e-12);
        assert!(matches!(r, Err(NumericError::LeftDomain { .. }) | Err(NumericError::StepSizeUnderflow { .. })));
    }
}
