use std::fmt;
use std::sync::Arc;

use crate::error::NumericError;
use crate::series::{TruncatedSeries, VectorFieldJet};

use super::dd::{compensated_sum, DD};

/// A real polynomial with coefficients kept as double-doubles, terms in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledSeries {
    nvars: usize,
    max_power: usize,
    low: Option<u32>,
    terms: Vec<(Vec<u32>, DD)>,
}

impl CompiledSeries {
    pub fn new(s: &TruncatedSeries) -> Result<Self, NumericError> {
        if !s.is_real() {
            return Err(NumericError::InvalidInput("series has complex coefficients".into()));
        }
        let terms: Vec<(Vec<u32>, DD)> = s.terms().map(|(e, c)| (e.to_vec(), DD::from_rational(c.re()))).collect();
        let max_power = terms.iter().flat_map(|(p, _)| p.iter().copied()).max().unwrap_or(0) as usize;
        Ok(CompiledSeries { nvars: s.nvars(), max_power, low: s.lowest_nonconstant_degree(), terms })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn lowest_nonconstant_degree(&self) -> Option<u32> {
        self.low
    }

    fn powers<T: Copy>(&self, x: &[T], one: T, mul: impl Fn(T, T) -> T) -> Vec<Vec<T>> {
        x.iter()
            .map(|&xi| {
                let mut p = Vec::with_capacity(self.max_power + 1);
                p.push(one);
                for k in 1..=self.max_power {
                    p.push(mul(p[k - 1], xi));
                }
                p
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let pw = self.powers(x, 1.0, |a, b| a * b);
        compensated_sum(self.terms.iter().map(|(p, c)| {
            p.iter().enumerate().fold(c.hi, |acc, (i, &k)| acc * pw[i][k as usize])
        }))
    }

    pub fn eval_dd(&self, x: &[DD]) -> DD {
        let pw = self.powers(x, DD::ONE, |a, b| a * b);
        self.terms.iter().fold(DD::ZERO, |acc, (p, c)| {
            acc + p.iter().enumerate().fold(*c, |t, (i, &k)| t * pw[i][k as usize])
        })
    }
}

pub type Perturbation = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Float evaluator for a vector field: a compiled jet, an optional divisor, and an
/// optional additive perturbation.
#[derive(Clone)]
pub struct NumericField {
    dim: usize,
    components: Vec<CompiledSeries>,
    divisor: Option<CompiledSeries>,
    extra: Option<Perturbation>,
}

impl fmt::Debug for NumericField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericField")
            .field("dim", &self.dim)
            .field("components", &self.components.len())
            .field("divided", &self.divisor.is_some())
            .field("perturbed", &self.extra.is_some())
            .finish()
    }
}

impl NumericField {
    pub fn from_jet(x: &VectorFieldJet) -> Result<Self, NumericError> {
        let components = x.components().iter().map(CompiledSeries::new).collect::<Result<Vec<_>, _>>()?;
        Ok(NumericField { dim: x.dim(), components, divisor: None, extra: None })
    }

    /// A field given entirely by a closure writing `f(x)` into `out`.
    pub fn from_fn(dim: usize, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        NumericField { dim, components: Vec::new(), divisor: None, extra: Some(Arc::new(f)) }
    }

    /// Adds `p(x)` to the field value. Replaces any earlier perturbation.
    pub fn with_perturbation(mut self, p: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.extra = Some(Arc::new(p));
        self
    }

    /// The field `X / F` (jet part only; a perturbation is added undivided).
    pub fn divided_by(mut self, f: &TruncatedSeries) -> Result<Self, NumericError> {
        if f.nvars() != self.dim {
            return Err(NumericError::InvalidInput("divisor dimension mismatch".into()));
        }
        self.divisor = Some(CompiledSeries::new(f)?);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let d = self.divisor.as_ref().map_or(1.0, |f| f.eval(x));
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.components.get(j).map_or(0.0, |c| c.eval(x) / d);
        }
        if let Some(p) = &self.extra {
            let mut add = vec![0.0; self.dim];
            p(x, &mut add);
            for (o, a) in out.iter_mut().zip(add) {
                *o += a;
            }
        }
    }

    pub fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval(x, &mut out);
        out
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
