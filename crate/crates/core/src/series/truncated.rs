use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::rational::BigRational;
use num::traits::Zero;
use serde::{Deserialize, Serialize};

use super::exponent::Exponent;
use crate::error::SeriesError;
use crate::scalar::Scalar;

/// Multivariate formal power series with exact coefficients, cut at total degree `order`.
///
/// Zero coefficients are never stored and every stored exponent has degree `<= order`.
/// Iteration follows the canonical exponent order, so everything derived from a series
/// is deterministic.
#[derive(Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    nvars: usize,
    order: u32,
    terms: BTreeMap<Exponent, Scalar>,
}

/// Serialized form of one term, shared with the system file format.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Term {
    pub exponents: Vec<u32>,
    pub coeff_re: String,
    #[serde(default = "zero_literal")]
    pub coeff_im: String,
}

fn zero_literal() -> String {
    "0".to_string()
}

impl TruncatedSeries {
    pub fn zero(nvars: usize, order: u32) -> Self {
        Self { nvars, order, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, order: u32, c: Scalar) -> Self {
        let mut s = Self::zero(nvars, order);
        s.add_term(Exponent::zero(nvars), c);
        s
    }

    pub fn one(nvars: usize, order: u32) -> Self {
        Self::constant(nvars, order, Scalar::one())
    }

    pub fn variable(nvars: usize, order: u32, i: usize) -> Self {
        Self::monomial(nvars, order, Exponent::unit(nvars, i), Scalar::one())
    }

    /// Panics if the exponent has the wrong length.
    pub fn monomial(nvars: usize, order: u32, e: Exponent, c: Scalar) -> Self {
        assert_eq!(e.nvars(), nvars, "exponent length");
        let mut s = Self::zero(nvars, order);
        s.add_term(e, c);
        s
    }

    /// Builds a series from terms; duplicates are summed and terms above `order` dropped.
    pub fn from_terms(
        nvars: usize,
        order: u32,
        terms: impl IntoIterator<Item = (Exponent, Scalar)>,
    ) -> Result<Self, SeriesError> {
        let mut s = Self::zero(nvars, order);
        for (e, c) in terms {
            if e.nvars() != nvars {
                return Err(SeriesError::BadExponent { expected: nvars, got: e.nvars() });
            }
            s.add_term(e, c);
        }
        Ok(s)
    }

    /// Integer-coefficient shorthand used heavily in tests: `&[(&[2, 1], 3)]` is `3x²y`.
    pub fn from_int_terms(nvars: usize, order: u32, terms: &[(&[u32], i64)]) -> Self {
        Self::from_terms(
            nvars,
            order,
            terms.iter().map(|(e, c)| (Exponent::new(e), Scalar::from_int(*c))),
        )
        .expect("well-formed integer terms")
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Scalar)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Exponent, Scalar)> {
        self.terms.into_iter()
    }

    pub fn coeff(&self, e: &Exponent) -> Scalar {
        self.terms.get(e).cloned().unwrap_or_default()
    }

    pub fn coeff_of(&self, powers: &[u32]) -> Scalar {
        self.coeff(&Exponent::new(powers))
    }

    pub fn constant_term(&self) -> Scalar {
        self.coeff(&Exponent::zero(self.nvars))
    }

    /// Adds `c·x^e`, silently dropping it if `e` is above the truncation order.
    pub fn add_term(&mut self, e: Exponent, c: Scalar) {
        if e.degree() > self.order || c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.order == other.order
    }

    pub(crate) fn check_shape(&self, other: &Self) -> Result<(), SeriesError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(SeriesError::ShapeMismatch {
                left_vars: self.nvars,
                left_order: self.order,
                right_vars: other.nvars,
                right_order: other.order,
            })
        }
    }

    fn assert_shape(&self, other: &Self) {
        if let Err(e) = self.check_shape(other) {
            panic!("{e}");
        }
    }

    /// Terms of total degree exactly `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        self.degree_range(d, d)
    }

    pub fn degree_range(&self, lo: u32, hi: u32) -> Self {
        Self {
            nvars: self.nvars,
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| (lo..=hi).contains(&e.degree()))
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Lowest degree carrying a nonzero coefficient.
    pub fn lowest_degree(&self) -> Option<u32> {
        self.terms.keys().next().map(Exponent::degree)
    }

    /// Lowest degree `>= 1` carrying a nonzero coefficient.
    pub fn lowest_nonconstant_degree(&self) -> Option<u32> {
        self.terms.keys().map(Exponent::degree).find(|&d| d >= 1)
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Exponent::degree)
    }

    /// Changes the truncation order; raising it pads with zero coefficients.
    pub fn with_order(&self, order: u32) -> Self {
        Self {
            nvars: self.nvars,
            order,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.degree() <= order)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        if s.is_zero() {
            return Self::zero(self.nvars, self.order);
        }
        Self {
            nvars: self.nvars,
            order: self.order,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(Scalar::is_real)
    }

    pub fn conj(&self) -> Self {
        self.map_coeffs(Scalar::conj)
    }

    pub fn real_part(&self) -> Self {
        self.map_coeffs(|c| Scalar::real(c.re().clone()))
    }

    pub fn imag_part(&self) -> Self {
        self.map_coeffs(|c| Scalar::real(c.im().clone()))
    }

    pub fn map_coeffs(&self, f: impl Fn(&Scalar) -> Scalar) -> Self {
        let mut out = Self::zero(self.nvars, self.order);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    /// ∂/∂x_i, keeping the same order. The degree-`order` coefficient of the result is
    /// unknown (it would come from a term past the truncation) and is left as zero, so
    /// the derivative alone is reliable through degree `order - 1`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars, self.order);
        for (e, c) in &self.terms {
            let p = e.get(i);
            if p == 0 {
                continue;
            }
            let lowered = e.drop_one(i).expect("positive power");
            out.terms.insert(lowered, c.mul_int(i64::from(p)));
        }
        out
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.nvars).map(|i| self.derivative(i)).collect()
    }

    /// Exact product with every term above `order` discarded.
    pub fn mul_truncated(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_shape(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let order = self.order;
        let mut acc: BTreeMap<Exponent, Scalar> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            let room = order - ea.degree();
            for (eb, cb) in &other.terms {
                // `other` iterates in increasing degree
                if eb.degree() > room {
                    break;
                }
                let p = ca * cb;
                match acc.entry(ea.add(eb)) {
                    Entry::Occupied(mut o) => *o.get_mut() += &p,
                    Entry::Vacant(v) => {
                        v.insert(p);
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Self { nvars: self.nvars, order, terms: acc }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.nvars, self.order);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Evaluates the polynomial at an exact point.
    pub fn eval_exact(&self, point: &[Scalar]) -> Scalar {
        assert_eq!(point.len(), self.nvars);
        let mut total = Scalar::zero();
        for (e, c) in &self.terms {
            let mut v = c.clone();
            for (i, p) in e.powers().enumerate() {
                for _ in 0..p {
                    v = &v * &point[i];
                }
            }
            total += &v;
        }
        total
    }

    pub fn to_terms(&self) -> Vec<Term> {
        self.terms
            .iter()
            .map(|(e, c)| Term {
                exponents: e.to_vec(),
                coeff_re: crate::scalar::rational_to_string(c.re()),
                coeff_im: crate::scalar::rational_to_string(c.im()),
            })
            .collect()
    }

    pub fn from_term_list(nvars: usize, order: u32, terms: &[Term]) -> Result<Self, crate::error::ParseRationalError> {
        let mut s = Self::zero(nvars, order);
        for t in terms {
            let re = crate::scalar::parse_rational(&t.coeff_re)?;
            let im = crate::scalar::parse_rational(&t.coeff_im)?;
            if t.exponents.len() != nvars {
                return Err(crate::error::ParseRationalError {
                    literal: format!("exponent {:?} has wrong length", t.exponents),
                });
            }
            s.add_term(Exponent::new(&t.exponents), Scalar::new(re, im));
        }
        Ok(s)
    }

    /// Real rational coefficient of `x^e`, if the series is real there.
    pub fn real_coeff(&self, e: &Exponent) -> Option<BigRational> {
        let c = self.coeff(e);
        c.is_real().then(|| c.re().clone())
    }

    pub fn max_height_bits(&self) -> u64 {
        self.terms.values().map(Scalar::height_bits).max().unwrap_or(0)
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.assert_shape(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.assert_shape(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    /// Panics on shape mismatch; see [`TruncatedSeries::mul_truncated`].
    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.assert_shape(rhs);
        self.mul_unchecked(rhs)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        self.map_coeffs(|c| -c)
    }
}

/// Free-function form of [`TruncatedSeries::mul_truncated`].
pub fn mul_truncated(a: &TruncatedSeries, b: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
    a.mul_truncated(b)
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            let negative = c.is_real() && c.re() < &BigRational::zero();
            let shown = if negative { -c } else { c.clone() };
            if k > 0 {
                write!(f, " {} ", if negative { "-" } else { "+" })?;
            } else if negative {
                write!(f, "-")?;
            }
            let mono: Vec<String> = e
                .powers()
                .enumerate()
                .filter(|(_, p)| *p > 0)
                .map(|(i, p)| if p == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, p) })
                .collect();
            match (mono.is_empty(), shown.is_one()) {
                (true, _) => write!(f, "{shown}")?,
                (false, true) => write!(f, "{}", mono.join("*"))?,
                (false, false) => write!(f, "{}*{}", shown, mono.join("*"))?,
            }
        }
        write!(f, " + O({})", self.order + 1)
    }
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
