use std::collections::HashMap;

use super::exponent::Exponent;
use super::truncated::TruncatedSeries;
use crate::error::SeriesError;

/// Substitutes a fixed tuple of series into many series, sharing the table of
/// monomial powers `subs^α` between calls.
pub struct Composer<'a> {
    subs: &'a [TruncatedSeries],
    nvars: usize,
    order: u32,
    powers: HashMap<Exponent, TruncatedSeries>,
}

impl<'a> Composer<'a> {
    /// Every substituted series must vanish at the origin and share one shape.
    pub fn new(subs: &'a [TruncatedSeries]) -> Result<Self, SeriesError> {
        let first = subs.first().ok_or(SeriesError::ArityMismatch { expected: 1, got: 0 })?;
        for (i, s) in subs.iter().enumerate() {
            first.check_shape(s)?;
            if !s.constant_term().is_zero() {
                return Err(SeriesError::NonzeroConstant { index: i });
            }
        }
        Ok(Self { subs, nvars: first.nvars(), order: first.order(), powers: HashMap::new() })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    fn power(&mut self, alpha: &Exponent) -> TruncatedSeries {
        if let Some(p) = self.powers.get(alpha) {
            return p.clone();
        }
        let value = match alpha.last_nonzero() {
            None => TruncatedSeries::one(self.nvars, self.order),
            // substitutions vanish at O, so subs^α starts at degree |α|
            Some(_) if alpha.degree() > self.order => TruncatedSeries::zero(self.nvars, self.order),
            Some(i) => {
                let lower = alpha.drop_one(i).expect("positive power");
                let base = self.power(&lower);
                &base * &self.subs[i]
            }
        };
        self.powers.insert(alpha.clone(), value.clone());
        value
    }

    /// `f(subs₁, …, subs_m)` truncated at the substitution order.
    pub fn compose(&mut self, f: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
        if f.nvars() != self.subs.len() {
            return Err(SeriesError::ArityMismatch { expected: f.nvars(), got: self.subs.len() });
        }
        let mut out = TruncatedSeries::zero(self.nvars, self.order);
        for (alpha, c) in f.terms() {
            if alpha.degree() > self.order {
                break;
            }
            let p = self.power(alpha);
            for (e, v) in p.terms() {
                out.add_term(e.clone(), c * v);
            }
        }
        Ok(out)
    }
}

/// `f ∘ subs` where `subs` are series vanishing at the origin.
pub fn substitute(f: &TruncatedSeries, subs: &[TruncatedSeries]) -> Result<TruncatedSeries, SeriesError> {
    Composer::new(subs)?.compose(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_substitution() {
        // f = u, u = x + y
        let f = TruncatedSeries::variable(1, 3, 0);
        let xy = TruncatedSeries::from_int_terms(2, 3, &[(&[1, 0], 1), (&[0, 1], 1)]);
        assert_eq!(substitute(&f, std::slice::from_ref(&xy)).unwrap(), xy);
    }

    #[test]
    fn square_of_shifted_variable() {
        // u² with u = x + x² → x² + 2x³ at order 3
        let f = TruncatedSeries::from_int_terms(1, 3, &[(&[2], 1)]);
        let phi = TruncatedSeries::from_int_terms(1, 3, &[(&[1], 1), (&[2], 1)]);
        let got = substitute(&f, &[phi]).unwrap();
        assert_eq!(got, TruncatedSeries::from_int_terms(1, 3, &[(&[2], 1), (&[3], 2)]));
    }

    #[test]
    fn rejects_constant_terms() {
        let f = TruncatedSeries::variable(1, 3, 0);
        let bad = TruncatedSeries::from_int_terms(1, 3, &[(&[0], 1), (&[1], 1)]);
        assert_eq!(substitute(&f, &[bad]), Err(SeriesError::NonzeroConstant { index: 0 }));
    }
}
