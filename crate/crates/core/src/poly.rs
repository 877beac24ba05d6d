//! Dense univariate polynomials over an exact field, plus a float root finder.

use num::complex::Complex64;
use num::rational::BigRational;
use num::traits::ToPrimitive;

use crate::linalg::{Field, Matrix};

/// Coefficients from the constant term upward; no trailing zeros.
#[derive(Clone, PartialEq, Debug)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

impl<T: Field> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(Field::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![] }
    }

    pub fn one() -> Self {
        Self { coeffs: vec![T::one()] }
    }

    /// `t`.
    pub fn t() -> Self {
        Self { coeffs: vec![T::zero(), T::one()] }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> Option<&T> {
        self.coeffs.last()
    }

    pub fn monic(&self) -> Self {
        match self.lead() {
            None => Self::zero(),
            Some(l) => {
                let inv = l.inv().expect("leading coefficient is nonzero");
                Self::new(self.coeffs.iter().map(|c| c.mul(&inv)).collect())
            }
        }
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.mul(&T::from_i64(k as i64)))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &Self, i: usize| p.coeffs.get(i).cloned().unwrap_or_else(T::zero);
        Self::new((0..n).map(|i| get(self, i).add(&get(other, i))).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&T::one().neg()))
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.mul(s)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        Self::new(out)
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let inv = divisor.lead().unwrap().inv().unwrap();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![T::zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd && !rem.is_empty() {
            let top = rem.len() - 1;
            let c = rem[top].mul(&inv);
            if !c.is_zero() {
                for (k, d) in divisor.coeffs.iter().enumerate() {
                    rem[top - dd + k] = rem[top - dd + k].sub(&c.mul(d));
                }
                quot[top - dd] = c;
            }
            rem.pop();
        }
        (Self::new(quot), Self::new(rem))
    }

    /// Monic greatest common divisor (zero only if both inputs are zero).
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn lcm(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        self.mul(other).div_rem(&self.gcd(other)).0.monic()
    }

    pub fn eval(&self, t: &T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc.mul(t).add(c))
    }

    /// Squarefree iff `gcd(p, p')` is constant.
    pub fn is_squarefree(&self) -> bool {
        self.gcd(&self.derivative()).degree().unwrap_or(0) == 0
    }

    /// Yun's algorithm: monic squarefree, pairwise coprime factors `(q_i, i)` with
    /// `p = lead · Π q_i^i`. Constant factors are omitted.
    pub fn squarefree_decomposition(&self) -> Vec<(Self, usize)> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        let p = self.monic();
        let dp = p.derivative();
        let a0 = p.gcd(&dp);
        let mut b = p.div_rem(&a0).0;
        let mut c = dp.div_rem(&a0).0;
        let mut d = c.sub(&b.derivative());
        let mut i = 1;
        while b.degree().unwrap_or(0) > 0 {
            let a = b.gcd(&d);
            b = b.div_rem(&a).0;
            c = d.div_rem(&a).0;
            d = c.sub(&b.derivative());
            if a.degree().unwrap_or(0) > 0 {
                out.push((a, i));
            }
            i += 1;
        }
        out
    }
}

/// Characteristic polynomial `det(t·I − A)` by the Faddeev–LeVerrier recursion.
pub fn characteristic_polynomial<T: Field>(a: &Matrix<T>) -> Poly<T> {
    assert!(a.is_square(), "characteristic polynomial of a non-square matrix");
    let n = a.rows();
    let mut c = vec![T::zero(); n + 1];
    c[n] = T::one();
    let mut m = Matrix::<T>::zeros(n, n);
    for k in 1..=n {
        let mut next = a.mul(&m);
        for i in 0..n {
            let v = next.get(i, i).add(&c[n - k + 1]);
            next.set(i, i, v);
        }
        m = next;
        let tr = a.mul(&m).trace();
        c[n - k] = tr.neg().mul(&T::from_i64(k as i64).inv().unwrap());
    }
    Poly::new(c)
}

/// Minimal polynomial as the lcm of the Krylov annihilators of the unit vectors.
pub fn minimal_polynomial<T: Field>(a: &Matrix<T>) -> Poly<T> {
    assert!(a.is_square(), "minimal polynomial of a non-square matrix");
    let n = a.rows();
    let mut acc = Poly::one();
    for i in 0..n {
        let mut v = vec![T::zero(); n];
        v[i] = T::one();
        let mut krylov = vec![v];
        loop {
            let next = a.mul_vec(krylov.last().unwrap());
            let basis = Matrix::from_columns(&krylov);
            if let Some(x) = basis.solve(&next) {
                // next = Σ x_j A^j v, so t^d − Σ x_j t^j annihilates v
                let mut coeffs: Vec<T> = x.iter().map(Field::neg).collect();
                coeffs.push(T::one());
                acc = acc.lcm(&Poly::new(coeffs));
                break;
            }
            krylov.push(next);
        }
    }
    acc
}

/// Float coefficients of a rational polynomial.
pub fn to_f64_coeffs(p: &Poly<BigRational>) -> Vec<f64> {
    p.coeffs().iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
}

fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// All complex roots of a polynomial with real coefficients (constant term first),
/// by Aberth–Ehrlich iteration followed by Newton polishing. `None` if the
/// iteration does not settle; roots of multiplicity > 1 converge slowly, so
/// callers should pass squarefree input.
pub fn roots_f64(coeffs: &[f64]) -> Option<Vec<Complex64>> {
    let mut c = coeffs.to_vec();
    while c.last() == Some(&0.0) {
        c.pop();
    }
    let deg = c.len().checked_sub(1)?;
    if deg == 0 {
        return Some(vec![]);
    }
    let lead = c[deg];
    for x in &mut c {
        *x /= lead;
    }
    let bound = 1.0 + c[..deg].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| Complex64::from_polar(0.5 * bound, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64))
        .collect();
    let mut converged = false;
    for _ in 0..1000 {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let (p, dp) = horner(&c, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let sum: Complex64 = (0..deg).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[i] -= step;
            max_step = max_step.max(step.norm() / z[i].norm().max(1e-300));
        }
        if max_step < 1e-15 {
            converged = true;
            break;
        }
    }
    for zi in &mut z {
        for _ in 0..3 {
            let (p, dp) = horner(&c, *zi);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if step.norm() <= f64::EPSILON * zi.norm() {
                break;
            }
            *zi -= step;
        }
    }
    let scale = bound.max(1.0);
    let residual_ok = z.iter().all(|&zi| {
        let (p, _) = horner(&c, zi);
        p.norm() <= 1e-8 * scale.powi(deg as i32)
    });
    (converged || residual_ok).then_some(z)
}
