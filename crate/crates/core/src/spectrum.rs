//! Eigenvalues, semisimplicity, classification into the four spectrum cases, and
//! exact canonical coordinates for the linear part.

use std::fmt;

use num::complex::Complex64;
use num::integer::Integer;
use num::rational::BigRational;
use num::traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::SpectrumError;
use crate::linalg::{Field, Matrix};
use crate::poly::{characteristic_polynomial, minimal_polynomial, roots_f64, to_f64_coeffs, Poly};

/// Exact rational linear part.
pub type LinearPart = Matrix<BigRational>;

/// Eigenvalues with multiplicity, sorted by real part then imaginary part (descending).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Algebraic multiplicity of each entry of `eigenvalues`.
    pub multiplicities: Vec<usize>,
}

impl Spectrum {
    /// Builds a spectrum directly from values (each of multiplicity one as listed).
    pub fn from_values(values: &[Complex64]) -> Self {
        Self { eigenvalues: values.to_vec(), multiplicities: vec![1; values.len()] }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpectrumCase {
    StrongHyperbolic,
    WeakHyperbolic,
    StrongElliptic,
    WeakElliptic,
}

impl SpectrumCase {
    pub fn is_elliptic(self) -> bool {
        matches!(self, Self::StrongElliptic | Self::WeakElliptic)
    }

    pub fn is_weak(self) -> bool {
        matches!(self, Self::WeakHyperbolic | Self::WeakElliptic)
    }
}

impl fmt::Display for SpectrumCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::StrongHyperbolic => "StrongHyperbolic",
            Self::WeakHyperbolic => "WeakHyperbolic",
            Self::StrongElliptic => "StrongElliptic",
            Self::WeakElliptic => "WeakElliptic",
        };
        f.write_str(s)
    }
}

/// Eigenvalues are `m·λ` (hyperbolic) or `m·i·λ` (elliptic).
///
/// `m` is in canonical order: the `k` zeros first, then hyperbolic entries in
/// descending order, or elliptic pairs `(a, −a)` with `a > 0` ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumClass {
    pub case: SpectrumCase,
    pub k: usize,
    pub m: Vec<i64>,
    pub lambda: f64,
}

impl SpectrumClass {
    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn is_elliptic(&self) -> bool {
        self.case.is_elliptic()
    }

    /// Canonical integer matrix: zero block, `diag(m)` for hyperbolic entries,
    /// `a·[[0,−1],[1,0]]` per elliptic pair.
    pub fn canonical_matrix(&self) -> LinearPart {
        let n = self.dim();
        let mut c = Matrix::zeros(n, n);
        let int = |x: i64| BigRational::from_integer(x.into());
        if self.is_elliptic() {
            let mut j = self.k;
            while j + 1 < n {
                let a = self.m[j];
                c.set(j, j + 1, int(-a));
                c.set(j + 1, j, int(a));
                j += 2;
            }
        } else {
            for j in self.k..n {
                c.set(j, j, int(self.m[j]));
            }
        }
        c
    }
}

/// Tolerances for [`classify_spectrum_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyConfig {
    /// Relative zero test `|λᵢ| < tol · max|λⱼ|`, also used for the real/imaginary test.
    pub tol: f64,
    pub max_denominator: i64,
    pub ratio_tol: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self { tol: 1e-9, max_denominator: 64, ratio_tol: 1e-7 }
    }
}

fn sort_key(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

/// Eigenvalues through the exact characteristic polynomial: exact zero roots are
/// split off, the rest is factored squarefree and each factor solved numerically.
pub fn eigenvalues_numeric(a: &LinearPart) -> Result<Spectrum, SpectrumError> {
    if !a.is_square() || a.rows() == 0 {
        return Err(SpectrumError::BadMatrix);
    }
    let chi = characteristic_polynomial(a);
    let mut pairs: Vec<(Complex64, usize)> = Vec::new();
    for (factor, mult) in chi.squarefree_decomposition() {
        let mut f = factor;
        if Zero::is_zero(&f.coeffs()[0]) {
            pairs.push((Complex64::new(0.0, 0.0), mult));
            f = Poly::new(f.coeffs()[1..].to_vec());
        }
        let roots = roots_f64(&to_f64_coeffs(&f)).ok_or(SpectrumError::RootFinderFailed)?;
        pairs.extend(roots.into_iter().map(|z| (z, mult)));
    }
    pairs.sort_by(|x, y| sort_key(&x.0, &y.0));
    let mut eigenvalues = Vec::with_capacity(a.rows());
    let mut multiplicities = Vec::with_capacity(a.rows());
    for (z, mult) in pairs {
        for _ in 0..mult {
            eigenvalues.push(z);
            multiplicities.push(mult);
        }
    }
    Ok(Spectrum { eigenvalues, multiplicities })
}

/// True iff the exact minimal polynomial is squarefree (diagonalizable over ℂ).
pub fn semisimplicity_check<T: Field>(a: &Matrix<T>) -> bool {
    a.is_square() && minimal_polynomial(a).is_squarefree()
}

/// Best rational approximation `p/q` with `q ≤ max_den`, by continued-fraction convergents.
pub fn rationalize(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Some((h1, k1));
        }
        let frac = r - a as f64;
        if frac.abs() < 1e-300 {
            break;
        }
        r = 1.0 / frac;
    }
    (k1 > 0 && (x - h1 as f64 / k1 as f64).abs() <= tol).then_some((h1, k1))
}

pub fn classify_spectrum(s: &Spectrum, tol: f64) -> Result<SpectrumClass, SpectrumError> {
    classify_spectrum_with(s, &ClassifyConfig { tol, ..ClassifyConfig::default() })
}

pub fn classify_spectrum_with(s: &Spectrum, cfg: &ClassifyConfig) -> Result<SpectrumClass, SpectrumError> {
    let scale = s.eigenvalues.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(SpectrumError::AllZero);
    }
    let thresh = cfg.tol * scale;
    let nonzero: Vec<Complex64> = s.eigenvalues.iter().copied().filter(|z| z.norm() >= thresh).collect();
    let k = s.len() - nonzero.len();
    let all_real = nonzero.iter().all(|z| z.im.abs() < thresh);
    let all_imag = nonzero.iter().all(|z| z.re.abs() < thresh);
    let elliptic = match (all_real, all_imag) {
        (true, false) => false,
        (false, true) => true,
        _ => {
            return Err(SpectrumError::MixedSpectrum(format!(
                "nonzero eigenvalues are neither all real nor all imaginary: {:?}",
                nonzero
            )))
        }
    };
    let values: Vec<f64> = nonzero.iter().map(|z| if elliptic { z.im } else { z.re }).collect();
    let reference = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let mut fracs = Vec::with_capacity(values.len());
    for &v in &values {
        let r = v / reference;
        let f = rationalize(r, cfg.max_denominator, cfg.ratio_tol)
            .ok_or_else(|| SpectrumError::NonCommensurable(format!("ratio {r} has no small rational form")))?;
        fracs.push(f);
    }
    let l = fracs.iter().fold(1i64, |acc, &(_, q)| acc.lcm(&q));
    let mut m_nonzero: Vec<i64> = fracs.iter().map(|&(p, q)| p * (l / q)).collect();
    let g = m_nonzero.iter().fold(0i64, |acc, x| acc.gcd(x));
    for x in &mut m_nonzero {
        *x /= g;
    }
    let lambda = reference * g as f64 / l as f64;

    let mut m = vec![0i64; k];
    if elliptic {
        let mut pos: Vec<i64> = m_nonzero.iter().copied().filter(|&x| x > 0).collect();
        let mut neg: Vec<i64> = m_nonzero.iter().copied().filter(|&x| x < 0).map(|x| -x).collect();
        pos.sort_unstable();
        neg.sort_unstable();
        if pos != neg {
            return Err(SpectrumError::MixedSpectrum(
                "imaginary eigenvalues are not closed under conjugation".into(),
            ));
        }
        for a in pos {
            m.extend([a, -a]);
        }
    } else {
        m_nonzero.sort_unstable_by(|a, b| b.cmp(a));
        m.extend(m_nonzero);
    }
    let case = match (elliptic, k > 0) {
        (false, false) => SpectrumCase::StrongHyperbolic,
        (false, true) => SpectrumCase::WeakHyperbolic,
        (true, false) => SpectrumCase::StrongElliptic,
        (true, true) => SpectrumCase::WeakElliptic,
    };
    Ok(SpectrumClass { case, k, m, lambda })
}

/// Exact change of basis to canonical coordinates: `x = T y` with
/// `T⁻¹ A T = λ · C`, where `C = cls.canonical_matrix()`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalLinear {
    pub t: LinearPart,
    pub t_inv: LinearPart,
    pub lambda: BigRational,
    pub canonical: LinearPart,
}

/// Sign-normalize so that the first nonzero entry is positive.
fn normalize_sign(v: Vec<BigRational>) -> Vec<BigRational> {
    match v.iter().find(|x| !Zero::is_zero(*x)) {
        Some(first) if first.is_negative() => v.into_iter().map(|x| -x).collect(),
        _ => v,
    }
}

fn shifted(a: &LinearPart, mu: &BigRational) -> LinearPart {
    a.sub(&Matrix::identity(a.rows()).scale(mu))
}

fn rational_from_f64(x: f64) -> Option<BigRational> {
    rationalize(x, 1_000_000, 1e-9 * x.abs().max(1.0))
        .map(|(p, q)| BigRational::new(p.into(), q.into()))
}

pub fn canonicalize_linear_part(a: &LinearPart, cls: &SpectrumClass) -> Result<CanonicalLinear, SpectrumError> {
    let n = a.rows();
    if !a.is_square() || n != cls.dim() {
        return Err(SpectrumError::BadMatrix);
    }
    if !semisimplicity_check(a) {
        return Err(SpectrumError::NotCanonicalizable("linear part is not semisimple".into()));
    }
    let lambda = rational_from_f64(cls.lambda)
        .filter(|l| l.is_positive())
        .ok_or_else(|| SpectrumError::NotCanonicalizable(format!("λ = {} is not a small rational", cls.lambda)))?;
    let int = |x: i64| BigRational::from_integer(x.into());
    let mut columns: Vec<Vec<BigRational>> = Vec::with_capacity(n);
    let push_kernel = |cols: &mut Vec<Vec<BigRational>>, mat: &LinearPart, want: usize, what: &str| {
        let ker = mat.kernel();
        if ker.len() != want {
            return Err(SpectrumError::NotCanonicalizable(format!(
                "{what}: eigenspace has dimension {} but multiplicity {want}",
                ker.len()
            )));
        }
        cols.extend(ker.into_iter().map(normalize_sign));
        Ok(())
    };
    if cls.k > 0 {
        push_kernel(&mut columns, a, cls.k, "eigenvalue 0")?;
    }
    let nonzero = &cls.m[cls.k..];
    if cls.is_elliptic() {
        let mut seen: Vec<i64> = Vec::new();
        for pair in nonzero.chunks(2) {
            let freq = pair[0];
            if seen.contains(&freq) {
                continue;
            }
            seen.push(freq);
            let mult = nonzero.iter().filter(|&&x| x == freq).count();
            let omega = &lambda * int(freq);
            // ker(A² + ω²) has dimension 2·mult; pick v, Av/ω greedily
            let a2 = a.mul(a).add(&Matrix::identity(n).scale(&(&omega * &omega)));
            let ker = a2.kernel();
            if ker.len() != 2 * mult {
                return Err(SpectrumError::NotCanonicalizable(format!(
                    "frequency {freq}: invariant plane has dimension {} but expected {}",
                    ker.len(),
                    2 * mult
                )));
            }
            let mut added = 0;
            for v in ker {
                if added == mult {
                    break;
                }
                let v = normalize_sign(v);
                let av: Vec<BigRational> = a.mul_vec(&v).into_iter().map(|x| x / &omega).collect();
                let mut trial = columns.clone();
                trial.push(v);
                trial.push(av);
                if Matrix::from_columns(&trial).rank() == trial.len() {
                    columns = trial;
                    added += 1;
                }
            }
            if added != mult {
                return Err(SpectrumError::NotCanonicalizable(format!(
                    "frequency {freq}: could not build {mult} independent rotation planes"
                )));
            }
        }
    } else {
        let mut seen: Vec<i64> = Vec::new();
        for &mj in nonzero {
            if seen.contains(&mj) {
                continue;
            }
            seen.push(mj);
            let mult = nonzero.iter().filter(|&&x| x == mj).count();
            push_kernel(&mut columns, &shifted(a, &(&lambda * int(mj))), mult, &format!("eigenvalue {mj}·λ"))?;
        }
    }
    let t = Matrix::from_columns(&columns);
    let t_inv = t
        .inverse()
        .ok_or_else(|| SpectrumError::NotCanonicalizable("eigenvectors are dependent".into()))?;
    let canonical = cls.canonical_matrix();
    if t_inv.mul(a).mul(&t) != canonical.scale(&lambda) {
        return Err(SpectrumError::NotCanonicalizable(
            "eigenvalues are not rational multiples of a rational λ".into(),
        ));
    }
    Ok(CanonicalLinear { t, t_inv, lambda, canonical })
}

/// Float value of an exact λ (for reports).
pub fn lambda_f64(l: &BigRational) -> f64 {
    l.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[i64]]) -> LinearPart {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect()).collect())
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(got: &[Complex64], want: &[Complex64]) -> bool {
        got.len() == want.len() && got.iter().zip(want).all(|(a, b)| (a - b).norm() < 1e-9 * b.norm().max(1.0))
    }

    #[test]
    fn eigenvalue_examples() {
        let s = eigenvalues_numeric(&mat(&[&[1, 0], &[0, -1]])).unwrap();
        assert!(close(&s.eigenvalues, &[c(1.0, 0.0), c(-1.0, 0.0)]));
        let s = eigenvalues_numeric(&mat(&[&[0, -2], &[2, 0]])).unwrap();
        assert!(close(&s.eigenvalues, &[c(0.0, 2.0), c(0.0, -2.0)]));
        let s = eigenvalues_numeric(&mat(&[&[0, 0, 0], &[1, 0, 1], &[0, 1, 0]])).unwrap();
        assert!(close(&s.eigenvalues, &[c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]));
    }

    #[test]
    fn repeated_eigenvalues_carry_multiplicity() {
        let s = eigenvalues_numeric(&mat(&[&[2, 1], &[0, 2]])).unwrap();
        assert!(close(&s.eigenvalues, &[c(2.0, 0.0), c(2.0, 0.0)]));
        assert_eq!(s.multiplicities, vec![2, 2]);
    }

    #[test]
    fn semisimplicity_examples() {
        assert!(semisimplicity_check(&mat(&[&[1, 0], &[0, -1]])));
        assert!(!semisimplicity_check(&mat(&[&[0, 1], &[0, 0]])));
        assert!(!semisimplicity_check(&mat(&[&[1, 1], &[0, 1]])));
        assert!(semisimplicity_check(&mat(&[&[0, -2], &[2, 0]])));
    }

    #[test]
    fn classification_examples() {
        let cls = classify_spectrum(&Spectrum::from_values(&[c(1.0, 0.0), c(-1.0, 0.0)]), 1e-9).unwrap();
        assert_eq!((cls.case, cls.k, cls.m.clone()), (SpectrumCase::StrongHyperbolic, 0, vec![1, -1]));
        assert!((cls.lambda - 1.0).abs() < 1e-12);

        let vals = [c(0.0, 2.0), c(0.0, -2.0), c(0.0, 3.0), c(0.0, -3.0)];
        let cls = classify_spectrum(&Spectrum::from_values(&vals), 1e-9).unwrap();
        assert_eq!((cls.case, cls.m.clone()), (SpectrumCase::StrongElliptic, vec![2, -2, 3, -3]));
        assert!((cls.lambda - 1.0).abs() < 1e-12);

        let vals = [c(0.0, 0.0), c(5.0, 0.0), c(-5.0, 0.0)];
        let cls = classify_spectrum(&Spectrum::from_values(&vals), 1e-9).unwrap();
        assert_eq!((cls.case, cls.k, cls.m.clone()), (SpectrumCase::WeakHyperbolic, 1, vec![0, 1, -1]));
        assert!((cls.lambda - 5.0).abs() < 1e-12);
    }

    #[test]
    fn classification_errors() {
        let mixed = Spectrum::from_values(&[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)]);
        assert!(matches!(classify_spectrum(&mixed, 1e-9), Err(SpectrumError::MixedSpectrum(_))));
        let focus = Spectrum::from_values(&[c(1.0, 1.0), c(1.0, -1.0)]);
        assert!(matches!(classify_spectrum(&focus, 1e-9), Err(SpectrumError::MixedSpectrum(_))));
        let irrational = Spectrum::from_values(&[c(1.0, 0.0), c(-std::f64::consts::SQRT_2, 0.0)]);
        assert!(matches!(classify_spectrum(&irrational, 1e-9), Err(SpectrumError::NonCommensurable(_))));
        let zero = Spectrum::from_values(&[c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(classify_spectrum(&zero, 1e-9), Err(SpectrumError::AllZero));
    }

    fn canon(a: &LinearPart) -> (SpectrumClass, CanonicalLinear) {
        let cls = classify_spectrum(&eigenvalues_numeric(a).unwrap(), 1e-9).unwrap();
        let c = canonicalize_linear_part(a, &cls).unwrap();
        assert_eq!(c.t_inv.mul(a).mul(&c.t), c.canonical.scale(&c.lambda));
        assert_eq!(c.t.mul(&c.canonical.scale(&c.lambda)).mul(&c.t_inv), *a);
        (cls, c)
    }

    #[test]
    fn canonicalization_examples() {
        let (cls, c) = canon(&mat(&[&[-1, 0], &[0, 1]]));
        assert_eq!(cls.m, vec![1, -1]);
        assert_eq!(c.t, mat(&[&[0, 1], &[1, 0]]));

        let (cls, c) = canon(&mat(&[&[0, -2], &[2, 0]]));
        assert_eq!(cls.m, vec![1, -1]);
        assert_eq!(c.lambda, BigRational::from_integer(2.into()));
        assert_eq!(c.t, mat(&[&[1, 0], &[0, 1]]));

        let (cls, c) = canon(&mat(&[&[1, 2], &[2, 1]]));
        assert_eq!(cls.m, vec![3, -1]);
        assert_eq!(c.t, mat(&[&[1, 1], &[1, -1]]));
        assert_eq!(c.canonical, mat(&[&[3, 0], &[0, -1]]));
    }

    #[test]
    fn irrational_rotation_is_refused() {
        let a = mat(&[&[0, -2], &[1, 0]]);
        let cls = classify_spectrum(&eigenvalues_numeric(&a).unwrap(), 1e-9).unwrap();
        assert!(matches!(canonicalize_linear_part(&a, &cls), Err(SpectrumError::NotCanonicalizable(_))));
    }
}
