//! Resonance monoid, its Hilbert basis, and monomial generators of the invariant
//! ring of the linear part.

use std::collections::{BTreeSet, HashMap};

use num::rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::InvariantError;
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::series::{apply_matrix, monomials_of_degree, Composer, Exponent, TruncatedSeries, VectorFieldJet};
use crate::spectrum::SpectrumClass;

pub const DEFAULT_DEGREE_CAP: u32 = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceProblem {
    pub m: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertBasis {
    pub generators: Vec<Exponent>,
}

/// Completion over the single relation `⟨a, m⟩ = 0`: grow vectors from the unit
/// vectors, only ever adding a coordinate whose weight moves `⟨a, m⟩` toward zero,
/// and drop candidates that dominate a solution already found.
pub fn hilbert_basis(p: &ResonanceProblem, degree_cap: u32) -> Result<HilbertBasis, InvariantError> {
    let n = p.m.len();
    if p.m.iter().all(|&x| x == 0) {
        return Err(InvariantError::ZeroResonance);
    }
    let mut found: Vec<Exponent> = Vec::new();
    let mut frontier: BTreeSet<Exponent> = (0..n).map(|i| Exponent::unit(n, i)).collect();
    let mut degree = 1;
    while !frontier.is_empty() {
        if degree > degree_cap {
            return Err(InvariantError::DegreeCapExceeded { cap: degree_cap });
        }
        let mut next = BTreeSet::new();
        let (solutions, open): (Vec<_>, Vec<_>) = frontier.into_iter().partition(|a| a.dot(&p.m) == 0);
        found.extend(solutions);
        for a in open {
            let s = a.dot(&p.m);
            for (i, &mi) in p.m.iter().enumerate() {
                if s.signum() * mi.signum() >= 0 {
                    continue;
                }
                let b = a.bump(i);
                if !found.iter().any(|f| f.divides(&b)) {
                    next.insert(b);
                }
            }
        }
        frontier = next;
        degree += 1;
    }
    found.sort();
    Ok(HilbertBasis { generators: found })
}

/// `z = C x`: identity on real directions; each elliptic pair `(x_p, x_{p+1})`
/// becomes `z_p = x_p + i x_{p+1}`, `z_{p+1} = x_p − i x_{p+1}`.
pub fn complex_frame(cls: &SpectrumClass) -> Matrix<Scalar> {
    let n = cls.dim();
    let mut c = Matrix::identity(n);
    if cls.is_elliptic() {
        let mut p = cls.k;
        while p + 1 < n {
            c.set(p, p + 1, Scalar::i());
            c.set(p + 1, p, Scalar::one());
            c.set(p + 1, p + 1, -Scalar::i());
            p += 2;
        }
    }
    c
}

/// Inverse of [`complex_frame`].
pub fn complex_frame_inverse(cls: &SpectrumClass) -> Matrix<Scalar> {
    complex_frame(cls).inverse().expect("complex frame is invertible")
}

/// Index permutation `σ` induced by complex conjugation on the diagonal coordinates.
pub fn conjugation_permutation(cls: &SpectrumClass) -> Vec<usize> {
    let n = cls.dim();
    let mut perm: Vec<usize> = (0..n).collect();
    if cls.is_elliptic() {
        let mut p = cls.k;
        while p + 1 < n {
            perm.swap(p, p + 1);
            p += 2;
        }
    }
    perm
}

/// The canonical real linear field `X⁽¹⁾` of a class, at order `order`.
pub fn canonical_linear_field(cls: &SpectrumClass, order: u32) -> VectorFieldJet {
    VectorFieldJet::from_linear(&cls.canonical_matrix().map(|x: &BigRational| Scalar::real(x.clone())), order)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantGenerators {
    pub class: SpectrumClass,
    /// Exponents in the diagonal (complexified) coordinates.
    pub monomials: Vec<Exponent>,
    /// Real homogeneous generators in the canonical real coordinates.
    pub real_forms: Vec<TruncatedSeries>,
}

/// Monomials in the real canonical coordinates for `z^α`.
pub fn complex_monomial_in_real(cls: &SpectrumClass, alpha: &Exponent, order: u32) -> TruncatedSeries {
    let n = cls.dim();
    let vars: Vec<TruncatedSeries> = (0..n).map(|i| TruncatedSeries::variable(n, order, i)).collect();
    let z = apply_matrix(&complex_frame(cls), &vars);
    let mono = TruncatedSeries::monomial(n, order, alpha.clone(), Scalar::one());
    Composer::new(&z).expect("linear substitution").compose(&mono).expect("arity matches")
}

pub fn invariant_generators(cls: &SpectrumClass, hb: &HilbertBasis, order: u32) -> InvariantGenerators {
    let sigma = conjugation_permutation(cls);
    let mut real_forms = Vec::new();
    let mut skip: BTreeSet<Exponent> = BTreeSet::new();
    for alpha in &hb.generators {
        if skip.contains(alpha) {
            continue;
        }
        let p = complex_monomial_in_real(cls, alpha, order);
        if p.is_real() {
            real_forms.push(p);
        } else {
            real_forms.push(p.real_part());
            real_forms.push(p.imag_part());
            skip.insert(alpha.permuted(&sigma));
        }
    }
    InvariantGenerators { class: cls.clone(), monomials: hb.generators.clone(), real_forms }
}

fn weighted_exponents(weights: &[u32], d: u32) -> Vec<Exponent> {
    fn rec(i: usize, left: u32, w: &[u32], cur: &mut Vec<u32>, out: &mut Vec<Exponent>) {
        if i == w.len() {
            if left == 0 {
                out.push(Exponent::new(cur));
            }
            return;
        }
        for p in (0..=left / w[i]).rev() {
            cur.push(p);
            rec(i + 1, left - p * w[i], w, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, weights, &mut Vec::new(), &mut out);
    out
}

/// Writes an invariant series as `f̂(Q₁, …, Q_m)` with the real generators `Q`.
/// Degree by degree, the coefficients of `f̂` solve an exact linear system; free
/// unknowns are set to zero, which picks the reduced-echelon solution.
pub fn express_in_invariants(f: &TruncatedSeries, gens: &InvariantGenerators) -> Result<TruncatedSeries, InvariantError> {
    let n = f.nvars();
    let order = f.order();
    let x1 = canonical_linear_field(&gens.class, order);
    let drift = x1.lie_derivative(f)?;
    if let Some(d) = drift.lowest_degree() {
        return Err(InvariantError::NotInvariant { degree: d });
    }
    let q: Vec<TruncatedSeries> = gens.real_forms.iter().map(|g| g.with_order(order)).collect();
    let mcount = q.len();
    let weights: Vec<u32> = q.iter().map(|g| g.lowest_degree().unwrap_or(1).max(1)).collect();
    let mut out = TruncatedSeries::zero(mcount.max(1), order);
    if mcount == 0 {
        return if f.degree_range(1, order).is_zero() {
            Ok(TruncatedSeries::constant(1, order, f.constant_term()))
        } else {
            Err(InvariantError::NoRepresentation { degree: f.lowest_nonconstant_degree().unwrap_or(1) })
        };
    }
    let mut powers: HashMap<Exponent, TruncatedSeries> = HashMap::new();
    let mut power = |beta: &Exponent| -> TruncatedSeries {
        fn get(beta: &Exponent, q: &[TruncatedSeries], memo: &mut HashMap<Exponent, TruncatedSeries>) -> TruncatedSeries {
            if let Some(p) = memo.get(beta) {
                return p.clone();
            }
            let v = match beta.last_nonzero() {
                None => TruncatedSeries::one(q[0].nvars(), q[0].order()),
                Some(i) => &get(&beta.drop_one(i).unwrap(), q, memo) * &q[i],
            };
            memo.insert(beta.clone(), v.clone());
            v
        }
        get(beta, &q, &mut powers)
    };
    out.add_term(Exponent::zero(mcount), f.constant_term());
    for d in 1..=order {
        let target = f.homogeneous_part(d);
        let unknowns = weighted_exponents(&weights, d);
        if target.is_zero() {
            continue;
        }
        let rows = monomials_of_degree(n, d);
        let columns: Vec<TruncatedSeries> = unknowns.iter().map(|b| power(b).homogeneous_part(d)).collect();
        let mut a = Matrix::zeros(rows.len(), columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (e, c) in col.terms() {
                let i = rows.binary_search(e).expect("homogeneous degree-d monomial");
                a.set(i, j, c.clone());
            }
        }
        let rhs: Vec<Scalar> = rows.iter().map(|e| target.coeff(e)).collect();
        let sol = a.solve(&rhs).ok_or(InvariantError::NoRepresentation { degree: d })?;
        for (beta, c) in unknowns.into_iter().zip(sol) {
            if beta.degree() <= order {
                out.add_term(beta, c);
            }
        }
    }
    Ok(out)
}
