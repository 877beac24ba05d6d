//! Hypothesis checks for integrable systems, adapted first integrals, canonical
//! coordinates, reduction of the zero-eigenvalue block, and the planar singular locus.

use num::rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{IntegrabilityError, SeriesError};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::series::{
    jacobian_rank_series, monomials_of_degree, substitute, Composer, Exponent, PolyMap, Term, TruncatedSeries,
    VectorFieldJet,
};
use crate::spectrum::{
    canonicalize_linear_part, classify_spectrum, eigenvalues_numeric, semisimplicity_check, CanonicalLinear,
    LinearPart, SpectrumClass,
};

/// A vector-field jet together with its first integrals.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrableSystem {
    pub x: VectorFieldJet,
    pub first_integrals: Vec<TruncatedSeries>,
    pub class: Option<SpectrumClass>,
}

impl IntegrableSystem {
    /// Requires `n − 1` integrals, all conserved by `X` through order `N`.
    pub fn new(x: VectorFieldJet, first_integrals: Vec<TruncatedSeries>) -> Result<Self, IntegrabilityError> {
        let sys = Self::new_unchecked(x, first_integrals)?;
        for (index, f) in sys.first_integrals.iter().enumerate() {
            if let Some(degree) = sys.x.lie_derivative(f)?.lowest_degree() {
                return Err(IntegrabilityError::NotIntegrable { index, degree });
            }
        }
        Ok(sys)
    }

    /// Shape checks only; used for probing inputs that may violate the hypotheses.
    pub fn new_unchecked(x: VectorFieldJet, first_integrals: Vec<TruncatedSeries>) -> Result<Self, IntegrabilityError> {
        let n = x.dim();
        if first_integrals.len() + 1 != n {
            return Err(IntegrabilityError::WrongIntegralCount { expected: n - 1, got: first_integrals.len() });
        }
        for f in &first_integrals {
            x.component(0).check_shape(f)?;
        }
        Ok(Self { x, first_integrals, class: None })
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn order(&self) -> u32 {
        self.x.order()
    }

    /// Exact real linear part, if it has no imaginary entries.
    pub fn real_linear_part(&self) -> Option<LinearPart> {
        let a = self.x.linear_part();
        (0..a.rows())
            .flat_map(|i| (0..a.cols()).map(move |j| (i, j)))
            .all(|(i, j)| a.get(i, j).is_real())
            .then(|| a.map(|s: &Scalar| s.re().clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrabilityCheck {
    pub integrable: bool,
    /// Lowest degree at which some `X(F_i)` is nonzero.
    pub lowest_violation: Option<u32>,
}

pub fn check_integrability(x: &VectorFieldJet, fs: &[TruncatedSeries]) -> Result<IntegrabilityCheck, SeriesError> {
    let mut lowest: Option<u32> = None;
    for f in fs {
        if let Some(d) = x.lie_derivative(f)?.lowest_degree() {
            lowest = Some(lowest.map_or(d, |l| l.min(d)));
        }
    }
    Ok(IntegrabilityCheck { integrable: lowest.is_none(), lowest_violation: lowest })
}

fn lowest_part(f: &TruncatedSeries) -> Option<(u32, TruncatedSeries)> {
    f.lowest_nonconstant_degree().map(|d| (d, f.homogeneous_part(d)))
}

/// Rank of the Jacobian of homogeneous polynomials, computed at an order high
/// enough that no minor is truncated.
fn homogeneous_rank(hs: &[(u32, TruncatedSeries)]) -> Result<usize, SeriesError> {
    let order = hs.iter().map(|(d, _)| *d).sum::<u32>() + 1;
    let lifted: Vec<TruncatedSeries> = hs.iter().map(|(_, h)| h.with_order(order)).collect();
    Ok(jacobian_rank_series(&lifted)?.rank)
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

fn power_product(series: &[TruncatedSeries], beta: &Exponent, order: u32) -> TruncatedSeries {
    let n = series[0].nvars();
    let mut acc = TruncatedSeries::one(n, order);
    for (i, s) in series.iter().enumerate() {
        for _ in 0..beta.get(i) {
            acc = &acc * &s.with_order(order);
        }
    }
    acc
}

/// Smallest weighted-homogeneous polynomial relation `P(H) = 0` among homogeneous
/// parts, found as a kernel vector of the coefficient matrix.
fn find_relation(hs: &[(u32, TruncatedSeries)], max_weight: u32) -> Option<Vec<(Exponent, Scalar)>> {
    let n = hs[0].1.nvars();
    let weights: Vec<u32> = hs.iter().map(|(d, _)| *d).collect();
    let polys: Vec<TruncatedSeries> = hs.iter().map(|(_, h)| h.clone()).collect();
    for w in 1..=max_weight {
        let unknowns = weighted_exponents(&weights, w);
        if unknowns.len() < 2 {
            continue;
        }
        let rows = monomials_of_degree(n, w);
        let mut a = Matrix::zeros(rows.len(), unknowns.len());
        for (j, beta) in unknowns.iter().enumerate() {
            let p = power_product(&polys, beta, w);
            for (e, c) in p.homogeneous_part(w).terms() {
                let i = rows.binary_search(e).expect("homogeneous monomial");
                a.set(i, j, c.clone());
            }
        }
        if let Some(v) = a.kernel().into_iter().next() {
            return Some(unknowns.into_iter().zip(v).filter(|(_, c)| !c.is_zero()).collect());
        }
    }
    None
}

/// Replaces first integrals by polynomial combinations until their lowest-degree
/// homogeneous parts have independent differentials.
pub fn adapt_integrals(fs: &[TruncatedSeries], order: u32) -> Result<Vec<TruncatedSeries>, IntegrabilityError> {
    if fs.is_empty() {
        return Ok(vec![]);
    }
    let m = fs.len();
    let mut current: Vec<TruncatedSeries> = fs
        .iter()
        .map(|f| {
            let f = f.with_order(order);
            &f - &TruncatedSeries::constant(f.nvars(), order, f.constant_term())
        })
        .collect();
    if jacobian_rank_series(&current)?.rank != m {
        return Err(IntegrabilityError::NotIndependent { order });
    }
    let max_weight = 2 * order;
    loop {
        let parts: Option<Vec<(u32, TruncatedSeries)>> = current.iter().map(lowest_part).collect();
        let parts = parts.ok_or(IntegrabilityError::NotIndependent { order })?;
        if homogeneous_rank(&parts)? == m {
            return Ok(current);
        }
        let relation = find_relation(&parts, max_weight).ok_or(IntegrabilityError::NotIndependent { order })?;
        let p = {
            let mut s = TruncatedSeries::zero(m, order);
            for (beta, c) in &relation {
                if beta.degree() <= order {
                    s.add_term(beta.clone(), c.clone());
                }
            }
            s
        };
        let replaced = substitute(&p, &current)?;
        // replace the last integral the relation involves, keeping the jets independent
        let mut done = false;
        for j in (0..m).rev() {
            if !relation.iter().any(|(beta, _)| beta.get(j) > 0) {
                continue;
            }
            let mut trial = current.clone();
            trial[j] = replaced.clone();
            if jacobian_rank_series(&trial)?.rank == m && trial[j].lowest_nonconstant_degree().is_some() {
                current = trial;
                done = true;
                break;
            }
        }
        if !done {
            return Err(IntegrabilityError::NotIndependent { order });
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub cond_i: bool,
    pub jacobian_rank: usize,
    pub witness_minor: Vec<Term>,
    pub semisimple: bool,
    /// Nonzero semisimple part with a recognized spectrum, and adapted integrals exist.
    pub cond_ii: bool,
    pub adapted: bool,
    pub cond_iii: bool,
    pub zero_block: usize,
    /// Integrals whose differentials at O are independent (used as the first `k` coordinates).
    pub cond_iii_subset: Option<Vec<usize>>,
    pub case: Option<SpectrumClass>,
    pub diagnostics: Vec<String>,
}

impl NondegeneracyReport {
    pub fn passes(&self) -> bool {
        self.cond_i && self.cond_ii && self.cond_iii
    }
}

fn k_subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::new(), &mut out);
    out
}

/// Matrix of the linear coefficients of the chosen integrals (rows) at O.
fn differential_at_origin(fs: &[TruncatedSeries], subset: &[usize]) -> Matrix<Scalar> {
    let n = fs[0].nvars();
    let mut d = Matrix::zeros(subset.len(), n);
    for (r, &i) in subset.iter().enumerate() {
        for j in 0..n {
            d.set(r, j, fs[i].coeff(&Exponent::unit(n, j)));
        }
    }
    d
}

/// Lexicographically first `k`-subset of integrals with independent differentials at O.
pub fn find_independent_differentials(fs: &[TruncatedSeries], k: usize) -> Option<Vec<usize>> {
    if k == 0 {
        return Some(vec![]);
    }
    k_subsets(fs.len(), k).into_iter().find(|s| differential_at_origin(fs, s).rank() == k)
}

pub fn check_nondegeneracy(sys: &IntegrableSystem) -> NondegeneracyReport {
    let n = sys.dim();
    let order = sys.order();
    let mut diagnostics = Vec::new();
    let (jacobian_rank, witness_minor) = match jacobian_rank_series(&sys.first_integrals) {
        Ok(r) => (r.rank, r.minor.to_terms()),
        Err(e) => {
            diagnostics.push(format!("jacobian: {e}"));
            (0, vec![])
        }
    };
    let cond_i = jacobian_rank + 1 == n;
    if !cond_i {
        diagnostics.push(format!("first integrals have Jacobian rank {jacobian_rank}, need {}", n - 1));
    }
    let linear = sys.real_linear_part();
    let semisimple = linear.as_ref().is_some_and(semisimplicity_check);
    if linear.is_none() {
        diagnostics.push("linear part has non-real entries".into());
    } else if !semisimple {
        diagnostics.push("linear part is not semisimple".into());
    }
    let case = match linear.as_ref().map(|a| eigenvalues_numeric(a).and_then(|s| classify_spectrum(&s, 1e-9))) {
        Some(Ok(c)) => Some(c),
        Some(Err(e)) => {
            diagnostics.push(format!("spectrum: {e}"));
            None
        }
        None => None,
    };
    let adapted = match adapt_integrals(&sys.first_integrals, order) {
        Ok(_) => true,
        Err(e) => {
            diagnostics.push(format!("adapted integrals: {e}"));
            false
        }
    };
    let cond_ii = semisimple && case.is_some() && adapted;
    let zero_block = case.as_ref().map_or(0, |c| c.k);
    let cond_iii_subset = find_independent_differentials(&sys.first_integrals, zero_block);
    let cond_iii = cond_iii_subset.is_some();
    if !cond_iii {
        diagnostics.push(format!("no {zero_block} integrals have independent differentials at O"));
    }
    NondegeneracyReport {
        cond_i,
        jacobian_rank,
        witness_minor,
        semisimple,
        cond_ii,
        adapted,
        cond_iii,
        zero_block,
        cond_iii_subset,
        case,
        diagnostics,
    }
}

/// System in canonical coordinates `x = T y`, time rescaled by `1/λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalSystem {
    pub x: VectorFieldJet,
    pub first_integrals: Vec<TruncatedSeries>,
    pub class: SpectrumClass,
    pub linear: CanonicalLinear,
}

pub fn canonicalize_system(sys: &IntegrableSystem, class: &SpectrumClass) -> Result<CanonicalSystem, IntegrabilityError> {
    let a = sys
        .real_linear_part()
        .ok_or_else(|| IntegrabilityError::Unsupported("linear part has non-real entries".into()))?;
    let linear = canonicalize_linear_part(&a, class)?;
    let order = sys.order();
    let to_scalar = |m: &LinearPart| m.map(|x: &BigRational| Scalar::real(x.clone()));
    let t_map = PolyMap::linear(&to_scalar(&linear.t), order)?;
    let t_inv_map = PolyMap::linear(&to_scalar(&linear.t_inv), order)?;
    let inv_lambda = Scalar::real(linear.lambda.recip());
    let x = sys.x.pushforward(&t_inv_map)?.scale(&inv_lambda);
    let mut composer = Composer::new(t_map.components())?;
    let first_integrals = sys
        .first_integrals
        .iter()
        .map(|f| composer.compose(f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CanonicalSystem { x, first_integrals, class: class.clone(), linear })
}

/// Coordinates in which the chosen integrals are the first `k` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Straightened {
    /// `y = ψ(x)`; identity linear part.
    pub psi: PolyMap,
    pub x: VectorFieldJet,
    pub first_integrals: Vec<TruncatedSeries>,
}

/// With a canonical linear part whose zero block comes first, replaces
/// `x₁..x_k` by `M⁻¹ (G₁..G_k)`, where `M` is the linear part of the chosen integrals.
pub fn straighten_zero_block(
    x: &VectorFieldJet,
    fs: &[TruncatedSeries],
    k: usize,
) -> Result<Straightened, IntegrabilityError> {
    let n = x.dim();
    let order = x.order();
    if k == 0 {
        return Ok(Straightened { psi: PolyMap::identity(n, order), x: x.clone(), first_integrals: fs.to_vec() });
    }
    let subset = find_independent_differentials(fs, k)
        .ok_or_else(|| IntegrabilityError::StraighteningFailed("differentials at O are dependent".into()))?;
    let d = differential_at_origin(fs, &subset);
    // integrals of the linear part have differentials supported on the zero block
    let mut block = Matrix::zeros(k, k);
    for r in 0..k {
        for c in 0..n {
            if c < k {
                block.set(r, c, d.get(r, c).clone());
            } else if !d.get(r, c).is_zero() {
                return Err(IntegrabilityError::StraighteningFailed(
                    "an integral's differential leaves the zero block".into(),
                ));
            }
        }
    }
    let inv = block
        .inverse()
        .ok_or_else(|| IntegrabilityError::StraighteningFailed("zero-block differentials are singular".into()))?;
    let chosen: Vec<TruncatedSeries> = subset.iter().map(|&i| fs[i].clone()).collect();
    let mut comps: Vec<TruncatedSeries> = crate::series::apply_matrix(&inv, &chosen)
        .into_iter()
        .map(|g| &g - &TruncatedSeries::constant(n, order, g.constant_term()))
        .collect();
    comps.extend((k..n).map(|i| TruncatedSeries::variable(n, order, i)));
    let psi = PolyMap::new(comps)?;
    let moved = x.pushforward(&psi)?;
    let psi_inv = psi.invert()?;
    let mut composer = Composer::new(psi_inv.components())?;
    let first_integrals = fs.iter().map(|f| composer.compose(f)).collect::<Result<Vec<_>, _>>()?;
    for i in 0..k {
        if let Some(deg) = moved.component(i).lowest_degree() {
            return Err(IntegrabilityError::StraighteningFailed(format!(
                "component {i} does not vanish after straightening (degree {deg})"
            )));
        }
    }
    Ok(Straightened { psi, x: moved, first_integrals })
}

/// `k`-parameter family of `(n−k)`-dimensional fields obtained by fixing the first
/// `k` (integral) coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ParametrizedFamily {
    pub k: usize,
    pub reduced_dim: usize,
    /// Full jet in straightened coordinates; components `0..k` vanish.
    pub jet: VectorFieldJet,
    /// Singular point `O_c` of the reduced field, as series in the parameters (order N).
    pub center: Vec<TruncatedSeries>,
}

impl ParametrizedFamily {
    /// Reduced field at `c = 0`: the restriction to `{x₁ = ⋯ = x_k = 0}`.
    pub fn at_zero(&self) -> Result<VectorFieldJet, SeriesError> {
        let n = self.jet.dim();
        let order = self.jet.order();
        let r = self.reduced_dim;
        let mut subs: Vec<TruncatedSeries> = vec![TruncatedSeries::zero(r, order); self.k];
        subs.extend((0..r).map(|i| TruncatedSeries::variable(r, order, i)));
        let mut composer = Composer::new(&subs)?;
        let comps = (self.k..n)
            .map(|j| composer.compose(self.jet.component(j)))
            .collect::<Result<Vec<_>, _>>()?;
        VectorFieldJet::new(comps)
    }

    /// First-order dependence on parameter `i`: the coefficient of `c_i` in the
    /// reduced components, as a series in the remaining variables.
    pub fn parameter_derivative(&self, i: usize) -> Result<Vec<TruncatedSeries>, SeriesError> {
        let n = self.jet.dim();
        let order = self.jet.order();
        let r = self.reduced_dim;
        let comps = (self.k..n)
            .map(|j| {
                let d = self.jet.component(j).derivative(i);
                let mut out = TruncatedSeries::zero(r, order);
                for (e, c) in d.terms() {
                    if (0..self.k).all(|p| e.get(p) == 0) {
                        let rest: Vec<u32> = (self.k..n).map(|p| e.get(p)).collect();
                        out.add_term(Exponent::new(&rest), c.clone());
                    }
                }
                out
            })
            .collect();
        Ok(comps)
    }

    /// Reduced field at float parameter values and a float point.
    pub fn evaluate(&self, c: &[f64], y: &[f64]) -> Vec<f64> {
        let mut point = c.to_vec();
        point.extend_from_slice(y);
        (self.k..self.jet.dim()).map(|j| eval_real_f64(self.jet.component(j), &point)).collect()
    }
}

/// Float value of the real part of a series at a point (canonical term order).
pub fn eval_real_f64(f: &TruncatedSeries, point: &[f64]) -> f64 {
    use num::traits::ToPrimitive;
    let mut total = 0.0;
    for (e, c) in f.terms() {
        let mut v = c.re().to_f64().unwrap_or(f64::NAN);
        for (i, p) in e.powers().enumerate() {
            v *= point[i].powi(p as i32);
        }
        total += v;
    }
    total
}

/// Solves `R(c, y) = 0` for `y = Y(c)`, degree by degree, where the `y`-linear part of
/// `R` at the origin is invertible.
fn implicit_center(jet: &VectorFieldJet, k: usize) -> Result<Vec<TruncatedSeries>, IntegrabilityError> {
    let n = jet.dim();
    let order = jet.order();
    let r = n - k;
    let a = jet.linear_part();
    let mut b = Matrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            b.set(i, j, a.get(k + i, k + j).clone());
        }
    }
    let b_inv = b.inverse().ok_or(IntegrabilityError::ImplicitSolveFailed)?;
    let mut y: Vec<TruncatedSeries> = vec![TruncatedSeries::zero(k, order); r];
    for _ in 0..order {
        let mut subs: Vec<TruncatedSeries> = (0..k).map(|i| TruncatedSeries::variable(k, order, i)).collect();
        subs.extend(y.iter().cloned());
        let mut composer = Composer::new(&subs)?;
        // R(c, y) − B y evaluated on the current guess
        let mut rest = Vec::with_capacity(r);
        for i in 0..r {
            let comp = jet.component(k + i);
            let mut lin = TruncatedSeries::zero(n, order);
            for j in 0..r {
                lin.add_term(Exponent::unit(n, k + j), a.get(k + i, k + j).clone());
            }
            rest.push(composer.compose(&(comp - &lin))?);
        }
        let next: Vec<TruncatedSeries> =
            crate::series::apply_matrix(&b_inv, &rest).into_iter().map(|s| -&s).collect();
        if next == y {
            break;
        }
        y = next;
    }
    Ok(y)
}

pub fn reduce_zero_block(jet: &VectorFieldJet, k: usize) -> Result<ParametrizedFamily, IntegrabilityError> {
    let n = jet.dim();
    if k == 0 || k >= n {
        return Err(IntegrabilityError::Unsupported(format!("zero block of size {k} in dimension {n}")));
    }
    for i in 0..k {
        if !jet.component(i).is_zero() {
            return Err(IntegrabilityError::StraighteningFailed(format!(
                "coordinate {i} is not conserved; straighten the integrals first"
            )));
        }
    }
    let center = implicit_center(jet, k)?;
    Ok(ParametrizedFamily { k, reduced_dim: n - k, jet: jet.clone(), center })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularLocus2d {
    /// `x` as a series in `y` along `S₁ = {X_x = 0}`.
    pub curve: TruncatedSeries,
    /// `X_y` restricted to the curve.
    pub second_on_curve: TruncatedSeries,
    /// `S = S₁` at jet level: the second component vanishes on the curve.
    pub s_equals_s1: bool,
}

pub fn singular_locus_2d(x: &VectorFieldJet) -> Result<SingularLocus2d, IntegrabilityError> {
    if x.dim() != 2 {
        return Err(IntegrabilityError::Unsupported("singular locus needs a planar field".into()));
    }
    let order = x.order();
    let a = x.linear_part().get(0, 0).clone();
    let a_inv = a.inv().ok_or(IntegrabilityError::ImplicitSolveFailed)?;
    let x0 = x.component(0);
    let rest = x0 - &TruncatedSeries::monomial(2, order, Exponent::unit(2, 0), a.clone());
    let y = TruncatedSeries::variable(1, order, 0);
    let mut curve = TruncatedSeries::zero(1, order);
    for _ in 0..=order {
        let subs = [curve.clone(), y.clone()];
        let next = substitute(&rest, &subs)?.scale(&(-&a_inv));
        if next == curve {
            break;
        }
        curve = next;
    }
    let subs = [curve.clone(), y];
    let second_on_curve = substitute(x.component(1), &subs)?;
    let s_equals_s1 = second_on_curve.is_zero();
    Ok(SingularLocus2d { curve, second_on_curve, s_equals_s1 })
}
