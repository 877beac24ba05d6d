//! Degree-by-degree geometric linearization `Φ_* X = F · X⁽¹⁾`.
//!
//! The work happens in complex diagonal coordinates `z = C x` (see
//! [`complex_frame`]), where the linear part is `μ Σ m_j z_j ∂_j` with `μ = i` for
//! elliptic classes and `μ = 1` otherwise. Nonresonant terms are removed by
//! time-one flows of homogeneous generators; resonant terms must assemble into
//! `F_{d−1} · X⁽¹⁾`, and whatever does not is reported as an obstruction.

use num::rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{NormalizeError, SeriesError};
use crate::integrability::{
    canonicalize_system, check_integrability, check_nondegeneracy, straighten_zero_block, IntegrableSystem,
    NondegeneracyReport,
};
use crate::invariants::{
    canonical_linear_field, complex_frame, complex_frame_inverse, express_in_invariants, hilbert_basis,
    invariant_generators, ResonanceProblem, DEFAULT_DEGREE_CAP,
};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::series::{apply_matrix, Composer, Exponent, PolyMap, Term, TruncatedSeries, VectorFieldJet};
use crate::spectrum::{eigenvalues_numeric, classify_spectrum, SpectrumClass};

/// Eigenvalue of `ad_{X⁽¹⁾}` on `x^α ∂_j`: `⟨α, m⟩ − m_j`.
pub fn homological_eigenvalue(alpha: &Exponent, j: usize, m: &[i64]) -> i64 {
    alpha.dot(m) - m[j]
}

/// Diagonal linear part `μ Σ m_j z_j ∂_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalLinear {
    pub m: Vec<i64>,
    pub mu: Scalar,
}

impl DiagonalLinear {
    pub fn from_class(cls: &SpectrumClass) -> Self {
        Self { m: cls.m.clone(), mu: if cls.is_elliptic() { Scalar::i() } else { Scalar::one() } }
    }

    pub fn field(&self, order: u32) -> VectorFieldJet {
        let n = self.m.len();
        let mut a = Matrix::zeros(n, n);
        for (j, &mj) in self.m.iter().enumerate() {
            a.set(j, j, self.mu.mul_int(mj));
        }
        VectorFieldJet::from_linear(&a, order)
    }
}

/// One normalization step at degree `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PdStep {
    /// Homogeneous generator of degree `d`; the coordinate change is its time-one flow,
    /// whose degree-`d` part is `x + generator`.
    pub generator: VectorFieldJet,
    /// Resonant degree-`d` terms of the input, untouched.
    pub resonant: VectorFieldJet,
}

/// Splits the degree-`d` part of `current` into removable and resonant terms.
/// Each nonresonant coefficient `c` on `z^α ∂_j` yields the generator coefficient
/// `−c / (μ e)` with `e` the homological eigenvalue.
pub fn pd_step(current: &VectorFieldJet, d: u32, lin: &DiagonalLinear) -> PdStep {
    let n = current.dim();
    let order = current.order();
    let mut gen = vec![TruncatedSeries::zero(n, order); n];
    let mut res = vec![TruncatedSeries::zero(n, order); n];
    for j in 0..n {
        for (alpha, c) in current.component(j).homogeneous_part(d).terms() {
            let e = homological_eigenvalue(alpha, j, &lin.m);
            if e == 0 {
                res[j].add_term(alpha.clone(), c.clone());
            } else {
                assert!(e.abs() >= 1);
                let denom = lin.mu.mul_int(e);
                gen[j].add_term(alpha.clone(), -&(c / &denom));
            }
        }
    }
    PdStep {
        generator: VectorFieldJet::new(gen).expect("homogeneous generator"),
        resonant: VectorFieldJet::new(res).expect("homogeneous resonant part"),
    }
}

/// `F_{d−1}` with `F_{d−1} · X⁽¹⁾` matching the resonant part on the first axis with
/// `m_j ≠ 0`, and the leftover `R − F_{d−1} · X⁽¹⁾`.
pub fn factor_extract(resonant: &VectorFieldJet, lin: &DiagonalLinear) -> (TruncatedSeries, VectorFieldJet) {
    let n = resonant.dim();
    let order = resonant.order();
    let mut f = TruncatedSeries::zero(n, order);
    let Some(j0) = lin.m.iter().position(|&x| x != 0) else {
        return (f, resonant.clone());
    };
    let denom = lin.mu.mul_int(lin.m[j0]);
    for (alpha, c) in resonant.component(j0).terms() {
        if let Some(beta) = alpha.drop_one(j0) {
            f.add_term(beta, c / &denom);
        }
    }
    let assembled = lin.field(order).scaled_by(&f).expect("same shape");
    let leftover = resonant.sub(&assembled).expect("same shape");
    (f, leftover)
}

/// Where normalization stopped, with the terms that are not of the form `F · X⁽¹⁾`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstruction {
    pub degree: u32,
    /// Leftover terms per component, in the coordinates of the normalization.
    pub leftover: Vec<Vec<Term>>,
}

/// Normalization of a jet whose linear part is already canonical.
#[derive(Clone, Debug, PartialEq)]
pub struct JetNormalForm {
    /// Real coordinate change with identity linear part.
    pub phi: PolyMap,
    pub f: TruncatedSeries,
    /// Last degree brought to normal form.
    pub reached: u32,
    pub obstruction: Option<Obstruction>,
}

fn to_real_map(cls: &SpectrumClass, phi_c: &[TruncatedSeries]) -> Result<Vec<TruncatedSeries>, SeriesError> {
    let n = cls.dim();
    let order = phi_c[0].order();
    let vars: Vec<TruncatedSeries> = (0..n).map(|i| TruncatedSeries::variable(n, order, i)).collect();
    let z_of_x = apply_matrix(&complex_frame(cls), &vars);
    let mut composer = Composer::new(&z_of_x)?;
    let composed = phi_c.iter().map(|p| composer.compose(p)).collect::<Result<Vec<_>, _>>()?;
    Ok(apply_matrix(&complex_frame_inverse(cls), &composed))
}

/// Normalizes a jet whose linear part equals the canonical matrix of `cls`
/// (zero-block components, if any, already vanishing).
pub fn normalize_jet(x: &VectorFieldJet, cls: &SpectrumClass) -> Result<JetNormalForm, NormalizeError> {
    let n = x.dim();
    let order = x.order();
    let canonical = cls.canonical_matrix().map(|q: &BigRational| Scalar::real(q.clone()));
    if x.linear_part() != &canonical {
        return Err(NormalizeError::NotCanonical);
    }
    let lin = DiagonalLinear::from_class(cls);
    let c = complex_frame(cls);
    let c_inv = complex_frame_inverse(cls);
    let to_complex = PolyMap::linear(&c, order)?;
    let mut y = x.pushforward(&to_complex)?;
    let mut f_c = TruncatedSeries::one(n, order);
    let mut generators: Vec<VectorFieldJet> = Vec::new();
    let mut obstruction = None;
    let mut reached = 1;
    for d in 2..=order {
        let step = pd_step(&y, d, &lin);
        if !step.generator.is_zero() {
            y = y.flow_pushforward(&step.generator)?;
            generators.push(step.generator);
        }
        let resonant = y.homogeneous_part(d);
        let (inc, leftover) = factor_extract(&resonant, &lin);
        if !leftover.is_zero() {
            // back to real coordinates for reporting
            let real = leftover.pushforward(&PolyMap::linear(&c_inv, order)?)?;
            obstruction = Some(Obstruction {
                degree: d,
                leftover: real.components().iter().map(TruncatedSeries::to_terms).collect(),
            });
            break;
        }
        f_c = &f_c + &inc;
        reached = d;
    }
    // Φ_c = exp(P_N) ∘ ⋯ ∘ exp(P_2), so z_j ∘ Φ_c applies the last flow first
    let mut phi_c: Vec<TruncatedSeries> = (0..n).map(|j| TruncatedSeries::variable(n, order, j)).collect();
    for gen in generators.iter().rev() {
        phi_c = phi_c.iter().map(|h| gen.exp_derivation(h)).collect::<Result<Vec<_>, _>>()?;
    }
    let phi_real = to_real_map(cls, &phi_c)?;
    let f_real = PolyMap::linear(&c, order)?.apply(&f_c)?;
    if !f_real.is_real() || phi_real.iter().any(|p| !p.is_real()) {
        return Err(NormalizeError::HypothesisViolation(
            "normal form is not real; the spectrum class does not match the jet".into(),
        ));
    }
    let phi = PolyMap::new(phi_real.iter().map(TruncatedSeries::real_part).collect())?;
    Ok(JetNormalForm { phi, f: f_real.real_part(), reached, obstruction })
}

/// Geometric normal form of an input system: `pushforward(X, phi) = F · x1` through order `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricNormalForm {
    /// Full coordinate change from the input coordinates (linear part `T⁻¹`).
    pub phi: PolyMap,
    /// Normalizing change in canonical coordinates (identity linear part).
    pub canonical_phi: PolyMap,
    pub f: TruncatedSeries,
    /// Linear part in the new coordinates: `λ · C`.
    pub x1: VectorFieldJet,
    pub class: SpectrumClass,
    pub lambda: BigRational,
    pub t: Matrix<BigRational>,
    pub residual_order: u32,
    pub obstruction: Option<Obstruction>,
}

fn assemble(
    sys: &IntegrableSystem,
    class: &SpectrumClass,
    order: u32,
) -> Result<GeometricNormalForm, NormalizeError> {
    let sys = IntegrableSystem {
        x: sys.x.with_order(order),
        first_integrals: sys.first_integrals.iter().map(|f| f.with_order(order)).collect(),
        class: sys.class.clone(),
    };
    let canon = canonicalize_system(&sys, class)?;
    let straight = straighten_zero_block(&canon.x, &canon.first_integrals, class.k)?;
    let jet = normalize_jet(&straight.x, class)?;
    let canonical_phi = jet.phi.compose(&straight.psi)?;
    let to_scalar = |m: &Matrix<BigRational>| m.map(|q: &BigRational| Scalar::real(q.clone()));
    let t_inv = PolyMap::linear(&to_scalar(&canon.linear.t_inv), order)?;
    let phi = canonical_phi.compose(&t_inv)?;
    let lambda = canon.linear.lambda.clone();
    let x1 = canonical_linear_field(class, order).scale(&Scalar::real(lambda.clone()));
    Ok(GeometricNormalForm {
        phi,
        canonical_phi,
        f: jet.f,
        x1,
        class: class.clone(),
        lambda,
        t: canon.linear.t,
        residual_order: jet.reached,
        obstruction: jet.obstruction,
    })
}

/// Checks the hypotheses, then normalizes through order `order`.
pub fn geometric_normalize(sys: &IntegrableSystem, order: u32) -> Result<GeometricNormalForm, NormalizeError> {
    let order = order.min(sys.order());
    let integrability = check_integrability(&sys.x, &sys.first_integrals)?;
    if let Some(d) = integrability.lowest_violation {
        return Err(NormalizeError::HypothesisViolation(format!(
            "first integrals are not conserved (violation at degree {d})"
        )));
    }
    let report = check_nondegeneracy(sys);
    let class = hypotheses_class(&report)?;
    let nf = assemble(sys, &class, order)?;
    if let Some(ob) = &nf.obstruction {
        return Err(NormalizeError::ObstructionNonzero { degree: ob.degree });
    }
    Ok(nf)
}

fn hypotheses_class(report: &NondegeneracyReport) -> Result<SpectrumClass, NormalizeError> {
    if !report.passes() {
        return Err(NormalizeError::HypothesisViolation(report.diagnostics.join("; ")));
    }
    report.case.clone().ok_or_else(|| NormalizeError::HypothesisViolation("spectrum not classified".into()))
}

/// Runs the normalizer without hypothesis checks, so that an obstruction can be
/// located on inputs that fail them. Needs a classifiable semisimple linear part.
pub fn normalize_unchecked(sys: &IntegrableSystem, order: u32) -> Result<GeometricNormalForm, NormalizeError> {
    let order = order.min(sys.order());
    let a = sys
        .real_linear_part()
        .ok_or_else(|| NormalizeError::HypothesisViolation("linear part has non-real entries".into()))?;
    if !crate::spectrum::semisimplicity_check(&a) {
        return Err(NormalizeError::HypothesisViolation("linear part is not semisimple".into()));
    }
    let class = classify_spectrum(&eigenvalues_numeric(&a)?, 1e-9)?;
    assemble(sys, &class, order)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormCheck {
    pub residual: VectorFieldJet,
    pub f_at_origin_is_one: bool,
    pub f_is_invariant: bool,
}

impl NormalFormCheck {
    pub fn accepted(&self) -> bool {
        self.residual.is_zero() && self.f_at_origin_is_one && self.f_is_invariant
    }
}

/// Recomputes `pushforward(X, Φ) − F · X⁽¹⁾`, `F(O)` and `X⁽¹⁾(F)` from scratch.
pub fn verify_normal_form(sys: &IntegrableSystem, nf: &GeometricNormalForm) -> Result<NormalFormCheck, NormalizeError> {
    let order = nf.phi.order();
    let pushed = sys.x.with_order(order).pushforward(&nf.phi)?;
    let target = nf.x1.with_order(order).scaled_by(&nf.f.with_order(order))?;
    let residual = pushed.sub(&target)?.degree_range(1, nf.residual_order);
    let f_at_origin_is_one = nf.f.constant_term().is_one();
    let f_is_invariant = nf.x1.lie_derivative(&nf.f)?.is_zero();
    Ok(NormalFormCheck { residual, f_at_origin_is_one, f_is_invariant })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportedIntegral {
    /// `F_i ∘ Φ⁻¹`.
    pub series: TruncatedSeries,
    /// `F_i ∘ Φ⁻¹` written in the real invariant generators, when available.
    pub in_generators: Option<TruncatedSeries>,
}

/// Moves the first integrals into the normal-form coordinates and checks that
/// `F · X⁽¹⁾` annihilates them.
pub fn first_integral_transport(
    sys: &IntegrableSystem,
    nf: &GeometricNormalForm,
) -> Result<Vec<TransportedIntegral>, NormalizeError> {
    let order = nf.phi.order();
    let psi = nf.phi.invert()?;
    let field = nf.x1.scaled_by(&nf.f)?;
    let gens = hilbert_basis(&ResonanceProblem { m: nf.class.m.clone() }, DEFAULT_DEGREE_CAP)
        .ok()
        .map(|hb| invariant_generators(&nf.class, &hb, order));
    let mut composer = Composer::new(psi.components())?;
    let mut out = Vec::with_capacity(sys.first_integrals.len());
    for (index, f) in sys.first_integrals.iter().enumerate() {
        let series = composer.compose(&f.with_order(order))?;
        if let Some(degree) = field.lie_derivative(&series)?.degree_range(0, nf.residual_order).lowest_degree() {
            return Err(NormalizeError::TransportAnnihilationFailed { index, degree });
        }
        let in_generators = gens.as_ref().and_then(|g| express_in_invariants(&series.degree_range(0, nf.residual_order).with_order(order), g).ok());
        out.push(TransportedIntegral { series, in_generators });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectrumCase;

    fn s(n: usize, order: u32, t: &[(&[u32], i64)]) -> TruncatedSeries {
        TruncatedSeries::from_int_terms(n, order, t)
    }

    fn field(n: usize, order: u32, comps: &[&[(&[u32], i64)]]) -> VectorFieldJet {
        VectorFieldJet::new(comps.iter().map(|c| s(n, order, c)).collect()).unwrap()
    }

    fn saddle_class() -> SpectrumClass {
        SpectrumClass { case: SpectrumCase::StrongHyperbolic, k: 0, m: vec![1, -1], lambda: 1.0 }
    }

    #[test]
    fn homological_eigenvalue_examples() {
        assert_eq!(homological_eigenvalue(&Exponent::new(&[2, 1]), 0, &[1, -1]), 0);
        assert_eq!(homological_eigenvalue(&Exponent::new(&[0, 2]), 0, &[1, -1]), -3);
        assert_eq!(homological_eigenvalue(&Exponent::new(&[1, 1, 1]), 2, &[1, 1, -2]), 2);
    }

    #[test]
    fn pd_step_examples() {
        let lin = DiagonalLinear::from_class(&saddle_class());
        let linear = field(2, 4, &[&[(&[1, 0], 1)], &[(&[0, 1], -1)]]);
        for d in 2..=4 {
            let step = pd_step(&linear, d, &lin);
            assert!(step.generator.is_zero() && step.resonant.is_zero());
        }

        let x = field(2, 3, &[&[(&[1, 0], 1), (&[0, 2], 1)], &[(&[0, 1], -1)]]);
        let step = pd_step(&x, 2, &lin);
        assert_eq!(step.generator.component(0).coeff_of(&[0, 2]), Scalar::ratio(1, 3));
        assert!(step.resonant.is_zero());
        let shear = PolyMap::new(vec![
            &s(2, 3, &[(&[1, 0], 1)]) + step.generator.component(0),
            TruncatedSeries::variable(2, 3, 1),
        ])
        .unwrap();
        assert_eq!(x.pushforward(&shear).unwrap(), linear.with_order(3));

        let x = field(2, 4, &[&[(&[1, 0], 1), (&[2, 1], 1)], &[(&[0, 1], -1)]]);
        let step = pd_step(&x, 3, &lin);
        assert!(step.generator.is_zero());
        assert_eq!(step.resonant, field(2, 4, &[&[(&[2, 1], 1)], &[]]));
    }

    #[test]
    fn factor_extract_examples() {
        let lin = DiagonalLinear::from_class(&saddle_class());
        let r = field(2, 4, &[&[(&[2, 1], 1)], &[(&[1, 2], -1)]]);
        let (f, left) = factor_extract(&r, &lin);
        assert_eq!(f, s(2, 4, &[(&[1, 1], 1)]));
        assert!(left.is_zero());

        let r = field(2, 4, &[&[(&[2, 1], 1)], &[(&[1, 2], 2)]]);
        let (_, left) = factor_extract(&r, &lin);
        assert_eq!(left, field(2, 4, &[&[], &[(&[1, 2], 3)]]));
    }

    fn saddle_system(x: VectorFieldJet) -> IntegrableSystem {
        let order = x.order();
        IntegrableSystem::new_unchecked(x, vec![s(2, order, &[(&[1, 1], 1)])]).unwrap()
    }

    #[test]
    fn linear_field_is_its_own_normal_form() {
        let sys = saddle_system(field(2, 5, &[&[(&[1, 0], 1)], &[(&[0, 1], -1)]]));
        let nf = geometric_normalize(&sys, 5).unwrap();
        assert!(nf.phi.is_identity());
        assert_eq!(nf.f, TruncatedSeries::one(2, 5));
    }

    #[test]
    fn scaled_saddle_round_trip() {
        // (1 + xy)(x∂x − y∂y) pushed forward by a quadratic shear
        let x0 = field(2, 6, &[&[(&[1, 0], 1), (&[2, 1], 1)], &[(&[0, 1], -1), (&[1, 2], -1)]]);
        let psi = PolyMap::new(vec![s(2, 6, &[(&[1, 0], 1), (&[0, 2], 1)]), s(2, 6, &[(&[0, 1], 1), (&[1, 1], 2)])]).unwrap();
        let x = x0.pushforward(&psi).unwrap();
        let integral = psi.invert().unwrap().apply(&s(2, 6, &[(&[1, 1], 1)])).unwrap();
        let sys = IntegrableSystem::new(x, vec![integral]).unwrap();
        let nf = geometric_normalize(&sys, 6).unwrap();
        let check = verify_normal_form(&sys, &nf).unwrap();
        assert!(check.accepted(), "{:?}", check.residual);
        let moved = first_integral_transport(&sys, &nf).unwrap();
        assert!(moved[0].in_generators.is_some());
    }

    #[test]
    fn tampered_factor_is_detected() {
        let x0 = field(2, 6, &[&[(&[1, 0], 1), (&[2, 1], 1)], &[(&[0, 1], -1), (&[1, 2], -1)]]);
        let sys = saddle_system(x0);
        let mut nf = geometric_normalize(&sys, 6).unwrap();
        nf.f = &nf.f + &s(2, 6, &[(&[2, 2], 1)]);
        let check = verify_normal_form(&sys, &nf).unwrap();
        assert!(!check.accepted());
        assert_eq!(check.residual.lowest_degree(), Some(5));
    }

    #[test]
    fn asymmetric_resonant_terms_obstruct() {
        let x = field(2, 5, &[&[(&[1, 0], 1), (&[2, 1], 1)], &[(&[0, 1], -1), (&[1, 2], 2)]]);
        let nf = normalize_unchecked(&saddle_system(x.clone()), 5).unwrap();
        assert_eq!(nf.obstruction.as_ref().map(|o| o.degree), Some(3));
        assert!(matches!(geometric_normalize(&saddle_system(x), 5), Err(NormalizeError::HypothesisViolation(_))));
    }

    #[test]
    fn elliptic_normal_form_is_real() {
        // (1 + x² + y²)(−y∂x + x∂y) in sheared coordinates
        let x0 = field(2, 5, &[&[(&[0, 1], -1), (&[2, 1], -1), (&[0, 3], -1)], &[(&[1, 0], 1), (&[3, 0], 1), (&[1, 2], 1)]]);
        let psi = PolyMap::new(vec![s(2, 5, &[(&[1, 0], 1), (&[0, 2], 1)]), s(2, 5, &[(&[0, 1], 1), (&[1, 1], 1)])]).unwrap();
        let x = x0.pushforward(&psi).unwrap();
        let cls = SpectrumClass { case: SpectrumCase::StrongElliptic, k: 0, m: vec![1, -1], lambda: 1.0 };
        let jet = normalize_jet(&x, &cls).unwrap();
        assert!(jet.obstruction.is_none());
        assert!(jet.phi.is_real() && jet.f.is_real());
        let pushed = x.pushforward(&jet.phi).unwrap();
        let target = canonical_linear_field(&cls, 5).scaled_by(&jet.f).unwrap();
        assert_eq!(pushed, target);
    }
}
