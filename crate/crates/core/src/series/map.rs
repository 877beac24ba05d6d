use super::compose::Composer;
use super::exponent::Exponent;
use super::truncated::TruncatedSeries;
use crate::error::SeriesError;
use crate::linalg::{Field, Matrix};
use crate::scalar::Scalar;

/// Polynomial coordinate change `y = φ(x)` fixing the origin, with invertible linear part.
#[derive(Clone, PartialEq, Debug)]
pub struct PolyMap {
    components: Vec<TruncatedSeries>,
}

impl PolyMap {
    pub fn new(components: Vec<TruncatedSeries>) -> Result<Self, SeriesError> {
        let map = Self::new_unchecked_inverse(components)?;
        if map.linear_part().inverse().is_none() {
            return Err(SeriesError::SingularLinearPart);
        }
        Ok(map)
    }

    /// Shape and constant-term checks only.
    fn new_unchecked_inverse(components: Vec<TruncatedSeries>) -> Result<Self, SeriesError> {
        let n = components.len();
        let first = components.first().ok_or(SeriesError::ArityMismatch { expected: 1, got: 0 })?;
        for (i, c) in components.iter().enumerate() {
            first.check_shape(c)?;
            if c.nvars() != n {
                return Err(SeriesError::ArityMismatch { expected: n, got: c.nvars() });
            }
            if !c.constant_term().is_zero() {
                return Err(SeriesError::NonzeroConstant { index: i });
            }
        }
        Ok(Self { components })
    }

    pub fn identity(n: usize, order: u32) -> Self {
        Self { components: (0..n).map(|i| TruncatedSeries::variable(n, order, i)).collect() }
    }

    /// `x ↦ M x`.
    pub fn linear(m: &Matrix<Scalar>, order: u32) -> Result<Self, SeriesError> {
        let n = m.rows();
        if !m.is_square() {
            return Err(SeriesError::ArityMismatch { expected: n, got: m.cols() });
        }
        let vars: Vec<TruncatedSeries> = (0..n).map(|i| TruncatedSeries::variable(n, order, i)).collect();
        Self::new(apply_matrix(m, &vars))
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn order(&self) -> u32 {
        self.components[0].order()
    }

    pub fn components(&self) -> &[TruncatedSeries] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &TruncatedSeries {
        &self.components[i]
    }

    pub fn linear_part(&self) -> Matrix<Scalar> {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for (i, c) in self.components.iter().enumerate() {
            for j in 0..n {
                m.set(i, j, c.coeff(&Exponent::unit(n, j)));
            }
        }
        m
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim(), self.order())
    }

    pub fn is_real(&self) -> bool {
        self.components.iter().all(TruncatedSeries::is_real)
    }

    pub fn with_order(&self, order: u32) -> Self {
        Self { components: self.components.iter().map(|c| c.with_order(order)).collect() }
    }

    pub fn map_components(&self, f: impl Fn(&TruncatedSeries) -> TruncatedSeries) -> Self {
        Self { components: self.components.iter().map(f).collect() }
    }

    /// `f ∘ self`.
    pub fn apply(&self, f: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
        Composer::new(&self.components)?.compose(f)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &PolyMap) -> Result<PolyMap, SeriesError> {
        let mut composer = Composer::new(&inner.components)?;
        let comps = self
            .components
            .iter()
            .map(|c| composer.compose(c))
            .collect::<Result<Vec<_>, _>>()?;
        PolyMap::new(comps)
    }

    /// `jac[i][j] = ∂φ_i/∂x_j` (same order; see [`TruncatedSeries::derivative`]).
    pub fn jacobian(&self) -> Vec<Vec<TruncatedSeries>> {
        self.components.iter().map(TruncatedSeries::gradient).collect()
    }

    /// Inverse map, found degree by degree: `ψ ← L⁻¹(y − H∘ψ)` where `H` is the
    /// nonlinear part. Pass `k` fixes degree `k + 1`, so each pass runs at the
    /// smallest order that still carries new information.
    pub fn invert(&self) -> Result<PolyMap, SeriesError> {
        let n = self.dim();
        let order = self.order();
        let l_inv = self.linear_part().inverse().ok_or(SeriesError::SingularLinearPart)?;
        let nonlinear: Vec<TruncatedSeries> =
            self.components.iter().map(|c| c.degree_range(2, order)).collect();
        let y = |ord: u32| -> Vec<TruncatedSeries> {
            (0..n).map(|i| TruncatedSeries::variable(n, ord, i)).collect()
        };
        let mut psi = apply_matrix(&l_inv, &y(order.min(1)));
        for working in 2..=order {
            let current: Vec<TruncatedSeries> = psi.iter().map(|c| c.with_order(working)).collect();
            let mut composer = Composer::new(&current)?;
            let rhs = y(working)
                .iter()
                .zip(&nonlinear)
                .map(|(yi, h)| Ok(yi - &composer.compose(&h.with_order(working))?))
                .collect::<Result<Vec<_>, SeriesError>>()?;
            psi = apply_matrix(&l_inv, &rhs);
        }
        let psi = psi.into_iter().map(|c| c.with_order(order)).collect();
        PolyMap::new(psi)
    }
}

/// `M · v` for a column of series.
pub fn apply_matrix(m: &Matrix<Scalar>, v: &[TruncatedSeries]) -> Vec<TruncatedSeries> {
    assert_eq!(m.cols(), v.len());
    let (nvars, order) = (v[0].nvars(), v[0].order());
    (0..m.rows())
        .map(|i| {
            let mut acc = TruncatedSeries::zero(nvars, order);
            for (j, vj) in v.iter().enumerate() {
                let c = m.get(i, j);
                if Field::is_zero(c) {
                    continue;
                }
                for (e, x) in vj.terms() {
                    acc.add_term(e.clone(), c * x);
                }
            }
            acc
        })
        .collect()
}

/// `f ∘ φ` truncated at the order of `φ`.
pub fn compose_series(f: &TruncatedSeries, phi: &PolyMap) -> Result<TruncatedSeries, SeriesError> {
    phi.apply(f)
}

/// Inverse of `φ` modulo terms of degree above its order.
pub fn invert_map(phi: &PolyMap) -> Result<PolyMap, SeriesError> {
    phi.invert()
}
