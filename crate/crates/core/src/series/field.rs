use super::compose::Composer;
use super::exponent::Exponent;
use super::map::{apply_matrix, PolyMap};
use super::truncated::TruncatedSeries;
use crate::error::SeriesError;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Jet of a vector field vanishing at the origin: `Σ X_j ∂/∂x_j`.
///
/// The degree-1 block is kept alongside the components as `linear_part`
/// (`linear_part[i][j]` is the coefficient of `x_j` in `X_i`).
#[derive(Clone, PartialEq, Debug)]
pub struct VectorFieldJet {
    components: Vec<TruncatedSeries>,
    linear_part: Matrix<Scalar>,
}

impl VectorFieldJet {
    pub fn new(components: Vec<TruncatedSeries>) -> Result<Self, SeriesError> {
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
        let mut linear_part = Matrix::zeros(n, n);
        for (i, c) in components.iter().enumerate() {
            for j in 0..n {
                linear_part.set(i, j, c.coeff(&Exponent::unit(n, j)));
            }
        }
        Ok(Self { components, linear_part })
    }

    /// The linear field `x ↦ A x`.
    pub fn from_linear(a: &Matrix<Scalar>, order: u32) -> Self {
        let n = a.rows();
        assert!(a.is_square(), "linear part must be square");
        let vars: Vec<TruncatedSeries> = (0..n).map(|i| TruncatedSeries::variable(n, order, i)).collect();
        Self::new(apply_matrix(a, &vars)).expect("linear field is well formed")
    }

    pub fn zero(n: usize, order: u32) -> Self {
        Self::new(vec![TruncatedSeries::zero(n, order); n]).expect("zero field")
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

    pub fn into_components(self) -> Vec<TruncatedSeries> {
        self.components
    }

    pub fn linear_part(&self) -> &Matrix<Scalar> {
        &self.linear_part
    }

    pub fn linear_field(&self) -> Self {
        Self::from_linear(&self.linear_part, self.order())
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(TruncatedSeries::is_zero)
    }

    pub fn is_real(&self) -> bool {
        self.components.iter().all(TruncatedSeries::is_real)
    }

    fn map(&self, f: impl Fn(&TruncatedSeries) -> TruncatedSeries) -> Self {
        Self::new(self.components.iter().map(f).collect()).expect("componentwise map keeps shape")
    }

    pub fn homogeneous_part(&self, d: u32) -> Self {
        self.map(|c| c.homogeneous_part(d))
    }

    pub fn degree_range(&self, lo: u32, hi: u32) -> Self {
        self.map(|c| c.degree_range(lo.max(1), hi))
    }

    pub fn with_order(&self, order: u32) -> Self {
        self.map(|c| c.with_order(order))
    }

    pub fn real_part(&self) -> Self {
        self.map(TruncatedSeries::real_part)
    }

    pub fn conj(&self) -> Self {
        self.map(TruncatedSeries::conj)
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        self.map(|c| c.scale(s))
    }

    /// Lowest degree with a nonzero coefficient in any component.
    pub fn lowest_degree(&self) -> Option<u32> {
        self.components.iter().filter_map(TruncatedSeries::lowest_degree).min()
    }

    fn check_shape(&self, other: &Self) -> Result<(), SeriesError> {
        self.components[0].check_shape(&other.components[0])?;
        if self.dim() != other.dim() {
            return Err(SeriesError::ArityMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_shape(other)?;
        Self::new(self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_shape(other)?;
        Self::new(self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect())
    }

    /// `F · X` for a scalar series `F`.
    pub fn scaled_by(&self, f: &TruncatedSeries) -> Result<Self, SeriesError> {
        self.components[0].check_shape(f)?;
        Self::new(self.components.iter().map(|c| f * c).collect())
    }

    /// `X(f) = Σ X_j ∂f/∂x_j`. Because `X` vanishes at the origin, the result is exact
    /// through the full order `N` (degree `d` only uses `f` up to degree `d`).
    pub fn lie_derivative(&self, f: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
        self.components[0].check_shape(f)?;
        if f.nvars() != self.dim() {
            return Err(SeriesError::ArityMismatch { expected: self.dim(), got: f.nvars() });
        }
        let mut out = TruncatedSeries::zero(f.nvars(), f.order());
        for (j, xj) in self.components.iter().enumerate() {
            let df = f.derivative(j);
            if df.is_zero() || xj.is_zero() {
                continue;
            }
            out = &out + &(xj * &df);
        }
        Ok(out)
    }

    /// Lie bracket `[self, other]_j = Σ_i self_i ∂_i other_j − other_i ∂_i self_j`.
    pub fn bracket(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_shape(other)?;
        let comps = (0..self.dim())
            .map(|j| Ok(&self.lie_derivative(&other.components[j])? - &other.lie_derivative(&self.components[j])?))
            .collect::<Result<Vec<_>, SeriesError>>()?;
        Self::new(comps)
    }

    /// Field expressed in the coordinates `y = φ(x)`: `(Dφ·X) ∘ φ⁻¹`.
    pub fn pushforward(&self, phi: &PolyMap) -> Result<Self, SeriesError> {
        if phi.dim() != self.dim() {
            return Err(SeriesError::ArityMismatch { expected: self.dim(), got: phi.dim() });
        }
        self.components[0].check_shape(phi.component(0))?;
        let psi = phi.invert()?;
        // (Dφ·X)_j = X(φ_j)
        let moved = phi
            .components()
            .iter()
            .map(|p| self.lie_derivative(p))
            .collect::<Result<Vec<_>, _>>()?;
        let mut composer = Composer::new(psi.components())?;
        let comps = moved.iter().map(|g| composer.compose(g)).collect::<Result<Vec<_>, _>>()?;
        Self::new(comps)
    }

    /// Pushforward by the time-one flow of `generator`, via the Lie series
    /// `Σ_k (−1)^k/k! ad^k(self)` with `ad = [generator, ·]`. The generator must vanish
    /// to second order, so every bracket raises the degree and the series terminates.
    pub fn flow_pushforward(&self, generator: &Self) -> Result<Self, SeriesError> {
        self.check_shape(generator)?;
        debug_assert!(generator.lowest_degree().is_none_or(|d| d >= 2));
        let mut total = self.clone();
        let mut term = self.clone();
        for k in 1..=self.order() {
            term = generator.bracket(&term)?.scale(&Scalar::ratio(-1, i64::from(k)));
            if term.is_zero() {
                break;
            }
            total = total.add(&term)?;
        }
        Ok(total)
    }

    /// `g ∘ exp(self)` as the series `Σ_k X^k(g)/k!`; `self` must vanish to second order.
    pub fn exp_derivation(&self, g: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
        let mut total = g.clone();
        let mut term = g.clone();
        for k in 1..=g.order() {
            term = self.lie_derivative(&term)?.scale(&Scalar::ratio(1, i64::from(k)));
            if term.is_zero() {
                break;
            }
            total = &total + &term;
        }
        Ok(total)
    }
}

/// Free-function form of [`VectorFieldJet::pushforward`].
pub fn pushforward(x: &VectorFieldJet, phi: &PolyMap) -> Result<VectorFieldJet, SeriesError> {
    x.pushforward(phi)
}

/// Free-function form of [`VectorFieldJet::lie_derivative`].
pub fn lie_derivative(x: &VectorFieldJet, f: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
    x.lie_derivative(f)
}
