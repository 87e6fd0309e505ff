//! Grid functions on the discrete interval `[0, T+1]` with homogeneous
//! Dirichlet boundary values, the forward difference, and the two norms of
//! the space `X`.
//!
//! Values are stored densely including both boundary zeros, so that index
//! `k` of the stored slice is the grid point `k`.

use serde::{Deserialize, Serialize};

use crate::error::GridError;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator of floats.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// A real sequence `x(0), ..., x(T+1)` with `x(0) = x(T+1) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    /// The zero function with `len` interior points.
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len + 2],
        }
    }

    /// Builds a grid function from its interior values `x(1), ..., x(T)`.
    pub fn from_interior(interior: &[f64]) -> Result<Self, GridError> {
        if interior.is_empty() {
            return Err(GridError::Empty);
        }
        if let Some(k) = interior.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index: k + 1 });
        }
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(0.0);
        values.extend_from_slice(interior);
        values.push(0.0);
        Ok(Self { values })
    }

    /// Builds a grid function from the full sequence including both boundary
    /// entries, which must be exactly zero.
    pub fn from_values(values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() < 3 {
            return Err(GridError::Empty);
        }
        let last = values.len() - 1;
        if values[0] != 0.0 || values[last] != 0.0 {
            return Err(GridError::Boundary {
                left: values[0],
                right: values[last],
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index: k });
        }
        Ok(Self { values })
    }

    /// Single unit spike `x(q) = height`, zero elsewhere.
    pub fn spike(len: usize, q: usize, height: f64) -> Self {
        assert!((1..=len).contains(&q), "spike index {q} outside [1, {len}]");
        let mut x = Self::zeros(len);
        x.values[q] = height;
        x
    }

    /// Number of interior points `T`.
    #[inline]
    pub fn len(&self) -> usize {
        self.values.len() - 2
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// All values `x(0), ..., x(T+1)`.
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interior values `x(1), ..., x(T)`.
    #[inline]
    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    /// Value at grid point `k` in `0..=T+1`.
    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Applies `f` to every interior value. Panics if the result is not finite.
    pub fn map_interior(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let mut values = self.values.clone();
        let n = values.len();
        for (k, v) in values.iter_mut().enumerate().take(n - 1).skip(1) {
            *v = f(k, *v);
            assert!(v.is_finite(), "non-finite grid value at {k}");
        }
        Self { values }
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &GridFunction, b: f64) -> Self {
        assert_eq!(self.len(), other.len());
        self.map_interior(|k, v| a * v + b * other.values[k])
    }

    /// The mirror image `k -> T + 1 - k`.
    pub fn reflected(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { values }
    }

    /// Largest absolute difference between interior values.
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.len(), other.len());
        self.interior()
            .iter()
            .zip(other.interior())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Euclidean distance between the interior value vectors.
    pub fn euclid_distance(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.len(), other.len());
        compensated_sum(
            self.interior()
                .iter()
                .zip(other.interior())
                .map(|(a, b)| (a - b) * (a - b)),
        )
        .sqrt()
    }
}

impl TryFrom<Vec<f64>> for GridFunction {
    type Error = GridError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::from_values(values)
    }
}

impl From<GridFunction> for Vec<f64> {
    fn from(x: GridFunction) -> Self {
        x.values
    }
}

/// The forward differences `Δx(k-1) = x(k) - x(k-1)` for `k = 1..=T+1`.
///
/// Entry `i` of the returned vector is `Δx(i)`, i.e. the difference across
/// the edge between points `i` and `i + 1`.
pub fn forward_difference(x: &GridFunction) -> Vec<f64> {
    x.values.windows(2).map(|w| w[1] - w[0]).collect()
}

/// The H-norm `(Σ |Δx(k-1)|²)^½` and the sup norm `max |x(k)|` of a grid
/// function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormPair {
    pub h_norm: f64,
    pub sup_norm: f64,
}

impl NormPair {
    /// Lower and upper constants of the equivalence
    /// `(2/√(T+1))·‖x‖_C ≤ ‖x‖ ≤ 2√T·‖x‖_C`.
    pub fn equivalence_constants(len: usize) -> (f64, f64) {
        let t = len as f64;
        (2.0 / (t + 1.0).sqrt(), 2.0 * t.sqrt())
    }
}

pub fn h_norm(x: &GridFunction) -> f64 {
    compensated_sum(forward_difference(x).into_iter().map(|d| d * d)).sqrt()
}

pub fn sup_norm(x: &GridFunction) -> f64 {
    x.interior().iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norms(x: &GridFunction) -> NormPair {
    NormPair {
        h_norm: h_norm(x),
        sup_norm: sup_norm(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn difference_examples() {
        assert_eq!(forward_difference(&GridFunction::zeros(3)), vec![0.0; 4]);
        assert_eq!(
            forward_difference(&GridFunction::spike(3, 2, 1.0)),
            vec![0.0, 1.0, -1.0, 0.0]
        );
        let tent = GridFunction::from_interior(&[1.0, 2.0, 1.0]).unwrap();
        assert_eq!(forward_difference(&tent), vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn norm_examples() {
        for q in 1..=4 {
            let n = norms(&GridFunction::spike(4, q, 1.0));
            assert_eq!(n.h_norm, 2f64.sqrt());
            assert_eq!(n.sup_norm, 1.0);
        }
        let z = norms(&GridFunction::zeros(5));
        assert_eq!((z.h_norm, z.sup_norm), (0.0, 0.0));

        let tent = GridFunction::from_interior(&[1.0, 2.0, 1.0]).unwrap();
        let n = norms(&tent);
        assert_eq!(n.h_norm, 2.0);
        assert_eq!(n.sup_norm, 2.0);
        let (lo, hi) = NormPair::equivalence_constants(3);
        assert!(lo * n.sup_norm <= n.h_norm && n.h_norm <= hi * n.sup_norm);
    }

    #[test]
    fn rejects_bad_boundaries() {
        assert!(matches!(
            GridFunction::from_values(vec![0.0, 1.0, 0.5]),
            Err(GridError::Boundary { .. })
        ));
        assert!(matches!(
            GridFunction::from_interior(&[1.0, f64::NAN]),
            Err(GridError::NonFinite { index: 2 })
        ));
        assert!(GridFunction::from_interior(&[]).is_err());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s = compensated_sum([1e16, 1.0, -1e16, 1.0]);
        assert_eq!(s, 2.0);
    }

    #[test]
    fn reflection_is_involution() {
        let x = GridFunction::from_interior(&[1.0, -2.0, 3.5]).unwrap();
        assert_eq!(x.reflected().interior(), &[3.5, -2.0, 1.0]);
        assert_eq!(x.reflected().reflected(), x);
    }
}
