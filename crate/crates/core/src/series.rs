//! Formal power series in ℏ truncated at a fixed order.

use std::ops::Add;

use crate::error::{Error, Result};

/// Coefficients `c_0..=c_N` of a series in ℏ; anything beyond `N` is dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeries<P> {
    coeffs: Vec<P>,
}

impl<P> TruncatedSeries<P> {
    /// Builds a series from `c_0..=c_N`. Panics on an empty vector.
    pub fn new(coeffs: Vec<P>) -> Self {
        assert!(!coeffs.is_empty(), "a truncated series needs c_0");
        TruncatedSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> Option<&P> {
        self.coeffs.get(k)
    }

    pub fn coeffs(&self) -> &[P] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<P> {
        self.coeffs
    }

    pub fn map<R>(&self, f: impl FnMut(&P) -> R) -> TruncatedSeries<R> {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Cauchy product under a bilinear `combiner`:
    /// `c_n = Σ_{k+l=n} combiner(u_k, v_l)` for `n <= N`.
    pub fn combine<V, R>(
        &self,
        other: &TruncatedSeries<V>,
        combiner: impl Fn(&P, &V) -> R,
    ) -> Result<TruncatedSeries<R>>
    where
        R: Add<Output = R>,
    {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch(self.order(), other.order()));
        }
        let coeffs = (0..=self.order())
            .map(|n| {
                (0..=n)
                    .map(|k| combiner(&self.coeffs[k], &other.coeffs[n - k]))
                    .reduce(|a, b| a + b)
                    .expect("n >= 0 has at least one split")
            })
            .collect();
        Ok(TruncatedSeries { coeffs })
    }

    /// Coefficient-wise combination of two series of equal order.
    pub fn zip_with<V, R>(
        &self,
        other: &TruncatedSeries<V>,
        f: impl Fn(&P, &V) -> R,
    ) -> Result<TruncatedSeries<R>> {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch(self.order(), other.order()));
        }
        Ok(TruncatedSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect(),
        })
    }
}
