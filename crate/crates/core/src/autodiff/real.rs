use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic shared by plain `f64` evaluation and taped evaluation.
///
/// Pointwise physics formulas are written once against this trait: the
/// unknowns of a given training phase are `T`, frozen quantities stay `f64`
/// and enter through the mixed `T op f64` operators.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(self) -> f64;
    /// A constant of the same kind as `self` (for taped values, a leaf on the same tape).
    fn lift(self, c: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;

    /// Sum in the fixed pairwise order of [`pairwise_sum`](super::pairwise_sum).
    /// Taped values need a non-empty slice.
    fn sum_of(xs: &[Self]) -> Self;

    /// A quantity whose value is `value` and whose local partials with
    /// respect to `deps` are the supplied numbers rather than derivatives of
    /// any recorded expression. Plain numbers just return `value`.
    fn custom(value: f64, deps: &[(Self, f64)]) -> Self;

    fn square(self) -> Self {
        self * self
    }

    /// `c - self`
    fn rsub(self, c: f64) -> Self {
        -self + c
    }

    fn sigmoid(self) -> Self {
        ((-self).exp() + 1.0).powi(-1)
    }
}

impl Real for f64 {
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn lift(self, c: f64) -> Self {
        c
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn sigmoid(self) -> Self {
        sigmoid(self)
    }
    fn sum_of(xs: &[Self]) -> Self {
        super::pairwise_sum(xs)
    }
    fn custom(value: f64, _deps: &[(Self, f64)]) -> Self {
        value
    }
}

/// Exact logistic function.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}
