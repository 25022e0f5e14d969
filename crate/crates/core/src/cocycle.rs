//! Gradient cocycles over a finite quotient space.
//!
//! On a finite quotient every stationary centered cocycle is the gradient of
//! a potential `f`, so a cocycle is stored as one value per state and the
//! increment along a step is `f(T_z w) - f(w)`.

use crate::periodic::QuotientSpace;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCocycle<T> {
    f: Vec<T>,
}

impl<T: Scalar> GradientCocycle<T> {
    pub fn new(f: Vec<T>) -> Self {
        Self { f }
    }

    pub fn zero(m: usize) -> Self {
        Self {
            f: vec![T::zero(); m],
        }
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn potential(&self) -> &[T] {
        &self.f
    }

    pub fn value(&self, state: usize) -> T {
        self.f[state]
    }

    /// `F(w, 0, z) = f(T_z w) - f(w)`.
    pub fn increment(&self, q: &QuotientSpace<T>, state: usize, step: usize) -> T {
        self.f[q.shift(state, step)] - self.f[state]
    }

    /// `max f - min f`; bounds the sublinearity ratio of the lifted cocycle.
    pub fn spread(&self) -> T {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for &v in &self.f {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }
}
