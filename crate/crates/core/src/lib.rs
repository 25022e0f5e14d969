//! Limiting free energies and last-passage constants of directed polymer and
//! percolation models.
//!
//! The crate has three layers:
//!
//! * **Periodic solvers** ([`periodic`], [`pf`], [`maxplus`]): a periodic
//!   weight field on `Z^d` is reduced to a finite quotient space with a shift
//!   action. The positive-temperature point-to-level constant is the log of a
//!   Perron-Frobenius eigenvalue; the zero-temperature constant is a max-plus
//!   eigenvalue, solved three independent ways (Karp, circuit enumeration,
//!   difference constraints). Eigenvectors yield corrector cocycles and
//!   Busemann functions, and the circuit hull yields point-to-point constants.
//! * **Monte Carlo** ([`mc`]): i.i.d. fields on `Z^2` with `R = {e1, e2}`,
//!   dynamic-programming passage times and partition functions, and estimators
//!   for point-to-level / point-to-point constants and Busemann gradients.
//!   Sampling is seeded and bit-exact reproducible.
//! * **Solvable oracles** ([`oracles`]): closed forms for the log-gamma
//!   polymer and the exponential corner growth model, digamma/trigamma,
//!   annealed bounds, and grid Legendre transforms tying tilts to velocities.
//!
//! Solver-layer numerics are generic over a floating scalar (f32 or f64);
//! concrete `f64` aliases live at the crate root. The Monte-Carlo engine is
//! `f64` only, since reproducible sampling fixes the word size.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

pub mod cocycle;
pub mod error;
pub mod maxplus;
pub mod mc;
pub mod model;
pub mod oracles;
pub mod periodic;
pub mod pf;
pub mod presets;
mod simplex;

pub use error::Error;

/// Floating-point scalar for the solver layer: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Shorthand for lossless conversion of small constants.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable")
    }
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
}

/// Default scalar used by the CLI and the Monte-Carlo engine.
pub type Real = f64;

/// Quotient space over the default scalar.
pub type QuotientSpace = periodic::QuotientSpace<Real>;
/// Transfer matrix over the default scalar.
pub type TransferMatrix = pf::TransferMatrix<Real>;
/// Max-plus matrix over the default scalar.
pub type MaxPlusMatrix = maxplus::MaxPlusMatrix<Real>;

/// `log(exp(a) + exp(b))` without overflow; `-inf` operands are absorbing.
pub fn logaddexp<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(sum(exp(xs)))` without overflow.
pub fn logsumexp<T: Scalar>(xs: &[T]) -> T {
    let hi = xs
        .iter()
        .cloned()
        .fold(T::neg_infinity(), |acc, x| acc.max(x));
    if hi == T::neg_infinity() || hi == T::infinity() {
        return hi;
    }
    let sum: T = xs.iter().map(|&x| (x - hi).exp()).sum();
    hi + sum.ln()
}

/// Formats a float with 17 significant digits, enough for exact f64
/// round-tripping in CSV artifacts.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}
