//! Closed-form ground truth: the log-gamma polymer and the exponential
//! corner growth model, the digamma/trigamma functions they need, annealed
//! (weak-disorder) bounds, and grid Legendre transforms between the
//! point-to-level and point-to-point constants.

use crate::error::{Error, Result};
use crate::mc::{DistKind, DistributionSpec, Transform};
use crate::model::{StepSet, Tilt};
use crate::Scalar;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Digamma `Psi0 = Gamma' / Gamma` by recurrence shift to `x >= 10` and the
/// asymptotic series `ln x - 1/(2x) - sum B_2n / (2n x^2n)` with
/// coefficients 1/12, 1/120, 1/252, 1/240, 1/132, 691/32760, 1/12.
/// Absolute error below 1e-12 on the positive axis.
pub fn digamma<T: Scalar>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "digamma needs a positive argument, got {x}"
        )));
    }
    let mut acc = T::zero();
    let mut z = x;
    while z < T::of(10.0) {
        acc = acc - z.recip();
        z = z + T::one();
    }
    let w = (z * z).recip();
    let series = T::of(1.0 / 12.0)
        - w * (T::of(1.0 / 120.0)
            - w * (T::of(1.0 / 252.0)
                - w * (T::of(1.0 / 240.0)
                    - w * (T::of(1.0 / 132.0)
                        - w * (T::of(691.0 / 32760.0) - w * T::of(1.0 / 12.0))))));
    Ok(acc + z.ln() - (T::of(2.0) * z).recip() - w * series)
}

/// Trigamma, same scheme: `1/x + 1/(2x^2) + x^{-3} (1/6 - ...)`.
pub fn trigamma<T: Scalar>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "trigamma needs a positive argument, got {x}"
        )));
    }
    let mut acc = T::zero();
    let mut z = x;
    while z < T::of(10.0) {
        acc = acc + (z * z).recip();
        z = z + T::one();
    }
    let w = (z * z).recip();
    let series = T::of(1.0 / 6.0)
        - w * (T::of(1.0 / 30.0)
            - w * (T::of(1.0 / 42.0)
                - w * (T::of(1.0 / 30.0)
                    - w * (T::of(5.0 / 66.0)
                        - w * (T::of(691.0 / 2730.0) - w * T::of(7.0 / 6.0))))));
    Ok(acc + z.recip() + (T::of(2.0) * z * z).recip() + w * series / z)
}

/// The log-gamma polymer: Gamma(rho) weights, potential
/// `-log w + log 2`, inverse temperature fixed at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogGammaModel<T> {
    rho: T,
}

/// Dual data of a velocity under the log-gamma model.
#[derive(Debug, Clone)]
pub struct LogGammaDuality<T> {
    pub theta: T,
    /// Representative dual tilt with `h2 = 0`; only `h1 - h2` is determined.
    pub tilt: Tilt<T>,
    pub g_pl: T,
    /// `|g_pl - (g_pp + h . xi)|`, identically zero up to rounding.
    pub duality_gap: T,
}

impl<T: Scalar> LogGammaModel<T> {
    pub fn new(rho: T) -> Result<Self> {
        if !(rho > T::zero()) || !rho.is_finite() {
            return Err(Error::InvalidInput(format!("rho must be positive, got {rho}")));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    /// The characteristic tilt parameter: the unique root of
    /// `s Psi1(theta) = (1 - s) Psi1(rho - theta)` in `(0, rho)`, found by
    /// bisection on the strictly decreasing difference.
    pub fn theta(&self, s: T) -> Result<T> {
        if !(s > T::zero() && s < T::one()) {
            return Err(Error::InvalidInput(format!("s = {s} outside (0, 1)")));
        }
        let phi = |theta: T| -> T {
            s * trigamma(theta).unwrap() - (T::one() - s) * trigamma(self.rho - theta).unwrap()
        };
        let mut lo = self.rho * T::of(1e-14);
        let mut hi = self.rho * (T::one() - T::of(1e-14));
        debug_assert!(phi(lo) > T::zero() && phi(hi) < T::zero());
        for _ in 0..200 {
            let mid = (lo + hi) / T::of(2.0);
            if phi(mid) > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::of(1e-16) * self.rho {
                break;
            }
        }
        Ok((lo + hi) / T::of(2.0))
    }

    /// Point-to-point constant at `xi = (s, 1-s)`:
    /// `-s Psi0(theta) - (1-s) Psi0(rho - theta)`.
    pub fn gpp(&self, s: T) -> Result<T> {
        let theta = self.theta(s)?;
        Ok(-s * digamma(theta)? - (T::one() - s) * digamma(self.rho - theta)?)
    }

    /// Dual tilt (`h1 - h2 = Psi0(theta) - Psi0(rho - theta)`, representative
    /// `h2 = 0`) and the point-to-level constant `g_pl = h1 - Psi0(theta)`.
    pub fn duality(&self, s: T) -> Result<LogGammaDuality<T>> {
        let theta = self.theta(s)?;
        let d0 = digamma(theta)?;
        let d1 = digamma(self.rho - theta)?;
        let t = d0 - d1;
        let g_pl = t - d0; // = -Psi0(rho - theta)
        let gpp = -s * d0 - (T::one() - s) * d1;
        let gap = (g_pl - (gpp + t * s)).abs();
        Ok(LogGammaDuality {
            theta,
            tilt: Tilt::new(vec![t, T::zero()])?,
            g_pl,
            duality_gap: gap,
        })
    }
}

/// Rost's shape function for the exponential corner growth model:
/// `g_pp(s, 1-s) = 1 + 2 sqrt(s (1-s))`, boundary included.
pub fn rost_gpp<T: Scalar>(s: T) -> Result<T> {
    if !(s >= T::zero() && s <= T::one()) {
        return Err(Error::InvalidInput(format!("s = {s} outside [0, 1]")));
    }
    Ok(T::one() + T::of(2.0) * (s * (T::one() - s)).sqrt())
}

/// Busemann parameter `alpha(xi) = sqrt(s) / (sqrt(s) + sqrt(1-s))`.
pub fn exp_alpha<T: Scalar>(s: T) -> Result<T> {
    if !(s > T::zero() && s < T::one()) {
        return Err(Error::InvalidInput(format!("s = {s} outside (0, 1)")));
    }
    let rs = s.sqrt();
    let rq = (T::one() - s).sqrt();
    Ok(rs / (rs + rq))
}

/// Dual tilt `h(xi) = -(1/alpha, 1/(1 - alpha))`; satisfies
/// `g_pp(xi) = -h(xi) . xi`.
pub fn exp_dual_tilt<T: Scalar>(s: T) -> Result<Tilt<T>> {
    let alpha = exp_alpha(s)?;
    Tilt::new(vec![-alpha.recip(), -(T::one() - alpha).recip()])
}

/// Point-to-level constant of the exponential corner growth model at an
/// arbitrary tilt: with `t = h1 - h2`,
/// `g_pl(h) = 1 + h2 + t/2 + sqrt(t^2 + 4)/2`
/// (the Legendre transform `sup_s [rost(s) + h . (s, 1-s)]` in closed form).
/// At the dual tilt `-(1/alpha, 1/(1-alpha))` this vanishes.
pub fn exp_gpl_tilt<T: Scalar>(h: &Tilt<T>) -> T {
    let t = h.components()[0] - h.components()[1];
    T::one() + h.components()[1] + t / T::of(2.0) + (t * t + T::of(4.0)).sqrt() / T::of(2.0)
}

impl<T: Scalar> LogGammaModel<T> {
    /// Point-to-level constant at an arbitrary tilt: inverts
    /// `h1 - h2 = Psi0(theta) - Psi0(rho - theta)` by bisection (the right
    /// side is strictly increasing in theta), then `g_pl = h1 - Psi0(theta)`.
    pub fn gpl_of_tilt(&self, h: &Tilt<T>) -> Result<T> {
        let t = h.components()[0] - h.components()[1];
        let diff = |theta: T| -> T {
            digamma(theta).unwrap() - digamma(self.rho - theta).unwrap()
        };
        let mut lo = self.rho * T::of(1e-14);
        let mut hi = self.rho * (T::one() - T::of(1e-14));
        if t <= diff(lo) || t >= diff(hi) {
            return Err(Error::InvalidInput(format!(
                "tilt difference {t} outside the digamma range for rho = {}",
                self.rho
            )));
        }
        for _ in 0..200 {
            let mid = (lo + hi) / T::of(2.0);
            if diff(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::of(1e-16) * self.rho {
                break;
            }
        }
        let theta = (lo + hi) / T::of(2.0);
        Ok(h.components()[0] - digamma(theta)?)
    }
}

/// Annealed (weak-disorder) quantities: the log moment generating function
/// of the potential, the step-kernel cumulant `kappa`, and the annealed
/// value `beta^{-1} (lambda(beta) + kappa(beta h))`, an upper bound for the
/// quenched constant by Jensen.
#[derive(Debug, Clone, PartialEq)]
pub struct Annealed {
    pub lambda_beta: f64,
    pub kappa: f64,
    pub g_weak: f64,
}

pub fn annealed_formulas(
    dist: DistributionSpec,
    beta: f64,
    h: &Tilt<f64>,
    steps: &StepSet,
) -> Result<Annealed> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    let lambda_beta = match (dist.kind, dist.transform) {
        (DistKind::Exponential, Transform::Identity) => {
            if beta >= 1.0 {
                return Err(Error::MgfDiverges(format!(
                    "exponential weights need beta < 1, got {beta}"
                )));
            }
            -(1.0 - beta).ln()
        }
        (DistKind::Gamma { shape }, Transform::Identity) => {
            if beta >= 1.0 {
                return Err(Error::MgfDiverges(format!(
                    "gamma weights need beta < 1, got {beta}"
                )));
            }
            -shape * (1.0 - beta).ln()
        }
        (DistKind::Bernoulli { p }, Transform::Identity) => (1.0 - p + p * beta.exp()).ln(),
        _ => {
            return Err(Error::MgfDiverges(
                "no closed-form log-MGF for this distribution/transform".into(),
            ))
        }
    };
    // kappa(h') = log sum_z |R|^{-1} e^{h'.z} at h' = beta h
    let terms: Vec<f64> = steps
        .steps()
        .iter()
        .map(|z| beta * h.dot_step(z) - (steps.len() as f64).ln())
        .collect();
    let kappa = crate::logsumexp(&terms);
    Ok(Annealed {
        lambda_beta,
        kappa,
        g_weak: (lambda_beta + kappa) / beta,
    })
}

/// Which variable parameterizes a [`FreeEnergyCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveAxis {
    /// `xi = (s, 1-s)`, parameter `s`: the curve must be concave.
    Velocity,
    /// `h = (t, 0)`, parameter `t`: the curve must be convex.
    Tilt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Oracle,
    Periodic,
    MonteCarlo,
}

/// A sampled free-energy curve on a strictly increasing parameter grid.
#[derive(Debug, Clone)]
pub struct FreeEnergyCurve<T> {
    pub axis: CurveAxis,
    pub provenance: Provenance,
    points: Vec<(T, T)>,
}

/// Allowed curvature defect of exact curves.
pub const SHAPE_SLACK: f64 = 1e-9;

impl<T: Scalar> FreeEnergyCurve<T> {
    /// Oracle and periodic curves are required to have the right curvature
    /// up to `1e-9`; Monte-Carlo curves carry sampling noise, so their shape
    /// defect is only recorded (see [`FreeEnergyCurve::shape_defect`]).
    pub fn new(axis: CurveAxis, provenance: Provenance, points: Vec<(T, T)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidInput("curve needs at least 3 points".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidInput(
                "curve grid must be strictly increasing".into(),
            ));
        }
        let curve = Self {
            axis,
            provenance,
            points,
        };
        if curve.provenance != Provenance::MonteCarlo
            && curve.shape_defect() > T::of(SHAPE_SLACK)
        {
            return Err(Error::InvalidInput(format!(
                "curve violates its curvature requirement by {:e}",
                curve.shape_defect()
            )));
        }
        Ok(curve)
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    /// Largest violation of concavity (velocity axis) or convexity (tilt
    /// axis) among consecutive point triples; zero for a clean curve.
    pub fn shape_defect(&self) -> T {
        let mut worst = T::zero();
        for w in self.points.windows(3) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let (x2, y2) = w[2];
            let second = (y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0);
            let defect = match self.axis {
                CurveAxis::Velocity => second.max(T::zero()),
                CurveAxis::Tilt => (-second).max(T::zero()),
            };
            worst = worst.max(defect);
        }
        worst
    }
}

/// Rost's curve on an `s` grid.
pub fn rost_curve<T: Scalar>(s_grid: &[T]) -> Result<FreeEnergyCurve<T>> {
    let points = s_grid
        .iter()
        .map(|&s| Ok((s, rost_gpp(s)?)))
        .collect::<Result<Vec<_>>>()?;
    FreeEnergyCurve::new(CurveAxis::Velocity, Provenance::Oracle, points)
}

/// Log-gamma point-to-point curve on an `s` grid.
pub fn loggamma_pp_curve<T: Scalar>(
    model: &LogGammaModel<T>,
    s_grid: &[T],
) -> Result<FreeEnergyCurve<T>> {
    let points = s_grid
        .iter()
        .map(|&s| Ok((s, model.gpp(s)?)))
        .collect::<Result<Vec<_>>>()?;
    FreeEnergyCurve::new(CurveAxis::Velocity, Provenance::Oracle, points)
}

/// Log-gamma point-to-level curve over the representative tilts
/// `h = (t(s), 0)` induced by an `s` grid.
pub fn loggamma_pl_curve<T: Scalar>(
    model: &LogGammaModel<T>,
    s_grid: &[T],
) -> Result<FreeEnergyCurve<T>> {
    let points = s_grid
        .iter()
        .map(|&s| {
            let d = model.duality(s)?;
            Ok((d.tilt.components()[0], d.g_pl))
        })
        .collect::<Result<Vec<_>>>()?;
    FreeEnergyCurve::new(CurveAxis::Tilt, Provenance::Oracle, points)
}

/// `g_pl(h) = sup_s [g_pp(s) + h . (s, 1-s)]` on the curve's grid with
/// parabolic refinement around the maximizing node. Errors when the argmax
/// sits on the grid boundary (the box is too small to bracket the optimum).
pub fn legendre_pl_from_pp<T: Scalar>(
    curve: &FreeEnergyCurve<T>,
    h: &Tilt<T>,
) -> Result<(T, T)> {
    if curve.axis != CurveAxis::Velocity {
        return Err(Error::InvalidInput("expected a velocity-axis curve".into()));
    }
    let vals: Vec<(T, T)> = curve
        .points
        .iter()
        .map(|&(s, g)| (s, g + h.dot(&[s, T::one() - s])))
        .collect();
    refine_extremum(&vals, true)
}

/// `g_pp(xi) = inf_t [g_pl(t, 0) - t s]` on the curve's grid with parabolic
/// refinement; restriction of the infimum to `h2 = 0` is harmless because
/// tilts differing orthogonally to the step differences are equivalent.
pub fn legendre_pp_from_pl<T: Scalar>(curve: &FreeEnergyCurve<T>, s: T) -> Result<(T, T)> {
    if curve.axis != CurveAxis::Tilt {
        return Err(Error::InvalidInput("expected a tilt-axis curve".into()));
    }
    let vals: Vec<(T, T)> = curve
        .points
        .iter()
        .map(|&(t, g)| (t, g - t * s))
        .collect();
    refine_extremum(&vals, false)
}

/// Grid extremum with a 3-point parabola refinement; returns
/// `(value, argument)`.
fn refine_extremum<T: Scalar>(vals: &[(T, T)], maximize: bool) -> Result<(T, T)> {
    if vals.len() < 200 {
        return Err(Error::GridTooCoarse(format!(
            "need at least 200 grid points, got {}",
            vals.len()
        )));
    }
    let mut best = 0usize;
    for (i, &(_, v)) in vals.iter().enumerate() {
        let better = if maximize {
            v > vals[best].1
        } else {
            v < vals[best].1
        };
        if better {
            best = i;
        }
    }
    if best == 0 || best == vals.len() - 1 {
        return Err(Error::GridTooCoarse(format!(
            "extremum at the grid boundary (index {best}); widen the box beyond {:?}",
            (
                vals[best].0.to_f64().unwrap(),
                vals[best].1.to_f64().unwrap()
            )
        )));
    }
    let (x0, y0) = vals[best - 1];
    let (x1, y1) = vals[best];
    let (x2, y2) = vals[best + 1];
    let d01 = (y1 - y0) / (x1 - x0);
    let d012 = ((y2 - y1) / (x2 - x1) - d01) / (x2 - x0);
    if d012.abs() < T::of(1e-300) {
        return Ok((y1, x1));
    }
    let xstar = (x0 + x1) / T::of(2.0) - d01 / (T::of(2.0) * d012);
    let value = y0 + d01 * (xstar - x0) + d012 * (xstar - x0) * (xstar - x1);
    Ok((value, xstar))
}
