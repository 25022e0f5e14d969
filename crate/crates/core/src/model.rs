//! Step sets, velocities, tilts, the lattice approximants `xhat(v, n)` of
//! `n*xi`, and brute-force path enumeration (the verification oracle for the
//! dynamic-programming and eigenvalue machinery).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{solve_lp_max, LpOutcome};
use crate::Scalar;

/// Paths longer than this are refused by [`enumerate_paths`]; `|R|^n` blows
/// up quickly and the enumeration only exists to check small cases.
pub const DEFAULT_PATH_CAP: usize = 12;

/// Tolerance used when validating convex-combination identities.
pub const VELOCITY_TOL: f64 = 1e-12;

/// Strictly-positive threshold for the relative-interior feasibility test.
pub const INTERIOR_TOL: f64 = 1e-10;

/// The admissible step set `R` in `Z^d` together with its directedness flag.
///
/// `directed` is computed, never declared: it is true iff some `u` satisfies
/// `u . z = 1` for every step `z`, which forces every admissible path between
/// two points to have the same number of steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSet {
    dim: usize,
    steps: Vec<Vec<i64>>,
    directed: bool,
}

impl StepSet {
    pub fn new(dim: usize, steps: Vec<Vec<i64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if steps.is_empty() {
            return Err(Error::InvalidInput("step set must be nonempty".into()));
        }
        if !steps.iter().any(|z| z.iter().any(|&c| c != 0)) {
            return Err(Error::InvalidInput(
                "step set must contain a nonzero vector".into(),
            ));
        }
        for z in &steps {
            if z.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "step {z:?} does not have dimension {dim}"
                )));
            }
        }
        for i in 0..steps.len() {
            for j in i + 1..steps.len() {
                if steps[i] == steps[j] {
                    return Err(Error::InvalidInput(format!(
                        "duplicate step {:?}",
                        steps[i]
                    )));
                }
            }
        }
        let directed = directedness(dim, &steps);
        Ok(Self {
            dim,
            steps,
            directed,
        })
    }

    /// Planar corner-growth steps `R = {e1, e2}`.
    pub fn e1_e2() -> Self {
        Self::new(2, vec![vec![1, 0], vec![0, 1]]).expect("valid step set")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Vec<i64>] {
        &self.steps
    }

    pub fn step(&self, i: usize) -> &[i64] {
        &self.steps[i]
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// `max_z |z|_inf`, the constant entering the `xhat` approximation bound.
    pub fn max_step_norm(&self) -> i64 {
        self.steps
            .iter()
            .flat_map(|z| z.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(0)
    }
}

/// Linear-functional directedness criterion: feasibility of `u . z = 1` for
/// all steps, solved as a tiny LP with `u` split into positive parts.
fn directedness(dim: usize, steps: &[Vec<i64>]) -> bool {
    let n = 2 * dim;
    let c = vec![0.0f64; n];
    let mut a = Vec::with_capacity(steps.len());
    for z in steps {
        let mut row = Vec::with_capacity(n);
        for &zj in z {
            row.push(zj as f64);
        }
        for &zj in z {
            row.push(-(zj as f64));
        }
        a.push(row);
    }
    let b = vec![1.0f64; steps.len()];
    matches!(solve_lp_max(&c, &a, &b).0, LpOutcome::Optimal)
}

/// An external field (tilt) `h` in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tilt<T> {
    h: Vec<T>,
}

impl<T: Scalar> Tilt<T> {
    pub fn new(h: Vec<T>) -> Result<Self> {
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("tilt entries must be finite".into()));
        }
        Ok(Self { h })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            h: vec![T::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn components(&self) -> &[T] {
        &self.h
    }

    /// `h . z` for a lattice vector.
    pub fn dot_step(&self, z: &[i64]) -> T {
        self.h
            .iter()
            .zip(z.iter())
            .fold(T::zero(), |acc, (&hi, &zi)| acc + hi * T::of(zi as f64))
    }

    /// `h . xi` for a real vector.
    pub fn dot(&self, xi: &[T]) -> T {
        self.h
            .iter()
            .zip(xi.iter())
            .fold(T::zero(), |acc, (&hi, &xi)| acc + hi * xi)
    }
}

/// A velocity `xi` in the convex hull of `R`, stored together with the convex
/// weights `alpha_z` that realize it (indexed like the step set).
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity<T> {
    xi: Vec<T>,
    alphas: Vec<T>,
}

impl<T: Scalar> Velocity<T> {
    /// Builds the velocity from weights, computing `xi = sum alpha_z z`.
    pub fn from_alphas(steps: &StepSet, alphas: Vec<T>) -> Result<Self> {
        if alphas.len() != steps.len() {
            return Err(Error::InvalidInput(
                "one weight per step is required".into(),
            ));
        }
        if alphas.iter().any(|&a| a < T::zero() || !a.is_finite()) {
            return Err(Error::InvalidInput(
                "weights must be nonnegative and finite".into(),
            ));
        }
        let total: T = alphas.iter().cloned().sum();
        if (total - T::one()).abs() > T::of(VELOCITY_TOL) {
            return Err(Error::InvalidInput(format!(
                "weights must sum to 1, got {total}"
            )));
        }
        let mut xi = vec![T::zero(); steps.dim()];
        for (a, z) in alphas.iter().zip(steps.steps()) {
            for (x, &zj) in xi.iter_mut().zip(z.iter()) {
                *x = *x + *a * T::of(zj as f64);
            }
        }
        Ok(Self { xi, alphas })
    }

    /// Validates a caller-supplied `(xi, alpha)` pair against the step set.
    pub fn new(steps: &StepSet, xi: Vec<T>, alphas: Vec<T>) -> Result<Self> {
        let built = Self::from_alphas(steps, alphas)?;
        if xi.len() != steps.dim() {
            return Err(Error::InvalidInput("velocity dimension mismatch".into()));
        }
        for (a, b) in xi.iter().zip(built.xi.iter()) {
            if (*a - *b).abs() > T::of(VELOCITY_TOL) {
                return Err(Error::InvalidInput(format!(
                    "xi {xi:?} does not match sum of weighted steps"
                )));
            }
        }
        Ok(Self { xi, ..built })
    }

    /// `xi = (s, 1-s)` with weights `(s, 1-s)` for the planar corner-growth
    /// steps `R = {e1, e2}`.
    pub fn planar(s: T) -> Result<Self> {
        if s < T::zero() || s > T::one() {
            return Err(Error::InvalidInput(format!("s = {s} outside [0, 1]")));
        }
        Velocity::from_alphas(&StepSet::e1_e2(), vec![s, T::one() - s])
    }

    pub fn xi(&self) -> &[T] {
        &self.xi
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }
}

/// Tie-breaking policy for distributing the leftover units of `xhat`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundingPolicy {
    /// Leftover units go to the steps with the largest fractional part of
    /// `n * alpha_z`, ties broken by step order. Default.
    LargestRemainder,
    /// Leftover units go to the first steps (in step order) with positive
    /// weight.
    Lexicographic,
}

/// Lattice point reachable from the origin in exactly `n` steps that
/// approximates `n * xi` to within a constant independent of `n`:
/// `sum_z (floor(n alpha_z) + b_z) z` with `b_z` in `{0, 1}`, `b_z = 0`
/// whenever `alpha_z = 0`, and `sum_z b_z = n - sum_z floor(n alpha_z)`.
///
/// `n * alpha_z` within `1e-9` of an integer is snapped to it, so exact
/// rational weights behave as in exact arithmetic.
pub fn xhat<T: Scalar>(
    v: &Velocity<T>,
    steps: &StepSet,
    n: usize,
    policy: RoundingPolicy,
) -> Result<Vec<i64>> {
    if v.alphas().len() != steps.len() {
        return Err(Error::InvalidInput(
            "velocity does not match the step set".into(),
        ));
    }
    let nf = T::of_usize(n);
    let mut floors = Vec::with_capacity(steps.len());
    let mut fracs = Vec::with_capacity(steps.len());
    for &a in v.alphas() {
        let na = nf * a;
        let nearest = na.round();
        let (fl, fr) = if (na - nearest).abs() <= T::of(1e-9) * T::one().max(na.abs()) {
            (nearest, T::zero())
        } else {
            (na.floor(), na - na.floor())
        };
        floors.push(fl.to_i64().expect("floor fits i64"));
        fracs.push(fr);
    }
    let assigned: i64 = floors.iter().sum::<i64>();
    let leftover = n as i64 - assigned;
    debug_assert!(leftover >= 0 && leftover <= steps.len() as i64);

    let mut b = vec![0i64; steps.len()];
    let mut order: Vec<usize> = (0..steps.len())
        .filter(|&i| v.alphas()[i] > T::zero())
        .collect();
    if policy == RoundingPolicy::LargestRemainder {
        order.sort_by(|&i, &j| fracs[j].partial_cmp(&fracs[i]).unwrap().then(i.cmp(&j)));
    }
    for &i in order.iter().take(leftover as usize) {
        b[i] = 1;
    }

    let mut x = vec![0i64; steps.dim()];
    for i in 0..steps.len() {
        let units = floors[i] + b[i];
        for (xj, &zj) in x.iter_mut().zip(steps.step(i)) {
            *xj += units * zj;
        }
    }
    Ok(x)
}

/// All admissible `n`-step paths as sequences of step indices, in
/// lexicographic order; when `endpoint` is given, only paths whose step sum
/// equals it.
pub fn enumerate_paths(
    steps: &StepSet,
    n: usize,
    endpoint: Option<&[i64]>,
) -> Result<Vec<Vec<usize>>> {
    enumerate_paths_capped(steps, n, endpoint, DEFAULT_PATH_CAP)
}

pub fn enumerate_paths_capped(
    steps: &StepSet,
    n: usize,
    endpoint: Option<&[i64]>,
    cap: usize,
) -> Result<Vec<Vec<usize>>> {
    if n > cap {
        return Err(Error::CapExceeded {
            what: "path length",
            requested: n,
            cap,
        });
    }
    if let Some(e) = endpoint {
        if e.len() != steps.dim() {
            return Err(Error::InvalidInput("endpoint dimension mismatch".into()));
        }
    }
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(n);
    let mut pos = vec![0i64; steps.dim()];
    descend(steps, n, endpoint, &mut stack, &mut pos, &mut out);
    Ok(out)
}

fn descend(
    steps: &StepSet,
    n: usize,
    endpoint: Option<&[i64]>,
    stack: &mut Vec<usize>,
    pos: &mut [i64],
    out: &mut Vec<Vec<usize>>,
) {
    if stack.len() == n {
        if endpoint.map_or(true, |e| e == pos) {
            out.push(stack.clone());
        }
        return;
    }
    for i in 0..steps.len() {
        for (p, &zj) in pos.iter_mut().zip(steps.step(i)) {
            *p += zj;
        }
        stack.push(i);
        descend(steps, n, endpoint, stack, pos, out);
        stack.pop();
        for (p, &zj) in pos.iter_mut().zip(steps.step(i)) {
            *p -= zj;
        }
    }
}

/// Sum of the steps of a path given as step indices.
pub fn path_endpoint(steps: &StepSet, path: &[usize]) -> Vec<i64> {
    let mut pos = vec![0i64; steps.dim()];
    for &i in path {
        for (p, &zj) in pos.iter_mut().zip(steps.step(i)) {
            *p += zj;
        }
    }
    pos
}

/// True iff `xi` admits a convex representation `sum alpha_z z` with every
/// `alpha_z` strictly positive, i.e. `xi` lies in the relative interior of
/// the convex hull of `R`. Solved as the LP `max t : alpha_z >= t`.
pub fn in_relative_interior<T: Scalar>(v: &Velocity<T>, steps: &StepSet) -> bool {
    max_min_weight(v.xi(), steps).map_or(false, |(t, _)| t > INTERIOR_TOL)
}

/// True iff `xi` lies in the convex hull of `R` (boundary included).
pub fn in_hull<T: Scalar>(xi: &[T], steps: &StepSet) -> bool {
    max_min_weight(xi, steps).is_some()
}

/// Packages a bare `xi` as a [`Velocity`] by solving for convex weights
/// (the most interior representation); errors when `xi` is outside the hull.
pub fn realize_velocity<T: Scalar>(steps: &StepSet, xi: &[T]) -> Result<Velocity<T>> {
    let (_, alphas) = max_min_weight(xi, steps).ok_or_else(|| Error::InfeasibleVelocity {
        xi: xi.iter().map(|x| x.to_f64().unwrap()).collect(),
        reason: "outside the convex hull of the step set".into(),
    })?;
    let total: f64 = alphas.iter().sum();
    let cleaned: Vec<T> = alphas
        .iter()
        .map(|&a| T::of((a.max(0.0) / total).min(1.0)))
        .collect();
    // renormalize the largest weight so the simplex identity is exact
    let mut cleaned = cleaned;
    let sum: T = cleaned.iter().cloned().sum();
    let imax = (0..cleaned.len())
        .max_by(|&a, &b| cleaned[a].partial_cmp(&cleaned[b]).unwrap())
        .unwrap();
    cleaned[imax] = cleaned[imax] + (T::one() - sum);
    Velocity::from_alphas(steps, cleaned)
}

/// Maximizes `min_z alpha_z` over convex representations of `xi`; `None`
/// when `xi` is not in the hull at all. Returns the optimum and the weights.
fn max_min_weight<T: Scalar>(xi: &[T], steps: &StepSet) -> Option<(f64, Vec<f64>)> {
    let k = steps.len();
    let d = steps.dim();
    if xi.len() != d {
        return None;
    }
    // variables: alpha_0..alpha_{k-1}, t, s_0..s_{k-1}
    let nvars = 2 * k + 1;
    let mut c = vec![0.0f64; nvars];
    c[k] = 1.0;
    let mut a = Vec::with_capacity(1 + d + k);
    let mut b = Vec::with_capacity(1 + d + k);
    let mut row = vec![0.0; nvars];
    row[..k].fill(1.0);
    a.push(row);
    b.push(1.0);
    for j in 0..d {
        let mut row = vec![0.0; nvars];
        for (i, z) in steps.steps().iter().enumerate() {
            row[i] = z[j] as f64;
        }
        a.push(row);
        b.push(xi[j].to_f64().unwrap());
    }
    for i in 0..k {
        let mut row = vec![0.0; nvars];
        row[i] = 1.0;
        row[k] = -1.0;
        row[k + 1 + i] = -1.0;
        a.push(row);
        b.push(0.0);
    }
    match solve_lp_max(&c, &a, &b) {
        (LpOutcome::Optimal, Some(sol)) => Some((sol.objective, sol.x[..k].to_vec())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1() -> Vec<i64> {
        vec![1, 0]
    }
    fn e2() -> Vec<i64> {
        vec![0, 1]
    }

    #[test]
    fn step_set_validation() {
        assert!(StepSet::new(2, vec![]).is_err());
        assert!(StepSet::new(2, vec![vec![0, 0]]).is_err());
        assert!(StepSet::new(2, vec![e1(), e1()]).is_err());
        assert!(StepSet::new(2, vec![vec![1]]).is_err());
        // zero allowed alongside a nonzero step
        assert!(StepSet::new(2, vec![vec![0, 0], e1()]).is_ok());
    }

    #[test]
    fn directedness_criterion() {
        // u = (1, 1) works
        assert!(StepSet::e1_e2().is_directed());
        // R = {(z', 1)} is directed via u = e_d
        let s = StepSet::new(2, vec![vec![-1, 1], vec![0, 1], vec![3, 1]]).unwrap();
        assert!(s.is_directed());
        // containing 0 can never satisfy u.0 = 1
        let s = StepSet::new(2, vec![vec![0, 0], e1()]).unwrap();
        assert!(!s.is_directed());
        // +1/-1 walk is not directed
        let s = StepSet::new(1, vec![vec![1], vec![-1]]).unwrap();
        assert!(!s.is_directed());
    }

    #[test]
    fn velocity_validation() {
        let steps = StepSet::e1_e2();
        assert!(Velocity::from_alphas(&steps, vec![0.5, 0.5]).is_ok());
        assert!(Velocity::from_alphas(&steps, vec![0.5, 0.4]).is_err());
        assert!(Velocity::from_alphas(&steps, vec![-0.1, 1.1]).is_err());
        let v = Velocity::new(&steps, vec![0.25, 0.75], vec![0.25, 0.75]).unwrap();
        assert_eq!(v.xi(), &[0.25, 0.75]);
        assert!(Velocity::new(&steps, vec![0.3, 0.75], vec![0.25, 0.75]).is_err());
    }

    #[test]
    fn xhat_single_step() {
        // pure e1 velocity: xhat(5) = (5, 0)
        let steps = StepSet::e1_e2();
        let v = Velocity::from_alphas(&steps, vec![1.0, 0.0]).unwrap();
        assert_eq!(
            xhat(&v, &steps, 5, RoundingPolicy::LargestRemainder).unwrap(),
            vec![5, 0]
        );
    }

    #[test]
    fn xhat_exact_rational() {
        // alpha = (2/3, 1/3), n = 3: no leftover after snapping
        let steps = StepSet::e1_e2();
        let v = Velocity::from_alphas(&steps, vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        for policy in [RoundingPolicy::LargestRemainder, RoundingPolicy::Lexicographic] {
            assert_eq!(xhat(&v, &steps, 3, policy).unwrap(), vec![2, 1]);
        }
    }

    #[test]
    fn xhat_tie_break_prefers_first_step() {
        // alpha = (1/2, 1/2), n = 3: one leftover unit, assigned to e1
        let steps = StepSet::e1_e2();
        let v = Velocity::planar(0.5).unwrap();
        assert_eq!(
            xhat(&v, &steps, 3, RoundingPolicy::LargestRemainder).unwrap(),
            vec![2, 1]
        );
        assert_eq!(
            xhat(&v, &steps, 3, RoundingPolicy::Lexicographic).unwrap(),
            vec![2, 1]
        );
    }

    #[test]
    fn xhat_approximation_bound() {
        let steps = StepSet::new(2, vec![vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        let v = Velocity::from_alphas(&steps, vec![0.3, 0.53, 0.17]).unwrap();
        let bound = (steps.len() as f64) * steps.max_step_norm() as f64;
        for n in [100usize, 1000, 10000] {
            let x = xhat(&v, &steps, n, RoundingPolicy::LargestRemainder).unwrap();
            for (xj, &xij) in x.iter().zip(v.xi()) {
                assert!((*xj as f64 - n as f64 * xij).abs() <= bound);
            }
        }
        // for a directed set the step count is visible as u . x = n
        let steps = StepSet::e1_e2();
        let v = Velocity::planar(0.3).unwrap();
        for n in [100usize, 1001, 10007] {
            let x = xhat(&v, &steps, n, RoundingPolicy::LargestRemainder).unwrap();
            assert_eq!(x.iter().sum::<i64>(), n as i64);
        }
    }

    #[test]
    fn enumerate_paths_examples() {
        let steps = StepSet::e1_e2();
        let paths = enumerate_paths(&steps, 2, Some(&[1, 1])).unwrap();
        assert_eq!(paths, vec![vec![0, 1], vec![1, 0]]);
        let paths = enumerate_paths(&steps, 2, None).unwrap();
        assert_eq!(paths.len(), 4);
        // parity obstruction: 3 steps cannot reach coordinate sum 4
        let paths = enumerate_paths(&steps, 3, Some(&[3, 1])).unwrap();
        assert!(paths.is_empty());
        assert!(matches!(
            enumerate_paths(&steps, 13, None),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn relative_interior_examples() {
        let steps = StepSet::e1_e2();
        let v = Velocity::planar(0.5).unwrap();
        assert!(in_relative_interior(&v, &steps));
        let v = Velocity::planar(1.0).unwrap();
        assert!(!in_relative_interior(&v, &steps));
        // with the zero step, (1/3, 1/3) has the all-positive representation
        let steps3 = StepSet::new(2, vec![e1(), e2(), vec![0, 0]]).unwrap();
        let v = Velocity::from_alphas(&steps3, vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!(in_relative_interior(&v, &steps3));
        assert!(in_hull(&[1.0, 0.0], &steps));
        assert!(!in_hull(&[1.1, 0.0], &steps));
    }

    #[test]
    fn realize_velocity_round_trips() {
        let steps = StepSet::e1_e2();
        let v = realize_velocity(&steps, &[0.3f64, 0.7]).unwrap();
        assert!((v.xi()[0] - 0.3).abs() < 1e-9);
        assert!((v.alphas().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(realize_velocity(&steps, &[0.8, 0.8]).is_err());
    }

    #[test]
    fn xhat_policy_agreement_on_integer_grid() {
        let steps = StepSet::e1_e2();
        let v = Velocity::planar(0.25).unwrap();
        for n in (0..=40).step_by(4) {
            let a = xhat(&v, &steps, n, RoundingPolicy::LargestRemainder).unwrap();
            let b = xhat(&v, &steps, n, RoundingPolicy::Lexicographic).unwrap();
            assert_eq!(a, b, "n = {n}");
        }
    }
}
