//! Elementary circuits of the max-plus multigraph and the quantities built
//! from them: the maximal average circuit weight (the measure variational
//! value) and the point-to-point constant via the hull of circuit mean steps.

use super::MaxPlusMatrix;
use crate::error::{Error, Result};
use crate::model::{Tilt, Velocity};
use crate::simplex::{solve_lp_max, LpOutcome};
use crate::Scalar;

/// Default bound on the number of enumerated circuits.
pub const DEFAULT_CIRCUIT_CAP: usize = 1_000_000;

/// An elementary circuit of the multigraph `(Omega, E)`: nodes are distinct
/// except for the repeated endpoint, and every traversed parallel edge is a
/// distinct circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit<T> {
    /// Visited states, starting (and implicitly ending) at the smallest.
    pub nodes: Vec<usize>,
    /// Step indices labeling each traversed edge.
    pub steps: Vec<usize>,
    pub total_weight: T,
    pub mean_weight: T,
    /// `sum_k z_k / N` in `R^d`.
    pub mean_step: Vec<T>,
    pub len: usize,
}

#[derive(Debug, Clone)]
pub struct CircuitSet<T> {
    pub circuits: Vec<Circuit<T>>,
    /// False when enumeration stopped at the cap; aggregate values derived
    /// from a partial list are refused.
    pub complete: bool,
    tilt: Tilt<T>,
    dim: usize,
}

impl<T: Scalar> CircuitSet<T> {
    pub fn tilt(&self) -> &Tilt<T> {
        &self.tilt
    }

    /// Largest mean circuit weight; equals the max-plus eigenvalue when the
    /// enumeration is complete.
    pub fn max_mean_weight(&self) -> Option<T> {
        self.circuits
            .iter()
            .map(|c| c.mean_weight)
            .fold(None, |acc, w| Some(acc.map_or(w, |a: T| a.max(w))))
    }

    /// Mean of the untilted potential along a circuit:
    /// `mean_weight - h . mean_step`.
    pub fn mean_base_weight(&self, c: &Circuit<T>) -> T {
        c.mean_weight - self.tilt.dot(&c.mean_step)
    }
}

/// Johnson-style enumeration of all elementary circuits, branching over
/// parallel argmax step labels. Circuits are reported starting at their
/// smallest node, in depth-first order; stops early (and flags the result
/// incomplete) once `cap` circuits have been emitted.
pub fn enumerate_circuits<T: Scalar>(a: &MaxPlusMatrix<T>, cap: usize) -> CircuitSet<T> {
    let m = a.m();
    // adjacency with one entry per labeled edge, deterministic order
    let mut adj: Vec<Vec<(usize, usize, T)>> = vec![Vec::new(); m];
    for u in 0..m {
        for v in 0..m {
            let w = a.entry(u, v);
            if w != T::neg_infinity() {
                for &z in a.edge_steps(u, v) {
                    adj[u].push((v, z, w));
                }
            }
        }
    }

    let mut finder = CircuitFinder {
        adj: &adj,
        root: 0,
        blocked: vec![false; m],
        block_lists: vec![Vec::new(); m],
        node_stack: Vec::new(),
        step_stack: Vec::new(),
        found: Vec::new(),
        cap,
        truncated: false,
    };
    for s in 0..m {
        finder.root = s;
        for v in 0..m {
            finder.blocked[v] = false;
            finder.block_lists[v].clear();
        }
        finder.explore(s);
        if finder.truncated {
            break;
        }
    }

    let circuits = finder
        .found
        .into_iter()
        .map(|(nodes, steps)| {
            let len = nodes.len();
            // labels are argmax steps, so the labeled edge weight equals the
            // matrix entry between consecutive nodes
            let total_weight = nodes
                .iter()
                .enumerate()
                .map(|(i, &u)| a.entry(u, nodes[(i + 1) % len]))
                .sum::<T>();
            let mut mean_step = vec![T::zero(); a.steps().dim()];
            for &z in &steps {
                for (ms, &c) in mean_step.iter_mut().zip(a.steps().step(z)) {
                    *ms = *ms + T::of(c as f64);
                }
            }
            let nf = T::of_usize(len);
            for ms in mean_step.iter_mut() {
                *ms = *ms / nf;
            }
            Circuit {
                total_weight,
                mean_weight: total_weight / nf,
                mean_step,
                len,
                nodes,
                steps,
            }
        })
        .collect();
    CircuitSet {
        circuits,
        complete: !finder.truncated,
        tilt: a.tilt().clone(),
        dim: a.steps().dim(),
    }
}

struct CircuitFinder<'a, T> {
    adj: &'a [Vec<(usize, usize, T)>],
    root: usize,
    blocked: Vec<bool>,
    block_lists: Vec<Vec<usize>>,
    node_stack: Vec<usize>,
    step_stack: Vec<usize>,
    found: Vec<(Vec<usize>, Vec<usize>)>,
    cap: usize,
    truncated: bool,
}

impl<T: Scalar> CircuitFinder<'_, T> {
    fn explore(&mut self, v: usize) -> bool {
        let mut found_circuit = false;
        self.node_stack.push(v);
        self.blocked[v] = true;
        for idx in 0..self.adj[v].len() {
            if self.truncated {
                break;
            }
            let (w, step, _weight) = self.adj[v][idx];
            if w < self.root {
                continue;
            }
            if w == self.root {
                if self.found.len() >= self.cap {
                    self.truncated = true;
                    break;
                }
                let mut steps = self.step_stack.clone();
                steps.push(step);
                self.found.push((self.node_stack.clone(), steps));
                found_circuit = true;
            } else if !self.blocked[w] {
                self.step_stack.push(step);
                if self.explore(w) {
                    found_circuit = true;
                }
                self.step_stack.pop();
            }
        }
        if found_circuit {
            self.unblock(v);
        } else {
            for &(w, _, _) in &self.adj[v] {
                if w >= self.root && !self.block_lists[w].contains(&v) {
                    self.block_lists[w].push(v);
                }
            }
        }
        self.node_stack.pop();
        found_circuit
    }

    fn unblock(&mut self, v: usize) {
        self.blocked[v] = false;
        let waiters = std::mem::take(&mut self.block_lists[v]);
        for w in waiters {
            if self.blocked[w] {
                self.unblock(w);
            }
        }
    }
}

/// The measure variational value over invariant measures on
/// `Omega x R`: the extreme points are uniform measures on elementary
/// circuits, so the value is the largest mean circuit weight.
pub fn measure_variational_value<T: Scalar>(cs: &CircuitSet<T>) -> Result<T> {
    if !cs.complete {
        return Err(Error::IncompleteCircuits);
    }
    cs.max_mean_weight()
        .ok_or_else(|| Error::InvalidInput("no circuits".into()))
}

/// Periodic point-to-point constant at velocity `xi`: maximize the average
/// untilted circuit weight over mixtures of circuits whose mean steps
/// average to `xi` (the finite-quotient measure variational formula with the
/// mean-step constraint), solved as a small LP over the circuit hull.
pub fn gpp_periodic<T: Scalar>(cs: &CircuitSet<T>, v: &Velocity<T>) -> Result<T> {
    if !cs.complete {
        return Err(Error::IncompleteCircuits);
    }
    let xi = v.xi();
    if xi.len() != cs.dim {
        return Err(Error::InvalidInput("velocity dimension mismatch".into()));
    }
    let n = cs.circuits.len();
    let c: Vec<f64> = cs
        .circuits
        .iter()
        .map(|cir| cs.mean_base_weight(cir).to_f64().unwrap())
        .collect();
    let mut a = Vec::with_capacity(cs.dim + 1);
    let mut b = Vec::with_capacity(cs.dim + 1);
    for j in 0..cs.dim {
        a.push(
            cs.circuits
                .iter()
                .map(|cir| cir.mean_step[j].to_f64().unwrap())
                .collect::<Vec<f64>>(),
        );
        b.push(xi[j].to_f64().unwrap());
    }
    a.push(vec![1.0; n]);
    b.push(1.0);
    match solve_lp_max(&c, &a, &b) {
        (LpOutcome::Optimal, Some(sol)) => Ok(T::of(sol.objective)),
        _ => Err(Error::InfeasibleVelocity {
            xi: xi.iter().map(|x| x.to_f64().unwrap()).collect(),
            reason: "outside the convex hull of circuit mean steps".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxplus::{build_maxplus_matrix, karp_eigenvalue};
    use crate::model::StepSet;
    use crate::periodic::{build_quotient, PeriodicEnvironment};
    use crate::presets;

    fn stripes_circuits(h1: f64, h2: f64) -> CircuitSet<f64> {
        let (env, steps) = presets::stripes();
        let q = build_quotient(&env, &steps).unwrap();
        let a = build_maxplus_matrix(&q, &Tilt::new(vec![h1, h2]).unwrap());
        enumerate_circuits(&a, DEFAULT_CIRCUIT_CAP)
    }

    #[test]
    fn stripes_has_three_circuits() {
        let cs = stripes_circuits(0.0, 0.0);
        assert!(cs.complete);
        assert_eq!(cs.circuits.len(), 3);
        let mut means: Vec<f64> = cs.circuits.iter().map(|c| c.mean_weight).collect();
        means.sort_by(f64::total_cmp);
        assert_eq!(means, vec![0.0, 0.5, 1.0]);
        assert!((measure_variational_value(&cs).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_mean_matches_karp() {
        for (h1, h2) in [(0.0, 0.0), (1.0, 0.0), (-0.4, 0.9)] {
            let (env, steps) = presets::stripes();
            let q = build_quotient(&env, &steps).unwrap();
            let a = build_maxplus_matrix(&q, &Tilt::new(vec![h1, h2]).unwrap());
            let cs = enumerate_circuits(&a, DEFAULT_CIRCUIT_CAP);
            let v1 = measure_variational_value(&cs).unwrap();
            let v2 = karp_eigenvalue(&a);
            assert!((v1 - v2).abs() < 1e-12);
        }
    }

    #[test]
    fn stripes_case_two_value() {
        let cs = stripes_circuits(1.0, 0.0);
        assert!((measure_variational_value(&cs).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn single_state_two_loops() {
        let env = PeriodicEnvironment::new(2, vec![1, 1], vec![0.3f64]).unwrap();
        let steps = StepSet::e1_e2();
        let q = build_quotient(&env, &steps).unwrap();
        let a = build_maxplus_matrix(&q, &Tilt::new(vec![0.5f64, -0.5]).unwrap());
        // matrix keeps only the argmax loop label; the losing parallel step
        // is dropped, so exactly one circuit remains
        let cs = enumerate_circuits(&a, 10);
        assert_eq!(cs.circuits.len(), 1);
        assert!((cs.circuits[0].mean_weight - 0.8).abs() < 1e-12);
        // at h = 0 both loops survive as parallel circuits
        let a = build_maxplus_matrix(&q, &Tilt::zero(2));
        let cs = enumerate_circuits(&a, 10);
        assert_eq!(cs.circuits.len(), 2);
    }

    #[test]
    fn three_cycle_single_circuit() {
        let env = PeriodicEnvironment::new(1, vec![3], vec![0.0f64, 1.0, 2.0]).unwrap();
        let steps = StepSet::new(1, vec![vec![1]]).unwrap();
        let q = build_quotient(&env, &steps).unwrap();
        let a = build_maxplus_matrix(&q, &Tilt::zero(1));
        let cs = enumerate_circuits(&a, 10);
        assert_eq!(cs.circuits.len(), 1);
        assert_eq!(cs.circuits[0].len, 3);
        assert!((cs.circuits[0].mean_weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cap_flags_incomplete() {
        let cs = {
            let (env, steps) = presets::stripes();
            let q = build_quotient(&env, &steps).unwrap();
            let a = build_maxplus_matrix(&q, &Tilt::zero(2));
            enumerate_circuits(&a, 1)
        };
        assert!(!cs.complete);
        assert!(matches!(
            measure_variational_value(&cs),
            Err(Error::IncompleteCircuits)
        ));
    }

    #[test]
    fn uniform_measure_is_feasible_lower_bound() {
        // E over (state, step) with both marginals uniform is a feasible
        // point of the measure variational formula, so its value is <= lambda
        for seed in [2u64, 9, 33] {
            let q = crate::presets::random_quotient(seed, 6);
            let h = Tilt::new(vec![0.2; q.steps().dim()]).unwrap();
            let a = build_maxplus_matrix(&q, &h);
            let lambda = karp_eigenvalue(&a);
            let mut mean = 0.0;
            for w in 0..q.m() {
                for z in 0..q.steps().len() {
                    mean += q.v0(w) + h.dot_step(q.steps().step(z));
                }
            }
            mean /= (q.m() * q.steps().len()) as f64;
            assert!(mean <= lambda + 1e-12);
        }
    }

    #[test]
    fn gpp_cross_checks_against_tilt_infimum() {
        // stripes at xi = (1/2, 1/2): inf_h [lambda(h) - h.xi] along h2 = 0
        // is attained at h1 = 1/2 with value 3/4, matching the hull LP
        let cs = stripes_circuits(0.0, 0.0);
        let v = Velocity::planar(0.5).unwrap();
        let hull = gpp_periodic(&cs, &v).unwrap();
        let (env, steps) = presets::stripes();
        let q = build_quotient(&env, &steps).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            let a = build_maxplus_matrix(&q, &Tilt::new(vec![t, 0.0]).unwrap());
            best = best.min(karp_eigenvalue(&a) - 0.5 * t);
        }
        assert!((hull - best).abs() < 1e-9);
        assert!((hull - 0.75).abs() < 1e-12);
    }

    #[test]
    fn gpp_hull_values() {
        let cs = stripes_circuits(0.0, 0.0);
        let cases = [
            (0.0, 1.0_f64),  // pure e2 loop at the weight-1 state
            (1.0, 0.5),      // the e1 e1 two-cycle
            (0.5, 0.75),     // best mixture of the two
            (0.25, 0.875),
        ];
        for (s, expect) in cases {
            let v = Velocity::planar(s).unwrap();
            let got = gpp_periodic(&cs, &v).unwrap();
            assert!((got - expect).abs() < 1e-9, "s = {s}: {got} vs {expect}");
        }
        // tilted circuits give the same untilted hull
        let cs = stripes_circuits(0.7, -0.2);
        for (s, expect) in cases {
            let v = Velocity::planar(s).unwrap();
            let got = gpp_periodic(&cs, &v).unwrap();
            assert!((got - expect).abs() < 1e-9, "tilted s = {s}");
        }
    }

    #[test]
    fn gpp_infeasible_velocity() {
        // circuits built over R = {+1, +2} span mean steps in [1, 2]; a
        // velocity from a different step set can fall outside that hull
        let env = PeriodicEnvironment::new(1, vec![3], vec![0.0f64, 1.0, 2.0]).unwrap();
        let steps = StepSet::new(1, vec![vec![1], vec![2]]).unwrap();
        let q = build_quotient(&env, &steps).unwrap();
        let a = build_maxplus_matrix(&q, &Tilt::zero(1));
        let cs = enumerate_circuits(&a, 1000);
        let v = Velocity::from_alphas(&steps, vec![1.0, 0.0]).unwrap();
        assert!(gpp_periodic(&cs, &v).is_ok());
        let zero_steps = StepSet::new(1, vec![vec![0], vec![1]]).unwrap();
        let outside = Velocity::from_alphas(&zero_steps, vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            gpp_periodic(&cs, &outside),
            Err(Error::InfeasibleVelocity { .. })
        ));
    }
}
