//! Periodic weight fields on `Z^d` and their finite quotient spaces.
//!
//! A periodic environment is a weight table on a fundamental rectangle,
//! extended periodically. The quotient space is the orbit of the origin's
//! residue class under the step group, with states that are indistinguishable
//! under every shift word merged away (partition refinement), so the striped
//! two-state example really produces two states and a constant field produces
//! one.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::StepSet;
use crate::Scalar;

/// A periodic, tilt-independent potential `V0` on `Z^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicEnvironment<T> {
    dim: usize,
    period: Vec<i64>,
    weights: Vec<T>,
}

impl<T: Scalar> PeriodicEnvironment<T> {
    /// `weights` is row-major over the fundamental rectangle
    /// `{0 <= x_i < period_i}`, last coordinate fastest.
    pub fn new(dim: usize, period: Vec<i64>, weights: Vec<T>) -> Result<Self> {
        if dim == 0 || period.len() != dim {
            return Err(Error::InvalidInput(
                "period must have one positive entry per dimension".into(),
            ));
        }
        if period.iter().any(|&p| p < 1) {
            return Err(Error::InvalidInput("period entries must be >= 1".into()));
        }
        let cells: i64 = period.iter().product();
        if weights.len() as i64 != cells {
            return Err(Error::InvalidInput(format!(
                "expected {} weights, got {}",
                cells,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("weights must be finite".into()));
        }
        Ok(Self {
            dim,
            period,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> &[i64] {
        &self.period
    }

    fn cell_index(&self, residue: &[i64]) -> usize {
        let mut idx = 0i64;
        for (r, p) in residue.iter().zip(self.period.iter()) {
            debug_assert!(*r >= 0 && r < p);
            idx = idx * p + r;
        }
        idx as usize
    }

    /// Weight of the cell containing lattice point `x`.
    pub fn weight_at(&self, x: &[i64]) -> T {
        let residue: Vec<i64> = x
            .iter()
            .zip(self.period.iter())
            .map(|(xi, p)| xi.rem_euclid(*p))
            .collect();
        self.weights[self.cell_index(&residue)]
    }
}

/// On-disk schema for periodic environments:
/// `{dimension, period: [...], weights: [row-major flat array], steps: [[...], ...]}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodicEnvFile {
    dimension: usize,
    period: Vec<i64>,
    weights: Vec<f64>,
    steps: Vec<Vec<i64>>,
}

/// Parses the JSON document form of a periodic environment.
pub fn load_json(text: &str) -> Result<(PeriodicEnvironment<f64>, StepSet)> {
    let file: PeriodicEnvFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("bad JSON: {e}")))?;
    let env = PeriodicEnvironment::new(file.dimension, file.period, file.weights)?;
    let steps = StepSet::new(file.dimension, file.steps)?;
    Ok((env, steps))
}

/// The finite environment space: states, shift action `T_z`, and base
/// weights, with the uniform ergodic measure implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientSpace<T> {
    m: usize,
    steps: StepSet,
    shift: Vec<usize>, // m x |R|, row-major
    v0: Vec<T>,
    labels: Vec<String>,
}

impl<T: Scalar> QuotientSpace<T> {
    /// Validates a raw shift table: totality is by construction, every `T_z`
    /// must be a bijection, the `T_z` must commute, and the step graph must
    /// be strongly connected.
    pub fn from_parts(
        steps: StepSet,
        shift: Vec<usize>,
        v0: Vec<T>,
        labels: Vec<String>,
    ) -> Result<Self> {
        let m = v0.len();
        let k = steps.len();
        if m == 0 {
            return Err(Error::InvalidInput("empty quotient".into()));
        }
        if shift.len() != m * k || labels.len() != m {
            return Err(Error::InvalidInput("shift table shape mismatch".into()));
        }
        if shift.iter().any(|&s| s >= m) {
            return Err(Error::InvalidInput("shift table out of range".into()));
        }
        let q = Self {
            m,
            steps,
            shift,
            v0,
            labels,
        };
        for z in 0..k {
            let mut seen = vec![false; m];
            for s in 0..m {
                seen[q.shift(s, z)] = true;
            }
            if !seen.iter().all(|&b| b) {
                return Err(Error::InvalidInput(format!(
                    "shift by step {z} is not a bijection"
                )));
            }
        }
        for s in 0..m {
            for z1 in 0..k {
                for z2 in z1 + 1..k {
                    if q.shift(q.shift(s, z1), z2) != q.shift(q.shift(s, z2), z1) {
                        return Err(Error::InvalidInput(format!(
                            "shifts by steps {z1} and {z2} do not commute at state {s}"
                        )));
                    }
                }
            }
        }
        q.check_irreducible()?;
        Ok(q)
    }

    fn check_irreducible(&self) -> Result<()> {
        // forward reachability from state 0, then backward
        let fwd = self.reachable_from(0, false);
        if let Some(s) = fwd.iter().position(|&b| !b) {
            return Err(Error::NotIrreducible {
                from: self.labels[0].clone(),
                to: self.labels[s].clone(),
            });
        }
        let bwd = self.reachable_from(0, true);
        if let Some(s) = bwd.iter().position(|&b| !b) {
            return Err(Error::NotIrreducible {
                from: self.labels[s].clone(),
                to: self.labels[0].clone(),
            });
        }
        Ok(())
    }

    fn reachable_from(&self, start: usize, reversed: bool) -> Vec<bool> {
        let mut adj = vec![Vec::new(); self.m];
        for s in 0..self.m {
            for z in 0..self.steps.len() {
                let t = self.shift(s, z);
                if reversed {
                    adj[t].push(s);
                } else {
                    adj[s].push(t);
                }
            }
        }
        let mut seen = vec![false; self.m];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(s) = stack.pop() {
            for &t in &adj[s] {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn steps(&self) -> &StepSet {
        &self.steps
    }

    pub fn v0(&self, state: usize) -> T {
        self.v0[state]
    }

    pub fn base_weights(&self) -> &[T] {
        &self.v0
    }

    /// `T_z` applied to a state, `z` given as a step index.
    pub fn shift(&self, state: usize, step: usize) -> usize {
        self.shift[state * self.steps.len() + step]
    }

    pub fn label(&self, state: usize) -> &str {
        &self.labels[state]
    }

    /// The invariant ergodic measure `P(w) = 1/m`.
    pub fn uniform_measure(&self) -> Vec<T> {
        vec![T::one() / T::of_usize(self.m); self.m]
    }

    /// Largest `|V0|`, used by the transfer-matrix overflow guard.
    pub fn max_abs_weight(&self) -> T {
        self.v0
            .iter()
            .fold(T::zero(), |acc, w| acc.max(w.abs()))
    }
}

/// Builds the minimal quotient of a periodic environment: the orbit of the
/// origin's residue under the step group, followed by merging of states that
/// no sequence of shifts can distinguish through `V0`.
pub fn build_quotient<T: Scalar>(
    env: &PeriodicEnvironment<T>,
    steps: &StepSet,
) -> Result<QuotientSpace<T>> {
    if steps.dim() != env.dim() {
        return Err(Error::InvalidInput(
            "step set and environment dimension mismatch".into(),
        ));
    }
    // orbit of residue 0 under the (finite abelian) group generated by the steps
    let total_cells: i64 = env.period().iter().product();
    let mut index_of = vec![usize::MAX; total_cells as usize];
    let mut residues: Vec<Vec<i64>> = Vec::new();
    let origin = vec![0i64; env.dim()];
    index_of[env.cell_index(&origin)] = 0;
    residues.push(origin);
    let mut head = 0;
    while head < residues.len() {
        let cur = residues[head].clone();
        head += 1;
        for z in steps.steps() {
            let nxt: Vec<i64> = cur
                .iter()
                .zip(z.iter())
                .zip(env.period().iter())
                .map(|((c, zj), p)| (c + zj).rem_euclid(*p))
                .collect();
            let cell = env.cell_index(&nxt);
            if index_of[cell] == usize::MAX {
                index_of[cell] = residues.len();
                residues.push(nxt);
            }
        }
    }
    let n = residues.len();
    let k = steps.len();
    let mut orbit_shift = vec![0usize; n * k];
    for (s, r) in residues.iter().enumerate() {
        for (zi, z) in steps.steps().iter().enumerate() {
            let nxt: Vec<i64> = r
                .iter()
                .zip(z.iter())
                .zip(env.period().iter())
                .map(|((c, zj), p)| (c + zj).rem_euclid(*p))
                .collect();
            orbit_shift[s * k + zi] = index_of[env.cell_index(&nxt)];
        }
    }
    let weights: Vec<T> = residues.iter().map(|r| env.weight_at(r)).collect();

    // partition refinement: distinguishability classes of (V0 o shift-word)
    let mut class = initial_classes(&weights);
    loop {
        let mut signature: Vec<(usize, Vec<usize>)> = Vec::with_capacity(n);
        for s in 0..n {
            let succ: Vec<usize> = (0..k).map(|z| class[orbit_shift[s * k + z]]).collect();
            signature.push((class[s], succ));
        }
        let mut sorted: Vec<usize> = (0..n).collect();
        sorted.sort_by(|&a, &b| signature[a].cmp(&signature[b]));
        let mut next_class = vec![0usize; n];
        let mut current = 0;
        for w in 1..n {
            if signature[sorted[w]] != signature[sorted[w - 1]] {
                current += 1;
            }
            next_class[sorted[w]] = current;
        }
        if next_class == class {
            break;
        }
        class = next_class;
    }

    // canonical order: classes sorted by their smallest orbit representative
    let nclasses = class.iter().max().unwrap() + 1;
    let mut rep = vec![usize::MAX; nclasses];
    for s in (0..n).rev() {
        rep[class[s]] = s;
    }
    let mut order: Vec<usize> = (0..nclasses).collect();
    order.sort_by_key(|&c| rep[c]);
    let mut rank = vec![0usize; nclasses];
    for (i, &c) in order.iter().enumerate() {
        rank[c] = i;
    }

    let mut shift = vec![0usize; nclasses * k];
    let mut v0 = vec![T::zero(); nclasses];
    let mut labels = vec![String::new(); nclasses];
    for (i, &c) in order.iter().enumerate() {
        let s = rep[c];
        v0[i] = weights[s];
        labels[i] = format!("{:?}", residues[s]);
        for z in 0..k {
            shift[i * k + z] = rank[class[orbit_shift[s * k + z]]];
        }
    }
    QuotientSpace::from_parts(steps.clone(), shift, v0, labels)
}

/// Groups states by exactly equal weights; class ids numbered by first
/// appearance so the ordering of states stays deterministic.
fn initial_classes<T: Scalar>(weights: &[T]) -> Vec<usize> {
    let n = weights.len();
    let mut sorted: Vec<usize> = (0..n).collect();
    sorted.sort_by(|&a, &b| weights[a].partial_cmp(&weights[b]).unwrap());
    let mut class = vec![0usize; n];
    let mut current = 0;
    for w in 1..n {
        if weights[sorted[w]] != weights[sorted[w - 1]] {
            current += 1;
        }
        class[sorted[w]] = current;
    }
    class
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn stripes_has_two_states_and_identity_vertical_shift() {
        let (env, steps) = presets::stripes();
        let q = build_quotient(&env, &steps).unwrap();
        assert_eq!(q.m(), 2);
        // state 0 is the origin's class (weight 1), state 1 has weight 0
        assert_eq!(q.v0(0), 1.0);
        assert_eq!(q.v0(1), 0.0);
        // T_{e1} swaps, T_{e2} is the identity
        assert_eq!(q.shift(0, 0), 1);
        assert_eq!(q.shift(1, 0), 0);
        assert_eq!(q.shift(0, 1), 0);
        assert_eq!(q.shift(1, 1), 1);
    }

    #[test]
    fn constant_field_merges_to_one_state() {
        let env = PeriodicEnvironment::new(2, vec![3, 2], vec![0.7; 6]).unwrap();
        let steps = StepSet::e1_e2();
        let q = build_quotient(&env, &steps).unwrap();
        assert_eq!(q.m(), 1);
        for z in 0..2 {
            assert_eq!(q.shift(0, z), 0);
        }
    }

    #[test]
    fn one_dimensional_cycle() {
        let env = PeriodicEnvironment::new(1, vec![3], vec![0.0, 1.0, 2.0]).unwrap();
        let steps = StepSet::new(1, vec![vec![1]]).unwrap();
        let q = build_quotient(&env, &steps).unwrap();
        assert_eq!(q.m(), 3);
        assert_eq!(q.shift(0, 0), 1);
        assert_eq!(q.shift(1, 0), 2);
        assert_eq!(q.shift(2, 0), 0);
    }

    #[test]
    fn shifts_commute_and_are_bijections() {
        let (env, steps) = presets::stripes();
        let q = build_quotient(&env, &steps).unwrap();
        for s in 0..q.m() {
            for z1 in 0..steps.len() {
                for z2 in 0..steps.len() {
                    assert_eq!(
                        q.shift(q.shift(s, z1), z2),
                        q.shift(q.shift(s, z2), z1)
                    );
                }
            }
        }
        // uniform measure is invariant under each bijection
        let mu = q.uniform_measure();
        for z in 0..steps.len() {
            let mut pushed = vec![0.0; q.m()];
            for s in 0..q.m() {
                pushed[q.shift(s, z)] += mu[s];
            }
            for s in 0..q.m() {
                assert!((pushed[s] - mu[s]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn non_irreducible_quotient_rejected() {
        // two states with identity shifts: valid commuting bijections, but
        // state 1 is unreachable from state 0
        let steps = StepSet::new(1, vec![vec![1]]).unwrap();
        let err = QuotientSpace::from_parts(
            steps,
            vec![0, 1],
            vec![0.0, 1.0],
            vec!["a".into(), "b".into()],
        )
        .unwrap_err();
        match err {
            Error::NotIrreducible { from, to } => {
                assert_eq!(from, "a");
                assert_eq!(to, "b");
            }
            other => panic!("expected NotIrreducible, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "dimension": 2,
            "period": [2, 1],
            "weights": [1.0, 0.0],
            "steps": [[1, 0], [0, 1]]
        }"#;
        let (env, steps) = load_json(text).unwrap();
        let q = build_quotient(&env, &steps).unwrap();
        assert_eq!(q.m(), 2);
        assert!(load_json("{ not json").is_err());
        assert!(load_json(r#"{"dimension": 2, "period": [2], "weights": [], "steps": []}"#).is_err());
        // unknown keys rejected
        assert!(load_json(
            r#"{"dimension": 1, "period": [1], "weights": [0.0], "steps": [[1]], "extra": 3}"#
        )
        .is_err());
    }
}
