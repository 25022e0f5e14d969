//! Zero-temperature periodic solver: eigenvalue, eigenvector and critical
//! graph of the max-plus transfer matrix.
//!
//! The matrix over the quotient has entries
//! `A(w, w') = V0(w) + max_{z : T_z w = w'} h.z` (and `-inf` off the shift
//! pattern). Its unique eigenvalue equals the point-to-level last-passage
//! constant and is computed three independent ways: Karp's minimum-cycle-mean
//! recurrence ([`karp_eigenvalue`]), complete elementary-circuit enumeration
//! ([`circuits::enumerate_circuits`]), and bisection over difference
//! constraints ([`minmax_via_difference_constraints`]). Eigenvectors come
//! from the Kleene star of the normalized matrix and yield correctors and
//! Busemann asymptotics.

pub mod circuits;

pub use circuits::{
    enumerate_circuits, gpp_periodic, measure_variational_value, Circuit, CircuitSet,
    DEFAULT_CIRCUIT_CAP,
};

use crate::cocycle::GradientCocycle;
use crate::error::{Error, Result};
use crate::model::{StepSet, Tilt};
use crate::periodic::QuotientSpace;
use crate::Scalar;

/// Tolerance for membership of a node or edge in the critical graph.
pub const CRITICAL_TIE_TOL: f64 = 1e-9;

/// Default bracket width at which the difference-constraint bisection stops.
pub const DEFAULT_MINMAX_TOL: f64 = 1e-10;

/// Irreducible matrix over the max-plus semiring `(R u {-inf}, max, +)`,
/// with the multigraph step labels retained for circuit bookkeeping.
#[derive(Debug, Clone)]
pub struct MaxPlusMatrix<T> {
    m: usize,
    entries: Vec<T>,
    /// Steps attaining each finite entry; parallel steps that lose the
    /// `max h.z` are dropped from the matrix and from the labels.
    edge_steps: Vec<Vec<usize>>,
    steps: StepSet,
    tilt: Tilt<T>,
}

impl<T: Scalar> MaxPlusMatrix<T> {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entry(&self, from: usize, to: usize) -> T {
        self.entries[from * self.m + to]
    }

    pub fn edge_steps(&self, from: usize, to: usize) -> &[usize] {
        &self.edge_steps[from * self.m + to]
    }

    pub fn steps(&self) -> &StepSet {
        &self.steps
    }

    pub fn tilt(&self) -> &Tilt<T> {
        &self.tilt
    }

    /// Smallest and largest finite entry; the eigenvalue lies between them.
    pub fn finite_entry_range(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for &e in &self.entries {
            if e.is_finite() {
                lo = lo.min(e);
                hi = hi.max(e);
            }
        }
        (lo, hi)
    }

    fn adjacency(&self) -> Vec<Vec<(usize, T)>> {
        (0..self.m)
            .map(|u| {
                (0..self.m)
                    .filter(|&v| self.entry(u, v) != T::neg_infinity())
                    .map(|v| (v, self.entry(u, v)))
                    .collect()
            })
            .collect()
    }
}

/// Builds the max-plus transfer matrix of a tilted periodic potential.
pub fn build_maxplus_matrix<T: Scalar>(q: &QuotientSpace<T>, h: &Tilt<T>) -> MaxPlusMatrix<T> {
    let m = q.m();
    let k = q.steps().len();
    let mut entries = vec![T::neg_infinity(); m * m];
    let mut edge_steps = vec![Vec::new(); m * m];
    for w in 0..m {
        for z in 0..k {
            let to = q.shift(w, z);
            let weight = q.v0(w) + h.dot_step(q.steps().step(z));
            let slot = w * m + to;
            if weight > entries[slot] + T::of(1e-15) * (T::one() + weight.abs()) {
                entries[slot] = weight;
                edge_steps[slot] = vec![z];
            } else if (weight - entries[slot]).abs()
                <= T::of(1e-15) * (T::one() + weight.abs())
            {
                edge_steps[slot].push(z);
            }
        }
    }
    MaxPlusMatrix {
        m,
        entries,
        edge_steps,
        steps: q.steps().clone(),
        tilt: h.clone(),
    }
}

/// Maximum cycle mean by Karp's dynamic program from a fixed source:
/// `D_k(v)` is the best weight of a `k`-step walk from state 0 to `v`, and
/// `lambda = max_v min_{0<=k<m} (D_m(v) - D_k(v)) / (m - k)` over finite
/// entries. Arithmetic is plain `f64`/`f32`; equality tests against the other
/// two eigenvalue routes are made with 1e-12 slack.
pub fn karp_eigenvalue<T: Scalar>(a: &MaxPlusMatrix<T>) -> T {
    karp_dense(a.m, &a.entries)
}

/// Karp's recurrence on a flat row-major matrix with `-inf` marking absent
/// edges; shared with the transfer-matrix solver, which uses the max cycle
/// mean of the log entries to scale its diagonal shift.
pub(crate) fn karp_dense<T: Scalar>(m: usize, entries: &[T]) -> T {
    let neg = T::neg_infinity();
    let adj: Vec<Vec<(usize, T)>> = (0..m)
        .map(|u| {
            (0..m)
                .filter(|&v| entries[u * m + v] != neg)
                .map(|v| (v, entries[u * m + v]))
                .collect()
        })
        .collect();
    let mut d = vec![vec![neg; m]; m + 1];
    d[0][0] = T::zero();
    for k in 1..=m {
        for u in 0..m {
            if d[k - 1][u] == neg {
                continue;
            }
            for &(v, w) in &adj[u] {
                let cand = d[k - 1][u] + w;
                if cand > d[k][v] {
                    d[k][v] = cand;
                }
            }
        }
    }
    let mut lambda = neg;
    for v in 0..m {
        if d[m][v] == neg {
            continue;
        }
        let mut best = T::infinity();
        for k in 0..m {
            if d[k][v] == neg {
                continue;
            }
            let mean = (d[m][v] - d[k][v]) / T::of_usize(m - k);
            best = best.min(mean);
        }
        lambda = lambda.max(best);
    }
    lambda
}

/// Minimal `t` such that the difference constraints
/// `f(T_z w) - f(w) <= t - A(w, T_z w)` are feasible, located by bisection
/// with Bellman-Ford negative-cycle detection; the feasible potential is a
/// max-plus eigenvector up to the usual additive constant. Returns the value
/// (within `tol` of the eigenvalue) and the potential.
pub fn minmax_via_difference_constraints<T: Scalar>(
    a: &MaxPlusMatrix<T>,
    tol: T,
) -> (T, GradientCocycle<T>) {
    assert!(tol > T::zero(), "tolerance must be positive");
    let m = a.m();
    let mut edges = Vec::new();
    for u in 0..m {
        for v in 0..m {
            let w = a.entry(u, v);
            if w != T::neg_infinity() {
                edges.push((u, v, w));
            }
        }
    }
    let (mut lo, hi0) = a.finite_entry_range();
    let mut hi = hi0;
    if let Some(f) = feasible_potential(m, &edges, lo) {
        return (lo, GradientCocycle::new(f));
    }
    debug_assert!(feasible_potential(m, &edges, hi).is_some());
    while hi - lo > tol {
        let mid = lo + (hi - lo) / T::of(2.0);
        if feasible_potential(m, &edges, mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let f = feasible_potential(m, &edges, hi).expect("upper bracket stays feasible");
    (hi, GradientCocycle::new(f))
}

/// Bellman-Ford with an implicit source connected to every node at distance
/// zero; `None` when the constraint graph `weight(u -> v) = t - A(u, v)`
/// has a negative cycle.
fn feasible_potential<T: Scalar>(m: usize, edges: &[(usize, usize, T)], t: T) -> Option<Vec<T>> {
    let mut dist = vec![T::zero(); m];
    for round in 0..=m {
        let mut changed = false;
        for &(u, v, w) in edges {
            let cand = dist[u] + (t - w);
            if cand < dist[v] - T::of(1e-15) * (T::one() + dist[v].abs()) {
                dist[v] = cand;
                changed = true;
            }
        }
        if !changed {
            return Some(dist);
        }
        if round == m {
            return None;
        }
    }
    unreachable!()
}

/// A strongly connected component of the critical graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalComponent {
    pub nodes: Vec<usize>,
    /// gcd of the lengths of the component's critical cycles.
    pub cyclicity: usize,
}

/// Eigenvalue, canonical eigenvector, and critical-graph structure.
#[derive(Debug, Clone)]
pub struct MaxPlusEigen<T> {
    pub lambda: T,
    /// Kleene-star column at the smallest critical node, normalized so that
    /// `sigma(state 0) = 0`. Other eigenvectors may exist; the full solution
    /// family is visible through the difference-constraint feasible set.
    pub sigma: Vec<T>,
    pub critical_nodes: Vec<usize>,
    /// `(from, to, step)` triples attaining the maximum on critical circuits.
    pub critical_edges: Vec<(usize, usize, usize)>,
    pub components: Vec<CriticalComponent>,
    /// Irreducible with one critical component of cyclicity 1.
    pub primitive: bool,
    /// Nodes whose best cycle mean is within `1e-9` of the eigenvalue but
    /// does not reach it: near-ties the critical classification cannot
    /// resolve. Empty in the generic case.
    pub degenerate_nodes: Vec<usize>,
}

impl<T: Scalar> MaxPlusEigen<T> {
    /// Largest residual of `max_{w'}[A(w, w') + sigma(w')] = lambda + sigma(w)`.
    pub fn eigen_residual(&self, a: &MaxPlusMatrix<T>) -> T {
        let m = a.m();
        let mut worst = T::zero();
        for w in 0..m {
            let mut lhs = T::neg_infinity();
            for w2 in 0..m {
                let e = a.entry(w, w2);
                if e != T::neg_infinity() {
                    lhs = lhs.max(e + self.sigma[w2]);
                }
            }
            worst = worst.max((lhs - self.lambda - self.sigma[w]).abs());
        }
        worst
    }
}

/// Kleene-star construction of the eigenvector and the critical graph of an
/// irreducible max-plus matrix with eigenvalue `lambda`.
pub fn eigenvector_and_critical_graph<T: Scalar>(
    a: &MaxPlusMatrix<T>,
    lambda: T,
) -> MaxPlusEigen<T> {
    let m = a.m();
    let neg = T::neg_infinity();
    let tie = T::of(CRITICAL_TIE_TOL);

    // plus = all-pairs best nonempty-path weights of A - lambda
    let mut plus = vec![neg; m * m];
    for u in 0..m {
        for v in 0..m {
            let e = a.entry(u, v);
            if e != neg {
                plus[u * m + v] = e - lambda;
            }
        }
    }
    for k in 0..m {
        for u in 0..m {
            let uk = plus[u * m + k];
            if uk == neg {
                continue;
            }
            for v in 0..m {
                let kv = plus[k * m + v];
                if kv != neg && uk + kv > plus[u * m + v] {
                    plus[u * m + v] = uk + kv;
                }
            }
        }
    }
    let star = |u: usize, v: usize| -> T {
        if u == v {
            plus[u * m + v].max(T::zero())
        } else {
            plus[u * m + v]
        }
    };

    let critical_nodes: Vec<usize> = (0..m).filter(|&v| plus[v * m + v] >= -tie).collect();
    let degenerate_nodes: Vec<usize> = (0..m)
        .filter(|&v| {
            plus[v * m + v] < -tie && plus[v * m + v] >= -tie * T::of_usize(m.max(2))
        })
        .collect();

    let mut critical_edges = Vec::new();
    for u in 0..m {
        for v in 0..m {
            let e = a.entry(u, v);
            if e == neg {
                continue;
            }
            if e - lambda + star(v, u) >= -tie {
                for &z in a.edge_steps(u, v) {
                    critical_edges.push((u, v, z));
                }
            }
        }
    }

    let components = critical_components(m, &critical_nodes, &critical_edges);
    let primitive = components.len() == 1 && components[0].cyclicity == 1;

    let sigma = match critical_nodes.first() {
        Some(&c) => {
            let raw: Vec<T> = (0..m).map(|v| star(v, c)).collect();
            let base = raw[0];
            raw.into_iter().map(|x| x - base).collect()
        }
        // numerically no node closed a zero cycle; fall back to the
        // difference-constraint potential
        None => {
            let (_, f) = minmax_via_difference_constraints(a, T::of(DEFAULT_MINMAX_TOL));
            let base = f.value(0);
            f.potential().iter().map(|&x| x - base).collect()
        }
    };

    MaxPlusEigen {
        lambda,
        sigma,
        critical_nodes,
        critical_edges,
        components,
        primitive,
        degenerate_nodes,
    }
}

/// Tarjan SCCs of the critical subgraph plus per-component cyclicity.
fn critical_components(
    m: usize,
    nodes: &[usize],
    edges: &[(usize, usize, usize)],
) -> Vec<CriticalComponent> {
    let mut adj = vec![Vec::new(); m];
    let is_node = {
        let mut mask = vec![false; m];
        for &v in nodes {
            mask[v] = true;
        }
        mask
    };
    for &(u, v, _) in edges {
        if is_node[u] && is_node[v] && !adj[u].contains(&v) {
            adj[u].push(v);
        }
    }

    // iterative Tarjan
    let mut index = vec![usize::MAX; m];
    let mut lowlink = vec![0usize; m];
    let mut on_stack = vec![false; m];
    let mut stack = Vec::new();
    let mut next_index = 0usize;
    let mut sccs: Vec<Vec<usize>> = Vec::new();
    for &root in nodes {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut ei)) = call.last_mut() {
            if *ei == 0 {
                index[v] = next_index;
                lowlink[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *ei < adj[v].len() {
                let w = adj[v][*ei];
                *ei += 1;
                if index[w] == usize::MAX {
                    call.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
            } else {
                if lowlink[v] == index[v] {
                    let mut comp = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    sccs.push(comp);
                }
                let lv = lowlink[v];
                call.pop();
                if let Some(&mut (p, _)) = call.last_mut() {
                    lowlink[p] = lowlink[p].min(lv);
                }
            }
        }
    }
    sccs.sort_by_key(|c| c[0]);

    sccs.into_iter()
        .map(|comp| {
            let cyclicity = component_cyclicity(&comp, edges);
            CriticalComponent {
                nodes: comp,
                cyclicity,
            }
        })
        .collect()
}

/// gcd of critical cycle lengths inside one SCC: breadth-first levels from
/// the first node, and gcd of `level(u) + 1 - level(v)` over internal edges.
fn component_cyclicity(comp: &[usize], edges: &[(usize, usize, usize)]) -> usize {
    let inside = |v: usize| comp.binary_search(&v).is_ok();
    let mut level = vec![None::<i64>; comp.len()];
    let pos = |v: usize| comp.binary_search(&v).unwrap();
    level[0] = Some(0);
    let mut queue = std::collections::VecDeque::from([comp[0]]);
    while let Some(u) = queue.pop_front() {
        for &(a, b, _) in edges {
            if a == u && inside(b) && level[pos(b)].is_none() {
                level[pos(b)] = Some(level[pos(u)].unwrap() + 1);
                queue.push_back(b);
            }
        }
    }
    let mut g: i64 = 0;
    for &(u, v, _) in edges {
        if inside(u) && inside(v) {
            if let (Some(lu), Some(lv)) = (level[pos(u)], level[pos(v)]) {
                g = gcd(g, (lu + 1 - lv).abs());
            }
        }
    }
    g.max(1) as usize
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `G_{0,(n)}(h)` started from every state: the max-plus powers
/// `(A^{x n} (x) 0)(w)`, returned for `n = 0..=n_max`.
pub fn point_to_level_values<T: Scalar>(a: &MaxPlusMatrix<T>, n_max: usize) -> Vec<Vec<T>> {
    let m = a.m();
    let adj = a.adjacency();
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(vec![T::zero(); m]);
    for _ in 1..=n_max {
        let prev = out.last().unwrap();
        let mut next = vec![T::neg_infinity(); m];
        for u in 0..m {
            for &(v, w) in &adj[u] {
                next[u] = next[u].max(w + prev[v]);
            }
        }
        out.push(next);
    }
    out
}

/// Finite-`n` point-to-level gradient along one `(state, step)` pair.
#[derive(Debug, Clone, PartialEq)]
pub enum BusemannBehavior<T> {
    /// The gradients settled to a single value.
    Limit(T),
    /// The gradients settled into a cycle; `values` are the last `period`
    /// observations in trace order.
    Oscillation { period: usize, values: Vec<T> },
    /// Neither stabilized within the window: legitimate when the transient
    /// outlasts `n_max`.
    Undetermined,
}

#[derive(Debug, Clone)]
pub struct BusemannEdgeReport<T> {
    pub state: usize,
    pub step: usize,
    /// `G_{0,(n)}(h) - G_{z,(n-1)}(h)` for `n = 1..=n_max`.
    pub trace: Vec<T>,
    pub behavior: BusemannBehavior<T>,
    /// `lambda + sigma(w) - sigma(T_z w)`: the limit whenever the matrix is
    /// primitive.
    pub formula: T,
}

#[derive(Debug, Clone)]
pub struct MaxPlusBusemann<T> {
    pub eigen: MaxPlusEigen<T>,
    pub reports: Vec<BusemannEdgeReport<T>>,
}

/// Runs the max-plus power asymptotics
/// `(A^{x n} (x) 0)(w) - (A^{x (n-1)} (x) 0)(T_z w)` for each state and step
/// up to `n_max`, then classifies each trace over a window of twice the lcm
/// of the critical cyclicities.
pub fn busemann_maxplus<T: Scalar>(
    a: &MaxPlusMatrix<T>,
    q: &QuotientSpace<T>,
    n_max: usize,
) -> Result<MaxPlusBusemann<T>> {
    let m = a.m();
    if n_max < 2 * m {
        return Err(Error::InvalidInput(format!(
            "n_max = {n_max} must be at least 2m = {}",
            2 * m
        )));
    }
    let lambda = karp_eigenvalue(a);
    let eigen = eigenvector_and_critical_graph(a, lambda);
    let values = point_to_level_values(a, n_max);
    let lcm_cyc = eigen
        .components
        .iter()
        .fold(1usize, |acc, c| lcm(acc, c.cyclicity));
    let window = (2 * lcm_cyc).clamp(2, n_max / 2);

    let mut reports = Vec::new();
    for state in 0..m {
        for step in 0..q.steps().len() {
            let shifted = q.shift(state, step);
            let trace: Vec<T> = (1..=n_max)
                .map(|n| values[n][state] - values[n - 1][shifted])
                .collect();
            let behavior = classify_trace(&trace, window, T::of(CRITICAL_TIE_TOL));
            let formula = lambda + eigen.sigma[state] - eigen.sigma[shifted];
            reports.push(BusemannEdgeReport {
                state,
                step,
                trace,
                behavior,
                formula,
            });
        }
    }
    Ok(MaxPlusBusemann { eigen, reports })
}

fn classify_trace<T: Scalar>(trace: &[T], window: usize, tol: T) -> BusemannBehavior<T> {
    let n = trace.len();
    let tail = &trace[n - window.min(n)..];
    let hi = tail.iter().cloned().fold(T::neg_infinity(), T::max);
    let lo = tail.iter().cloned().fold(T::infinity(), T::min);
    if hi - lo <= tol {
        return BusemannBehavior::Limit(*trace.last().unwrap());
    }
    for period in 2..=window / 2 {
        let ok = (0..tail.len() - period).all(|i| (tail[i] - tail[i + period]).abs() <= tol);
        if ok {
            return BusemannBehavior::Oscillation {
                period,
                values: tail[tail.len() - period..].to_vec(),
            };
        }
    }
    BusemannBehavior::Undetermined
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a as i64, b as i64) as usize * b
}
