//! Dense two-phase simplex for the crate's small linear programs.
//!
//! Problems here have at most a few dozen variables (relative-interior
//! membership, directedness feasibility, circuit-hull evaluation), so a plain
//! tableau with Bland's rule is enough. Maximizes `c.x` over `Ax = b, x >= 0`.

use crate::Scalar;

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub(crate) struct LpSolution<T> {
    pub objective: T,
    pub x: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
}

struct Tableau<T> {
    rows: usize,
    cols: usize, // structural + artificial + rhs
    t: Vec<T>,
    basis: Vec<usize>,
}

impl<T: Scalar> Tableau<T> {
    fn at(&self, r: usize, c: usize) -> T {
        self.t[r * self.cols + c]
    }

    fn set(&mut self, r: usize, c: usize, v: T) {
        self.t[r * self.cols + c] = v;
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let piv = self.at(pr, pc);
        for c in 0..self.cols {
            let v = self.at(pr, c) / piv;
            self.set(pr, c, v);
        }
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let factor = self.at(r, pc);
            if factor == T::zero() {
                continue;
            }
            for c in 0..self.cols {
                let v = self.at(r, c) - factor * self.at(pr, c);
                self.set(r, c, v);
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex on the current tableau for the objective row `obj`
    /// (reduced costs of a maximization, kept in sync by pivoting).
    /// `limit` restricts entering columns. Bland's rule, so it terminates.
    fn run(&mut self, obj: &mut Vec<T>, limit: usize) -> LpOutcome {
        let tol = T::of(PIVOT_TOL);
        loop {
            let mut entering = None;
            for c in 0..limit {
                if obj[c] > tol {
                    entering = Some(c);
                    break;
                }
            }
            let Some(pc) = entering else {
                return LpOutcome::Optimal;
            };
            let mut leaving: Option<(usize, T)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > tol {
                    let ratio = self.at(r, self.cols - 1) / a;
                    match leaving {
                        None => leaving = Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio
                                || (ratio == bratio && self.basis[r] < self.basis[br])
                            {
                                leaving = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((pr, _)) = leaving else {
                return LpOutcome::Unbounded;
            };
            self.pivot(pr, pc);
            // eliminate the entering column from the objective row
            let factor = obj[pc];
            for c in 0..self.cols {
                if c < obj.len() {
                    obj[c] = obj[c] - factor * self.at(pr, c);
                }
            }
        }
    }
}

/// Maximizes `c.x` subject to `Ax = b`, `x >= 0`.
pub(crate) fn solve_lp_max<T: Scalar>(
    c: &[T],
    a: &[Vec<T>],
    b: &[T],
) -> (LpOutcome, Option<LpSolution<T>>) {
    let m = a.len();
    let n = c.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    debug_assert_eq!(b.len(), m);

    let cols = n + m + 1;
    let mut t = vec![T::zero(); m * cols];
    let mut basis = vec![0usize; m];
    for r in 0..m {
        let flip = b[r] < T::zero();
        for cidx in 0..n {
            t[r * cols + cidx] = if flip { -a[r][cidx] } else { a[r][cidx] };
        }
        t[r * cols + n + r] = T::one();
        t[r * cols + cols - 1] = if flip { -b[r] } else { b[r] };
        basis[r] = n + r;
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        t,
        basis,
    };

    // phase 1: maximize -(sum of artificials); reduced costs start as column
    // sums of the constraint rows
    let mut obj1 = vec![T::zero(); cols];
    for r in 0..m {
        for cidx in 0..cols {
            obj1[cidx] = obj1[cidx] + tab.at(r, cidx);
        }
    }
    for art in n..n + m {
        obj1[art] = T::zero();
    }
    let out = tab.run(&mut obj1, n);
    if out == LpOutcome::Unbounded {
        return (LpOutcome::Unbounded, None);
    }
    let infeas = obj1[cols - 1];
    if infeas.abs() > T::of(FEAS_TOL) {
        return (LpOutcome::Infeasible, None);
    }
    // drive remaining artificials out of the basis where possible
    for r in 0..m {
        if tab.basis[r] >= n {
            let mut pivoted = false;
            for cidx in 0..n {
                if tab.at(r, cidx).abs() > T::of(PIVOT_TOL) {
                    tab.pivot(r, cidx);
                    pivoted = true;
                    break;
                }
            }
            if !pivoted {
                // redundant constraint row; artificial stays basic at zero
                continue;
            }
        }
    }

    // phase 2: reduced costs of the real objective against the current basis
    let mut obj2 = vec![T::zero(); cols];
    obj2[..n].copy_from_slice(c);
    for r in 0..m {
        let bc = tab.basis[r];
        let coeff = if bc < n { c[bc] } else { T::zero() };
        if coeff != T::zero() {
            for cidx in 0..cols {
                obj2[cidx] = obj2[cidx] - coeff * tab.at(r, cidx);
            }
        }
    }
    let out = tab.run(&mut obj2, n);
    if out == LpOutcome::Unbounded {
        return (LpOutcome::Unbounded, None);
    }

    let mut x = vec![T::zero(); n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.at(r, cols - 1);
        }
    }
    let objective = x
        .iter()
        .zip(c.iter())
        .fold(T::zero(), |acc, (&xi, &ci)| acc + xi * ci);
    (LpOutcome::Optimal, Some(LpSolution { objective, x }))
}
