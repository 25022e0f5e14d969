//! Positive-temperature periodic solver: spectral radius of the transfer
//! matrix, eigenvector correctors, invariant measure and entropy identity,
//! and point-to-level Busemann gradients.
//!
//! The transfer matrix of a tilted potential is
//! `A(w, w') = |R|^{-1} sum_{z : T_z w = w'} exp(beta (V0(w) + h.z))`; its
//! spectral radius gives the point-to-level constant
//! `g_pl(h) = beta^{-1} log rho`. Beta is folded into the exponent and
//! divided back out, so `beta = 1` reproduces the untempered formulas
//! literally. A log-domain path avoids `exp` overflow at large beta.

use crate::cocycle::GradientCocycle;
use crate::error::{Error, Result};
use crate::model::Tilt;
use crate::periodic::QuotientSpace;
use crate::{logaddexp, logsumexp, Scalar};

/// `beta * (max |V0| + max |h.z|)` beyond which `exp` would overflow f64.
pub const OVERFLOW_GUARD: f64 = 700.0;

/// The log-domain path is provided from this inverse temperature up; the
/// large-beta sandwich checks need it.
pub const LOG_DOMAIN_BETA: f64 = 50.0;

/// Power-iteration caps.
pub const POWER_ITERATION_CAP: usize = 100_000;
const LINEAR_TOL: f64 = 1e-13;
const LOG_TOL: f64 = 1e-11;

/// Dense nonnegative transfer matrix over the quotient.
#[derive(Debug, Clone)]
pub struct TransferMatrix<T> {
    m: usize,
    entries: Vec<T>,
    beta: T,
    tilt: Tilt<T>,
}

impl<T: Scalar> TransferMatrix<T> {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entry(&self, from: usize, to: usize) -> T {
        self.entries[from * self.m + to]
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn tilt(&self) -> &Tilt<T> {
        &self.tilt
    }

    fn matvec(&self, v: &[T]) -> Vec<T> {
        (0..self.m)
            .map(|i| {
                (0..self.m)
                    .map(|j| self.entry(i, j) * v[j])
                    .sum::<T>()
            })
            .collect()
    }

    fn matvec_t(&self, v: &[T]) -> Vec<T> {
        (0..self.m)
            .map(|j| {
                (0..self.m)
                    .map(|i| self.entry(i, j) * v[i])
                    .sum::<T>()
            })
            .collect()
    }
}

/// Builds the transfer matrix, refusing parameters whose exponentials would
/// overflow; callers hitting the guard should move to [`solve_pf_log`].
pub fn build_transfer_matrix<T: Scalar>(
    q: &QuotientSpace<T>,
    h: &Tilt<T>,
    beta: T,
) -> Result<TransferMatrix<T>> {
    check_beta(q, h, beta)?;
    let magnitude = guard_magnitude(q, h, beta);
    if magnitude > T::of(OVERFLOW_GUARD) {
        return Err(Error::OverflowGuard {
            magnitude: magnitude.to_f64().unwrap(),
        });
    }
    let m = q.m();
    let k = q.steps().len();
    let inv_r = T::one() / T::of_usize(k);
    let mut entries = vec![T::zero(); m * m];
    for w in 0..m {
        for z in 0..k {
            let to = q.shift(w, z);
            let e = (beta * (q.v0(w) + h.dot_step(q.steps().step(z)))).exp();
            entries[w * m + to] = entries[w * m + to] + inv_r * e;
        }
    }
    Ok(TransferMatrix {
        m,
        entries,
        beta,
        tilt: h.clone(),
    })
}

fn check_beta<T: Scalar>(q: &QuotientSpace<T>, h: &Tilt<T>, beta: T) -> Result<()> {
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "beta must be a positive real, got {beta}"
        )));
    }
    if h.dim() != q.steps().dim() {
        return Err(Error::InvalidInput("tilt dimension mismatch".into()));
    }
    Ok(())
}

fn guard_magnitude<T: Scalar>(q: &QuotientSpace<T>, h: &Tilt<T>, beta: T) -> T {
    let max_hz = q
        .steps()
        .steps()
        .iter()
        .fold(T::zero(), |acc, z| acc.max(h.dot_step(z).abs()));
    beta * (q.max_abs_weight() + max_hz)
}

/// Solved eigendata of a transfer matrix. `lev` and `rev` are normalized so
/// that `sum rev = m` and `sum lev rev = 1`; `mu0 = lev rev` componentwise.
/// `residual` is the largest relative eigen-equation defect of either
/// eigenvector.
#[derive(Debug, Clone)]
pub struct PFSolution<T> {
    pub rho: T,
    pub log_rho: T,
    /// `beta^{-1} log rho`, the point-to-level constant.
    pub g_pl: T,
    pub lev: Vec<T>,
    pub rev: Vec<T>,
    pub mu0: Vec<T>,
    pub residual: T,
    pub beta: T,
    pub tilt: Tilt<T>,
}

/// Power iteration with an additive diagonal shift (`A + eps I` has spectral
/// radius `rho + eps` and the same eigenvectors, killing periodic positivity
/// patterns). The shift scale must track `rho`, not the largest entry: an
/// unbalanced matrix can have entries exponentially above its spectral
/// radius, and a shift of that size erases the spectral gap. The max cycle
/// mean of the log entries pins `log rho` to within `log |R|`, so `eps` is
/// `1e-3 * exp(max cycle mean)`, raised tenfold on the rare non-converged
/// pattern before giving up.
pub fn solve_pf<T: Scalar>(a: &TransferMatrix<T>) -> Result<PFSolution<T>> {
    let log_entries: Vec<T> = a.entries.iter().map(|&e| e.ln()).collect();
    let rho_scale = crate::maxplus::karp_dense(a.m, &log_entries).exp();
    let mut last = Error::NonConvergence { residual: f64::NAN };
    for eps_scale in [1e-3, 1e-2, 1e-1] {
        let eps = T::of(eps_scale) * rho_scale;
        match solve_pf_shifted(a, eps) {
            Ok(sol) => return Ok(sol),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn solve_pf_shifted<T: Scalar>(a: &TransferMatrix<T>, eps: T) -> Result<PFSolution<T>> {
    let m = a.m();
    let tol = T::of(LINEAR_TOL);
    let mut rev = vec![T::one() / T::of_usize(m); m];
    let mut lev = rev.clone();
    let mut rho = T::zero();
    let mut residual = T::infinity();
    let mut converged = false;
    for _ in 0..POWER_ITERATION_CAP {
        let mut rnew = a.matvec(&rev);
        for (x, v) in rnew.iter_mut().zip(rev.iter()) {
            *x = *x + eps * *v;
        }
        let rsum: T = rnew.iter().cloned().sum();
        for x in rnew.iter_mut() {
            *x = *x / rsum;
        }
        let mut lnew = a.matvec_t(&lev);
        for (x, v) in lnew.iter_mut().zip(lev.iter()) {
            *x = *x + eps * *v;
        }
        let lsum: T = lnew.iter().cloned().sum();
        for x in lnew.iter_mut() {
            *x = *x / lsum;
        }
        rev = rnew;
        lev = lnew;
        rho = rsum - eps;
        residual = eigen_residual(a, rho, &rev, &lev);
        if residual <= tol {
            converged = true;
            break;
        }
    }
    // inverted comparison also catches a NaN residual
    if !converged && !(residual <= T::of(1e-9)) {
        return Err(Error::NonConvergence {
            residual: residual.to_f64().unwrap(),
        });
    }
    Ok(finish_solution(a.beta, a.tilt.clone(), rho.ln(), rho, rev, lev, residual))
}

/// Per-component relative eigen defect: lopsided eigenvectors (components
/// spanning many orders of magnitude are routine at moderate beta) make any
/// globally normalized residual blind to the small components, and the
/// corrector constancy inherits exactly that per-component error.
fn eigen_residual<T: Scalar>(a: &TransferMatrix<T>, rho: T, rev: &[T], lev: &[T]) -> T {
    let ar = a.matvec(rev);
    let al = a.matvec_t(lev);
    let mut worst = T::zero();
    for i in 0..a.m() {
        worst = worst.max((ar[i] / (rho * rev[i]) - T::one()).abs());
        worst = worst.max((al[i] / (rho * lev[i]) - T::one()).abs());
    }
    worst
}

fn finish_solution<T: Scalar>(
    beta: T,
    tilt: Tilt<T>,
    log_rho: T,
    rho: T,
    mut rev: Vec<T>,
    mut lev: Vec<T>,
    residual: T,
) -> PFSolution<T> {
    let m = rev.len();
    let rsum: T = rev.iter().cloned().sum();
    let scale = T::of_usize(m) / rsum;
    for x in rev.iter_mut() {
        *x = *x * scale;
    }
    let dot: T = lev.iter().zip(rev.iter()).map(|(&l, &r)| l * r).sum();
    for x in lev.iter_mut() {
        *x = *x / dot;
    }
    let mu0: Vec<T> = lev.iter().zip(rev.iter()).map(|(&l, &r)| l * r).collect();
    PFSolution {
        rho,
        log_rho,
        g_pl: log_rho / beta,
        lev,
        rev,
        mu0,
        residual,
        beta,
        tilt,
    }
}

/// Log-entry transfer matrix: `L(w, w') = log A(w, w')`, `-inf` off pattern.
fn log_entries<T: Scalar>(q: &QuotientSpace<T>, h: &Tilt<T>, beta: T) -> Vec<T> {
    let m = q.m();
    let k = q.steps().len();
    let ln_r = T::of_usize(k).ln();
    let mut entries = vec![T::neg_infinity(); m * m];
    for w in 0..m {
        for z in 0..k {
            let to = q.shift(w, z);
            let e = beta * (q.v0(w) + h.dot_step(q.steps().step(z))) - ln_r;
            entries[w * m + to] = logaddexp(entries[w * m + to], e);
        }
    }
    entries
}

fn log_matvec<T: Scalar>(m: usize, l: &[T], v: &[T], transpose: bool) -> Vec<T> {
    (0..m)
        .map(|i| {
            let terms: Vec<T> = (0..m)
                .map(|j| {
                    let e = if transpose { l[j * m + i] } else { l[i * m + j] };
                    e + v[j]
                })
                .collect();
            logsumexp(&terms)
        })
        .collect()
}

/// Log-domain Perron-Frobenius solve; never forms `exp(beta V0)`, so it is
/// safe past the overflow guard (provided for `beta >= 50`, valid for any
/// positive beta). `rho` overflows to `inf` once `log rho > 709`; use
/// `log_rho` and `g_pl` there.
pub fn solve_pf_log<T: Scalar>(
    q: &QuotientSpace<T>,
    h: &Tilt<T>,
    beta: T,
) -> Result<PFSolution<T>> {
    check_beta(q, h, beta)?;
    let m = q.m();
    let l = log_entries(q, h, beta);
    // same rho-tracking shift scale as the dense path, kept in log space
    let log_rho_scale = crate::maxplus::karp_dense(m, &l);
    let mut last = Error::NonConvergence { residual: f64::NAN };
    for eps_scale in [1e-3, 1e-2, 1e-1] {
        let ln_eps = T::of(eps_scale).ln() + log_rho_scale;
        // diagonal shift in log space
        let mut ls = l.clone();
        for i in 0..m {
            ls[i * m + i] = logaddexp(ls[i * m + i], ln_eps);
        }
        match solve_pf_log_shifted(q, h, beta, &l, &ls, ln_eps) {
            Ok(sol) => return Ok(sol),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn solve_pf_log_shifted<T: Scalar>(
    q: &QuotientSpace<T>,
    h: &Tilt<T>,
    beta: T,
    l: &[T],
    ls: &[T],
    ln_eps: T,
) -> Result<PFSolution<T>> {
    let m = q.m();
    let tol = T::of(LOG_TOL);
    let mut lrev = vec![T::zero(); m];
    let mut llev = vec![T::zero(); m];
    let mut log_rho = T::zero();
    let mut residual = T::infinity();
    let mut converged = false;
    for _ in 0..POWER_ITERATION_CAP {
        let mut rnew = log_matvec(m, ls, &lrev, false);
        let rtot = logsumexp(&rnew);
        for x in rnew.iter_mut() {
            *x = *x - rtot;
        }
        let mut lnew = log_matvec(m, ls, &llev, true);
        let ltot = logsumexp(&lnew);
        for x in lnew.iter_mut() {
            *x = *x - ltot;
        }
        lrev = rnew;
        llev = lnew;
        // rho = rho_shifted - eps, computed without leaving log space
        log_rho = rtot + (-(ln_eps - rtot).exp()).ln_1p();
        residual = log_eigen_residual(m, l, log_rho, &lrev, &llev);
        if residual <= tol {
            converged = true;
            break;
        }
    }
    if !converged && !(residual <= T::of(1e-9)) {
        return Err(Error::NonConvergence {
            residual: residual.to_f64().unwrap(),
        });
    }
    // normalized linear eigenvectors are safe to exponentiate
    let rtot = logsumexp(&lrev);
    let rev: Vec<T> = lrev
        .iter()
        .map(|&x| (x - rtot + T::of_usize(m).ln()).exp())
        .collect();
    let ltot = logsumexp(&llev);
    let lev: Vec<T> = llev.iter().map(|&x| (x - ltot).exp()).collect();
    Ok(finish_solution(
        beta,
        h.clone(),
        log_rho,
        log_rho.exp(),
        rev,
        lev,
        residual,
    ))
}

fn log_eigen_residual<T: Scalar>(m: usize, l: &[T], log_rho: T, lrev: &[T], llev: &[T]) -> T {
    let ar = log_matvec(m, l, lrev, false);
    let al = log_matvec(m, l, llev, true);
    let mut worst = T::zero();
    for i in 0..m {
        worst = worst.max(((ar[i] - log_rho - lrev[i]).exp() - T::one()).abs());
        worst = worst.max(((al[i] - log_rho - llev[i]).exp() - T::one()).abs());
    }
    worst
}

/// Dense entries stay accurate well below the overflow guard, but the
/// eigenvector components themselves span `exp(+-beta * potential spread)`
/// and drown in underflow much earlier; past this magnitude the log-domain
/// path takes over.
pub const LOG_PATH_MAGNITUDE: f64 = 150.0;

/// Solves for the point-to-level constant picking the fastest safe path:
/// dense entries at moderate exponents, log-domain otherwise.
pub fn free_energy<T: Scalar>(
    q: &QuotientSpace<T>,
    h: &Tilt<T>,
    beta: T,
) -> Result<PFSolution<T>> {
    check_beta(q, h, beta)?;
    if guard_magnitude(q, h, beta) <= T::of(LOG_PATH_MAGNITUDE) {
        solve_pf(&build_transfer_matrix(q, h, beta)?)
    } else {
        solve_pf_log(q, h, beta)
    }
}

/// Corrector potential from the right eigenvector: `f = beta^{-1} log rev`
/// (`log rev` at `beta = 1`). The induced gradient makes the point-to-level
/// bracket constant in the state, i.e. it attains the min-max without the
/// max.
pub fn corrector_from_rev<T: Scalar>(sol: &PFSolution<T>) -> GradientCocycle<T> {
    GradientCocycle::new(sol.rev.iter().map(|&r| r.ln() / sol.beta).collect())
}

/// `max_w beta^{-1} log sum_z |R|^{-1} exp(beta (V0 + h.z + f(T_z w) - f(w)))`,
/// the finite-quotient cocycle variational formula at potential `f`. Equals
/// `g_pl` when `f` is the corrector and dominates it for every other `f`.
pub fn evaluate_cocycle_formula<T: Scalar>(
    q: &QuotientSpace<T>,
    h: &Tilt<T>,
    beta: T,
    f: &GradientCocycle<T>,
) -> T {
    per_state_bracket(q, h, beta, f)
        .into_iter()
        .fold(T::neg_infinity(), T::max)
}

/// The bracket of the variational formula at every state.
pub fn per_state_bracket<T: Scalar>(
    q: &QuotientSpace<T>,
    h: &Tilt<T>,
    beta: T,
    f: &GradientCocycle<T>,
) -> Vec<T> {
    let k = q.steps().len();
    let ln_r = T::of_usize(k).ln();
    (0..q.m())
        .map(|w| {
            let terms: Vec<T> = (0..k)
                .map(|z| {
                    beta * (q.v0(w) + h.dot_step(q.steps().step(z)) + f.increment(q, w, z))
                        - ln_r
                })
                .collect();
            logsumexp(&terms) / beta
        })
        .collect()
}

/// Invariant measure, step/state kernels, entropy, and the entropy identity
/// defect of a solved transfer problem.
#[derive(Debug, Clone)]
pub struct PfMeasure<T> {
    /// `mu0 = lev rev`, the invariant environment marginal.
    pub mu0: Vec<T>,
    /// `q0(w, w')`: state-to-state kernel fixed by `mu0`.
    pub state_kernel: Vec<T>,
    /// `(w, z)` step kernel whose relative entropy against the uniform step
    /// kernel enters the identity.
    pub step_kernel: Vec<T>,
    /// `H(mu x q | mu x p)`.
    pub entropy: T,
    /// `|E[V0 + h.Z] - beta^{-1} H - g_pl|`.
    pub identity_gap: T,
    /// `max_w' |(mu0 q0)(w') - mu0(w')|`.
    pub stationarity_gap: T,
}

/// Builds the maximizing invariant measure of the entropy variational
/// formula from a solved eigenproblem and verifies the identity
/// `E[V0 + h.Z] - beta^{-1} H = g_pl` along with `0 <= H <= log |R|`.
pub fn invariant_measure_and_entropy<T: Scalar>(
    q: &QuotientSpace<T>,
    sol: &PFSolution<T>,
) -> PfMeasure<T> {
    let m = q.m();
    let k = q.steps().len();
    let beta = sol.beta;
    let h = &sol.tilt;
    let f = corrector_from_rev(sol);
    let ln_r = T::of_usize(k).ln();
    let mut step_kernel = vec![T::zero(); m * k];
    let mut state_kernel = vec![T::zero(); m * m];
    for w in 0..m {
        for z in 0..k {
            let log_p = beta
                * (q.v0(w) + h.dot_step(q.steps().step(z)) + f.increment(q, w, z) - sol.g_pl)
                - ln_r;
            let p = log_p.exp();
            step_kernel[w * k + z] = p;
            let to = q.shift(w, z);
            state_kernel[w * m + to] = state_kernel[w * m + to] + p;
        }
    }
    let mu0 = sol.mu0.clone();
    let mut stationarity_gap = T::zero();
    for to in 0..m {
        let pushed: T = (0..m).map(|w| mu0[w] * state_kernel[w * m + to]).sum();
        stationarity_gap = stationarity_gap.max((pushed - mu0[to]).abs());
    }
    let mut entropy = T::zero();
    let mut mean_potential = T::zero();
    for w in 0..m {
        for z in 0..k {
            let p = step_kernel[w * k + z];
            if p > T::zero() {
                entropy = entropy + mu0[w] * p * (p * T::of_usize(k)).ln();
            }
            mean_potential =
                mean_potential + mu0[w] * p * (q.v0(w) + h.dot_step(q.steps().step(z)));
        }
    }
    let identity_gap = (mean_potential - entropy / beta - sol.g_pl).abs();
    PfMeasure {
        mu0,
        state_kernel,
        step_kernel,
        entropy,
        identity_gap,
        stationarity_gap,
    }
}

/// Period of the positivity pattern: gcd of `level(u) + 1 - level(v)` over
/// the edges of the strongly connected shift graph. 1 means primitive.
pub fn pattern_period<T: Scalar>(q: &QuotientSpace<T>) -> usize {
    let m = q.m();
    let mut level = vec![None::<i64>; m];
    level[0] = Some(0);
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for z in 0..q.steps().len() {
            let v = q.shift(u, z);
            if level[v].is_none() {
                level[v] = Some(level[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    let mut g: i64 = 0;
    for u in 0..m {
        for z in 0..q.steps().len() {
            let v = q.shift(u, z);
            g = gcd(g, (level[u].unwrap() + 1 - level[v].unwrap()).abs());
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

/// One `(state, step)` trace of finite-`n` point-to-level gradients.
#[derive(Debug, Clone)]
pub struct PfBusemannEdge<T> {
    pub state: usize,
    pub step: usize,
    /// `G_{0,(n)}(h) - G_{z,(n-1)}(h)` for `n = 1..=n_max`.
    pub trace: Vec<T>,
    pub final_value: T,
    /// `g_pl + f(w) - f(T_z w)` with `f` the corrector; the limit of the
    /// trace by Perron-Frobenius asymptotics.
    pub formula: T,
}

#[derive(Debug, Clone)]
pub struct PfBusemann<T> {
    pub solution: PFSolution<T>,
    pub reports: Vec<PfBusemannEdge<T>>,
}

/// Finite-`n` Busemann gradients via log-domain matrix powers, plus their
/// closed-form limits. Requires a primitive positivity pattern; otherwise
/// the powers oscillate and no Busemann function exists.
pub fn busemann_pf<T: Scalar>(
    q: &QuotientSpace<T>,
    h: &Tilt<T>,
    beta: T,
    n_max: usize,
) -> Result<PfBusemann<T>> {
    check_beta(q, h, beta)?;
    let period = pattern_period(q);
    if period > 1 {
        return Err(Error::NotPrimitive { period });
    }
    if n_max < 2 {
        return Err(Error::InvalidInput("n_max must be at least 2".into()));
    }
    let solution = free_energy(q, h, beta)?;
    let f = corrector_from_rev(&solution);
    let m = q.m();
    let l = log_entries(q, h, beta);

    // u_n(w) = log sum_{w'} A^n(w, w'), normalized each step with the
    // offset tracked separately
    let mut u = vec![T::zero(); m];
    let mut offset = T::zero();
    let mut traces = vec![Vec::with_capacity(n_max); m * q.steps().len()];
    let mut prev_u = u.clone();
    let mut prev_offset = offset;
    for _n in 1..=n_max {
        prev_u.copy_from_slice(&u);
        prev_offset = offset;
        let mut raw = log_matvec(m, &l, &u, false);
        let peak = raw.iter().cloned().fold(T::neg_infinity(), T::max);
        for x in raw.iter_mut() {
            *x = *x - peak;
        }
        offset = offset + peak;
        u = raw;
        for w in 0..m {
            for z in 0..q.steps().len() {
                let shifted = q.shift(w, z);
                let b =
                    ((u[w] + offset) - (prev_u[shifted] + prev_offset)) / beta;
                traces[w * q.steps().len() + z].push(b);
            }
        }
    }
    let _ = (prev_u, prev_offset);

    let mut reports = Vec::new();
    for w in 0..m {
        for z in 0..q.steps().len() {
            let trace = std::mem::take(&mut traces[w * q.steps().len() + z]);
            let formula = solution.g_pl + f.value(w) - f.value(q.shift(w, z));
            reports.push(PfBusemannEdge {
                state: w,
                step: z,
                final_value: *trace.last().unwrap(),
                trace,
                formula,
            });
        }
    }
    Ok(PfBusemann { solution, reports })
}

/// Largest defect of the recovery identity
/// `V0(w) = -beta^{-1} log sum_z |R|^{-1} exp(-beta (B(w,z) - h.z))`
/// for a per-(state, step) cocycle `B`.
pub fn recovery_residual<T: Scalar>(
    q: &QuotientSpace<T>,
    h: &Tilt<T>,
    beta: T,
    b: &dyn Fn(usize, usize) -> T,
) -> T {
    let k = q.steps().len();
    let ln_r = T::of_usize(k).ln();
    let mut worst = T::zero();
    for w in 0..q.m() {
        let terms: Vec<T> = (0..k)
            .map(|z| -beta * (b(w, z) - h.dot_step(q.steps().step(z))) - ln_r)
            .collect();
        let v0 = -logsumexp(&terms) / beta;
        worst = worst.max((v0 - q.v0(w)).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::rng::SplitMix64;
    use crate::periodic::{build_quotient, PeriodicEnvironment};
    use crate::presets;
    use crate::model::StepSet;

    /// closed-form spectral radius of a positive 2x2 matrix
    fn rho_2x2(a: [[f64; 2]; 2]) -> f64 {
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0
    }

    fn single_state(c: f64) -> crate::QuotientSpace {
        let env = PeriodicEnvironment::new(2, vec![1, 1], vec![c]).unwrap();
        build_quotient(&env, &StepSet::e1_e2()).unwrap()
    }

    #[test]
    fn single_state_closed_form() {
        let q = single_state(0.8);
        let sol = free_energy(&q, &Tilt::zero(2), 1.0).unwrap();
        assert!((sol.rho - 0.8f64.exp()).abs() < 1e-12);
        assert!((sol.g_pl - 0.8).abs() < 1e-12);
        let f = corrector_from_rev(&sol);
        assert!(f.value(0).abs() < 1e-12);
    }

    #[test]
    fn stripes_matrix_and_rho() {
        let q = presets::stripes_quotient();
        let a = build_transfer_matrix(&q, &Tilt::zero(2), 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((a.entry(0, 0) - e / 2.0).abs() < 1e-15);
        assert!((a.entry(0, 1) - e / 2.0).abs() < 1e-15);
        assert!((a.entry(1, 0) - 0.5).abs() < 1e-15);
        assert!((a.entry(1, 1) - 0.5).abs() < 1e-15);
        let sol = solve_pf(&a).unwrap();
        let expect = rho_2x2([[e / 2.0, e / 2.0], [0.5, 0.5]]);
        assert!((sol.rho - expect).abs() < 1e-11, "{} vs {expect}", sol.rho);
        assert!(sol.residual < 1e-9);
        // normalizations
        assert!((sol.rev.iter().sum::<f64>() - 2.0).abs() < 1e-10);
        let dot: f64 = sol.lev.iter().zip(&sol.rev).map(|(l, r)| l * r).sum();
        assert!((dot - 1.0).abs() < 1e-10);
        assert!(sol.rev.iter().all(|&x| x > 0.0));
        assert!(sol.lev.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn stripes_tilted_matches_exp_pattern() {
        let q = presets::stripes_quotient();
        for (h1, h2) in [(0.3, -0.2), (1.0, 0.0)] {
            let a = build_transfer_matrix(&q, &Tilt::new(vec![h1, h2]).unwrap(), 1.0).unwrap();
            let expect = [
                [(1.0 + h2).exp() / 2.0, (1.0 + h1).exp() / 2.0],
                [h1.exp() / 2.0, h2.exp() / 2.0],
            ];
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a.entry(i, j) - expect[i][j]).abs() < 1e-14);
                }
            }
            let sol = solve_pf(&a).unwrap();
            assert!((sol.rho - rho_2x2(expect)).abs() < 1e-10);
        }
    }

    #[test]
    fn corrector_makes_bracket_constant() {
        let q = presets::stripes_quotient();
        let h = Tilt::new(vec![0.4, -0.1]).unwrap();
        let sol = free_energy(&q, &h, 1.0).unwrap();
        let f = corrector_from_rev(&sol);
        let brackets = per_state_bracket(&q, &h, 1.0, &f);
        for &b in &brackets {
            assert!((b - sol.g_pl).abs() < 1e-10, "bracket {b} vs {}", sol.g_pl);
        }
        // zero cocycle dominates: max(1,0) + log((1+1)/2) = 1 at h = 0
        let zero = GradientCocycle::zero(q.m());
        let v = evaluate_cocycle_formula(&q, &Tilt::zero(2), 1.0, &zero);
        assert!((v - 1.0).abs() < 1e-12);
        let g0 = free_energy(&q, &Tilt::zero(2), 1.0).unwrap().g_pl;
        assert!(v >= g0 - 1e-12);
    }

    #[test]
    fn collatz_wielandt_sandwich() {
        let q = presets::stripes_quotient();
        let a = build_transfer_matrix(&q, &Tilt::new(vec![0.2, 0.6]).unwrap(), 1.0).unwrap();
        let sol = solve_pf(&a).unwrap();
        let mut rng = SplitMix64::new(11);
        for _ in 0..50 {
            let phi: Vec<f64> = (0..q.m()).map(|_| 0.1 + rng.next_f64()).collect();
            let aphi = a.matvec(&phi);
            let ratios: Vec<f64> = aphi.iter().zip(&phi).map(|(n, d)| n / d).collect();
            let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
            let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
            assert!(hi >= sol.rho - 1e-12);
            assert!(lo <= sol.rho + 1e-12);
        }
        // equality at the eigenvector
        let arev = a.matvec(&sol.rev);
        for (n, d) in arev.iter().zip(&sol.rev) {
            assert!((n / d - sol.rho).abs() < 1e-9);
        }
    }

    #[test]
    fn entropy_identity_examples() {
        let q = single_state(0.5);
        // all h.z equal: uniform kernel, H = 0, identity exact
        let sol = free_energy(&q, &Tilt::new(vec![0.3, 0.3]).unwrap(), 1.0).unwrap();
        let meas = invariant_measure_and_entropy(&q, &sol);
        assert!(meas.entropy.abs() < 1e-12);
        assert!(meas.identity_gap < 1e-12);

        let q = presets::stripes_quotient();
        for (h, beta) in [(vec![0.0, 0.0], 1.0), (vec![0.0, 10.0], 1.0), (vec![0.5, -0.5], 3.0)] {
            let h = Tilt::new(h).unwrap();
            let sol = free_energy(&q, &h, beta).unwrap();
            let meas = invariant_measure_and_entropy(&q, &sol);
            assert!(meas.identity_gap < 1e-9, "gap {}", meas.identity_gap);
            assert!(meas.stationarity_gap < 1e-10);
            assert!(meas.entropy >= -1e-12 && meas.entropy <= 2f64.ln() + 1e-12);
        }
    }

    #[test]
    fn busemann_converges_to_formula() {
        let q = presets::stripes_quotient();
        let h = Tilt::zero(2);
        let bus = busemann_pf(&q, &h, 1.0, 200).unwrap();
        for rep in &bus.reports {
            assert!((rep.final_value - rep.formula).abs() < 1e-8);
        }
        // recovery of V0 from the limits
        let res = recovery_residual(&q, &h, 1.0, &|w, z| {
            bus.reports
                .iter()
                .find(|r| r.state == w && r.step == z)
                .unwrap()
                .formula
        });
        assert!(res < 1e-8);
        // single state: B = g_pl for every step
        let q1 = single_state(0.7);
        let bus = busemann_pf(&q1, &Tilt::zero(2), 1.0, 8).unwrap();
        for rep in &bus.reports {
            assert!((rep.final_value - bus.solution.g_pl).abs() < 1e-12);
        }
    }

    #[test]
    fn busemann_requires_primitive_pattern() {
        // p = 2 one-dimensional cycle: bipartite pattern, period 2
        let env = PeriodicEnvironment::new(1, vec![2], vec![0.0, 1.0]).unwrap();
        let steps = StepSet::new(1, vec![vec![1]]).unwrap();
        let q = build_quotient(&env, &steps).unwrap();
        assert_eq!(pattern_period(&q), 2);
        assert!(matches!(
            busemann_pf(&q, &Tilt::zero(1), 1.0, 50),
            Err(Error::NotPrimitive { period: 2 })
        ));
    }

    #[test]
    fn overflow_guard_and_log_path_agree() {
        let q = presets::stripes_quotient();
        let h = Tilt::new(vec![0.2, -0.3]).unwrap();
        // both paths at a moderate beta agree
        let lin = solve_pf(&build_transfer_matrix(&q, &h, 20.0).unwrap()).unwrap();
        let log = solve_pf_log(&q, &h, 20.0).unwrap();
        assert!((lin.g_pl - log.g_pl).abs() < 1e-9);
        for (a, b) in lin.rev.iter().zip(&log.rev) {
            assert!((a - b).abs() < 1e-7);
        }
        // the guard trips at large beta and the dispatcher reroutes
        assert!(matches!(
            build_transfer_matrix(&q, &h, 600.0),
            Err(Error::OverflowGuard { .. })
        ));
        let sol = free_energy(&q, &h, 600.0).unwrap();
        assert!(sol.g_pl.is_finite());
    }

    #[test]
    fn rescaling_rev_shifts_f_by_constant() {
        let q = presets::stripes_quotient();
        let sol = free_energy(&q, &Tilt::zero(2), 1.0).unwrap();
        let f = corrector_from_rev(&sol);
        let scaled = GradientCocycle::new(
            sol.rev.iter().map(|&r| (r * 7.5).ln() / sol.beta).collect(),
        );
        for w in 0..q.m() {
            for z in 0..2 {
                assert!(
                    (f.increment(&q, w, z) - scaled.increment(&q, w, z)).abs() < 1e-12
                );
            }
        }
    }
}
