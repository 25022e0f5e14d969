//! Worked environments: the two-state striped field used throughout the
//! documentation and tests, and a seeded generator of small random periodic
//! environments for property tests.

use crate::mc::rng::SplitMix64;
use crate::model::StepSet;
use crate::periodic::{build_quotient, PeriodicEnvironment, QuotientSpace};

/// Vertically striped planar field: period `(2, 1)`, weight 1 on even
/// columns and 0 on odd ones, steps `{e1, e2}`. Its quotient has two states
/// with `T_{e2}` acting as the identity.
pub fn stripes() -> (PeriodicEnvironment<f64>, StepSet) {
    let env = PeriodicEnvironment::new(2, vec![2, 1], vec![1.0, 0.0]).expect("valid");
    (env, StepSet::e1_e2())
}

/// Quotient of [`stripes`].
pub fn stripes_quotient() -> QuotientSpace<f64> {
    let (env, steps) = stripes();
    build_quotient(&env, &steps).expect("irreducible")
}

/// Seeded random periodic environment whose quotient has at most
/// `max_states` states: a random layout family (planar `{e1, e2}`, planar
/// with the diagonal step, a one-dimensional cycle, or a one-dimensional
/// `{+1, +2}` walk) with weights uniform in `[-1, 1]`.
pub fn random_environment(seed: u64, max_states: usize) -> (PeriodicEnvironment<f64>, StepSet) {
    assert!(max_states >= 1);
    let mut rng = SplitMix64::new(seed);
    let family = rng.next_u64() % 4;
    let uniform = |rng: &mut SplitMix64| 2.0 * rng.next_f64() - 1.0;
    match family {
        0 | 1 => {
            let p1 = 1 + (rng.next_u64() as usize) % max_states.min(4);
            let p2 = 1 + (rng.next_u64() as usize) % (max_states / p1).max(1);
            let cells = p1 * p2;
            let weights: Vec<f64> = (0..cells).map(|_| uniform(&mut rng)).collect();
            let env = PeriodicEnvironment::new(2, vec![p1 as i64, p2 as i64], weights)
                .expect("valid");
            let steps = if family == 0 {
                StepSet::e1_e2()
            } else {
                StepSet::new(2, vec![vec![1, 0], vec![0, 1], vec![1, 1]]).expect("valid")
            };
            (env, steps)
        }
        2 => {
            let p = 1 + (rng.next_u64() as usize) % max_states;
            let weights: Vec<f64> = (0..p).map(|_| uniform(&mut rng)).collect();
            let env = PeriodicEnvironment::new(1, vec![p as i64], weights).expect("valid");
            (env, StepSet::new(1, vec![vec![1]]).expect("valid"))
        }
        _ => {
            let p = 1 + (rng.next_u64() as usize) % max_states;
            let weights: Vec<f64> = (0..p).map(|_| uniform(&mut rng)).collect();
            let env = PeriodicEnvironment::new(1, vec![p as i64], weights).expect("valid");
            (env, StepSet::new(1, vec![vec![1], vec![2]]).expect("valid"))
        }
    }
}

/// Quotient of [`random_environment`].
pub fn random_quotient(seed: u64, max_states: usize) -> QuotientSpace<f64> {
    let (env, steps) = random_environment(seed, max_states);
    build_quotient(&env, &steps).expect("orbit construction is always irreducible")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_quotients_respect_state_cap() {
        for seed in 0..200 {
            let q = random_quotient(seed, 8);
            assert!(q.m() >= 1 && q.m() <= 8, "seed {seed}: m = {}", q.m());
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = random_quotient(5, 8);
        let b = random_quotient(5, 8);
        assert_eq!(a.m(), b.m());
        assert_eq!(a.base_weights(), b.base_weights());
    }
}
