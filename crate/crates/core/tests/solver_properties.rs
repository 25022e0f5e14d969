//! Cross-module properties of the periodic solvers on randomized quotients.

use proptest::prelude::*;

use polyvar::cocycle::GradientCocycle;
use polyvar::maxplus::{
    build_maxplus_matrix, enumerate_circuits, gpp_periodic, karp_eigenvalue,
    measure_variational_value, minmax_via_difference_constraints, DEFAULT_CIRCUIT_CAP,
};
use polyvar::mc::rng::SplitMix64;
use polyvar::model::{realize_velocity, Tilt};
use polyvar::pf::{corrector_from_rev, evaluate_cocycle_formula, free_energy, per_state_bracket};
use polyvar::presets;

fn tilt_from(rng: &mut SplitMix64, dim: usize) -> Tilt<f64> {
    Tilt::new((0..dim).map(|_| 2.0 * rng.next_f64() - 1.0).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn three_eigenvalue_routes_agree(seed in 0u64..10_000) {
        let q = presets::random_quotient(seed, 8);
        let mut rng = SplitMix64::new(seed ^ 0xabcd);
        let h = tilt_from(&mut rng, q.steps().dim());
        let a = build_maxplus_matrix(&q, &h);
        let karp = karp_eigenvalue(&a);
        let cs = enumerate_circuits(&a, DEFAULT_CIRCUIT_CAP);
        let mean = measure_variational_value(&cs).unwrap();
        let (mm, _) = minmax_via_difference_constraints(&a, 1e-10);
        prop_assert!((karp - mean).abs() <= 1e-9);
        prop_assert!((karp - mm).abs() <= 1e-9);
    }

    #[test]
    fn corrector_beats_random_gradients(seed in 0u64..10_000) {
        let q = presets::random_quotient(seed, 6);
        let mut rng = SplitMix64::new(seed ^ 0x1234);
        let h = tilt_from(&mut rng, q.steps().dim());
        let beta = 0.5 + 4.0 * rng.next_f64();
        let sol = free_energy(&q, &h, beta).unwrap();
        let f = corrector_from_rev(&sol);
        let brackets = per_state_bracket(&q, &h, beta, &f);
        for b in &brackets {
            prop_assert!((b - sol.g_pl).abs() <= 1e-9);
        }
        let g = GradientCocycle::new((0..q.m()).map(|_| 2.0 * rng.next_f64() - 1.0).collect());
        prop_assert!(evaluate_cocycle_formula(&q, &h, beta, &g) >= sol.g_pl - 1e-12);
    }

    #[test]
    fn lambda_convex_and_monotone_on_grids(seed in 0u64..10_000) {
        // steps here have nonnegative components, so lambda must be
        // nondecreasing along each coordinate, and convexity holds in h
        let q = presets::random_quotient(seed, 6);
        let dim = q.steps().dim();
        let lambda_at = |coords: &[f64]| {
            karp_eigenvalue(&build_maxplus_matrix(
                &q,
                &Tilt::new(coords.to_vec()).unwrap(),
            ))
        };
        for axis in 0..dim {
            let mut prev = None;
            let mut vals = Vec::new();
            for i in 0..7 {
                let mut coords = vec![0.1; dim];
                coords[axis] = -1.5 + i as f64 * 0.5;
                let v = lambda_at(&coords);
                if let Some(p) = prev {
                    prop_assert!(v >= p - 1e-12, "monotonicity violated");
                }
                prev = Some(v);
                vals.push(v);
            }
            for w in vals.windows(3) {
                prop_assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-9, "convexity violated");
            }
        }
    }
}

#[test]
fn gpp_hull_duality_with_tilt_grid() {
    // gpp(xi) + h.xi <= lambda(h) on a grid, equality at the dual tilt
    for seed in [3u64, 17, 40] {
        let q = presets::random_quotient(seed, 6);
        if q.steps().dim() != 2 {
            continue;
        }
        let circuits = enumerate_circuits(
            &build_maxplus_matrix(&q, &Tilt::zero(2)),
            DEFAULT_CIRCUIT_CAP,
        );
        for &sx in &[0.25, 0.5, 0.75] {
            let xi = [sx, 1.0 - sx];
            let v = match realize_velocity(q.steps(), &xi) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let g = match gpp_periodic(&circuits, &v) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let mut best_gap = f64::INFINITY;
            for i in -30..=30 {
                for j in -30..=30 {
                    let h = Tilt::new(vec![i as f64 * 0.1, j as f64 * 0.1]).unwrap();
                    let lambda = karp_eigenvalue(&build_maxplus_matrix(&q, &h));
                    let gap = lambda - (g + h.dot(&xi));
                    assert!(gap >= -1e-9, "duality violated at h = {h:?}");
                    best_gap = best_gap.min(gap);
                }
            }
            // the infimum over the grid comes close to equality
            assert!(best_gap <= 0.05, "no near-dual tilt found: gap {best_gap}");
        }
    }
}

#[test]
fn busemann_mean_identity_and_tilt_constancy() {
    // E_P[B(0,z)] under the uniform measure equals g_pl for every step, so
    // the recentred cocycle has (h - h(B)).z constant over steps
    let mut rng = SplitMix64::new(99);
    for seed in [1u64, 8, 21, 34] {
        let q = presets::random_quotient(seed, 6);
        let h = tilt_from(&mut rng, q.steps().dim());
        let beta = 0.5 + 3.0 * rng.next_f64();
        let sol = free_energy(&q, &h, beta).unwrap();
        let f = corrector_from_rev(&sol);
        for z in 0..q.steps().len() {
            // B(w, z) = g_pl + f(w) - f(T_z w); the mean of the potential
            // difference vanishes because T_z permutes the states
            let mean_b: f64 = (0..q.m())
                .map(|w| sol.g_pl + f.value(w) - f.value(q.shift(w, z)))
                .sum::<f64>()
                / q.m() as f64;
            assert!((mean_b - sol.g_pl).abs() <= 1e-9);
            // so -E[B tilde(0,z)] = h.z - g_pl and (h - h(B)).z is g_pl
            let h_b_z = -(mean_b - h.dot_step(q.steps().step(z)));
            let const_term = h.dot_step(q.steps().step(z)) - h_b_z;
            assert!((const_term - sol.g_pl).abs() <= 1e-9);
        }
    }
}

#[test]
fn stripes_gpp_interpolates_hull() {
    let q = presets::stripes_quotient();
    let circuits = enumerate_circuits(
        &build_maxplus_matrix(&q, &Tilt::zero(2)),
        DEFAULT_CIRCUIT_CAP,
    );
    // the hull over {((1,0), 1/2), ((0,1), 1), ((0,1), 0)} is linear in s
    for i in 0..=10 {
        let s = i as f64 / 10.0;
        let v = realize_velocity(q.steps(), &[s, 1.0 - s]).unwrap();
        let g = gpp_periodic(&circuits, &v).unwrap();
        let expect = (1.0 - s) * 1.0 + s * 0.5;
        assert!((g - expect).abs() < 1e-9, "s = {s}");
    }
}
