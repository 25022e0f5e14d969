//! `polyvar periodic`: drives the finite-quotient solvers over grids of
//! tilts, inverse temperatures, and velocities.
//!
//! CSV header: `kind,beta,h,xi,state,step,value,aux,detail`. Row kinds:
//!
//! * `lambda` — max-plus eigenvalue at a tilt; aux = primitive (0/1),
//!   detail = critical-component cyclicities.
//! * `sigma` — eigenvector entry per state.
//! * `minmax` — difference-constraint value; detail = feasible potential.
//! * `circuit` — one row per elementary circuit: value = mean weight,
//!   aux = length, detail = mean step vector.
//! * `busemann_maxplus` — per (state, step): value = limit when it exists;
//!   otherwise aux = period with detail = the repeating values.
//! * `gpl` — positive-temperature constant per (beta, tilt); aux = solver
//!   residual.
//! * `entropy` — entropy of the maximizing measure; aux = identity gap.
//! * `busemann_pf` — per (state, step): value = limit formula, aux = value
//!   at the last computed step count.
//! * `gpp` — point-to-point constant per velocity via the circuit hull of
//!   the untilted matrix.

use polyvar::maxplus::{
    build_maxplus_matrix, busemann_maxplus, enumerate_circuits, eigenvector_and_critical_graph,
    gpp_periodic, karp_eigenvalue, minmax_via_difference_constraints, BusemannBehavior,
    DEFAULT_MINMAX_TOL,
};
use polyvar::model::{realize_velocity, Tilt};
use polyvar::periodic::{build_quotient, load_json};
use polyvar::pf::{busemann_pf, free_energy, invariant_measure_and_entropy, pattern_period};

use crate::config::{self, PeriodicConfig};
use crate::csvout::{num, vecf, Csv};
use crate::Failure;

pub const HEADER: &str = "kind,beta,h,xi,state,step,value,aux,detail";

pub fn run(text: &str) -> Result<String, Failure> {
    let cfg: PeriodicConfig = config::parse(text)?;
    let (env, steps) = load_json(&cfg.environment.to_string())?;
    let q = build_quotient(&env, &steps)?;
    let mut csv = Csv::new(HEADER);
    let period = pattern_period(&q);

    for h_raw in &cfg.tilts {
        let h = Tilt::new(h_raw.clone())?;
        let hs = vecf(h.components());
        let a = build_maxplus_matrix(&q, &h);
        let lambda = karp_eigenvalue(&a);
        let eigen = eigenvector_and_critical_graph(&a, lambda);
        let cyclicities: Vec<String> = eigen
            .components
            .iter()
            .map(|c| c.cyclicity.to_string())
            .collect();
        csv.row(&[
            "lambda",
            "inf",
            &hs,
            "",
            "",
            "",
            &num(lambda),
            if eigen.primitive { "1" } else { "0" },
            &cyclicities.join(";"),
        ]);
        for (w, s) in eigen.sigma.iter().enumerate() {
            csv.row(&[
                "sigma",
                "inf",
                &hs,
                "",
                &w.to_string(),
                "",
                &num(*s),
                "",
                "",
            ]);
        }
        let (mm, f) = minmax_via_difference_constraints(&a, DEFAULT_MINMAX_TOL);
        csv.row(&[
            "minmax",
            "inf",
            &hs,
            "",
            "",
            "",
            &num(mm),
            "",
            &vecf(f.potential()),
        ]);
        let circuits = enumerate_circuits(&a, cfg.circuit_cap);
        if !circuits.complete {
            csv.row(&["circuit_cap_hit", "inf", &hs, "", "", "", "", "", ""]);
        }
        for c in &circuits.circuits {
            csv.row(&[
                "circuit",
                "inf",
                &hs,
                "",
                &c.nodes[0].to_string(),
                "",
                &num(c.mean_weight),
                &c.len.to_string(),
                &vecf(&c.mean_step),
            ]);
        }
        let bus = busemann_maxplus(&a, &q, cfg.busemann_n_max)?;
        for rep in &bus.reports {
            let (value, aux, detail) = match &rep.behavior {
                BusemannBehavior::Limit(v) => (num(*v), String::new(), String::new()),
                BusemannBehavior::Oscillation { period, values } => {
                    (String::new(), period.to_string(), vecf(values))
                }
                BusemannBehavior::Undetermined => {
                    (String::new(), String::new(), String::new())
                }
            };
            csv.row(&[
                "busemann_maxplus",
                "inf",
                &hs,
                "",
                &rep.state.to_string(),
                &rep.step.to_string(),
                &value,
                &aux,
                &detail,
            ]);
        }

        for &beta in &cfg.betas {
            let sol = free_energy(&q, &h, beta)?;
            let bs = num(beta);
            csv.row(&[
                "gpl",
                &bs,
                &hs,
                "",
                "",
                "",
                &num(sol.g_pl),
                &num(sol.residual),
                "",
            ]);
            let meas = invariant_measure_and_entropy(&q, &sol);
            csv.row(&[
                "entropy",
                &bs,
                &hs,
                "",
                "",
                "",
                &num(meas.entropy),
                &num(meas.identity_gap),
                "",
            ]);
            if period == 1 {
                let bus = busemann_pf(&q, &h, beta, cfg.busemann_n_max)?;
                for rep in &bus.reports {
                    csv.row(&[
                        "busemann_pf",
                        &bs,
                        &hs,
                        "",
                        &rep.state.to_string(),
                        &rep.step.to_string(),
                        &num(rep.formula),
                        &num(rep.final_value),
                        "",
                    ]);
                }
            }
        }
    }

    if !cfg.velocities.is_empty() {
        let a0 = build_maxplus_matrix(&q, &Tilt::zero(steps.dim()));
        let circuits0 = enumerate_circuits(&a0, cfg.circuit_cap);
        for xi in &cfg.velocities {
            let v = realize_velocity(&steps, xi)?;
            let g = gpp_periodic(&circuits0, &v)?;
            csv.row(&["gpp", "inf", "", &vecf(xi), "", "", &num(g), "", ""]);
        }
    }

    Ok(csv.finish())
}
