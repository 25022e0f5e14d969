//! `polyvar mc`: Monte-Carlo estimation runs.
//!
//! CSV header: `model,beta,h_or_xi,n,replicas,seed,estimate,stderr,oracle,abs_err`.
//! The `model` field names the distribution, estimator, and (for gradient
//! estimators) the step or pair the row refers to. When a closed-form oracle
//! covers the configuration (Rost shape for exponential last-passage,
//! log-gamma at beta 1), its value and the absolute error are filled in.

use polyvar::mc::{
    estimate_busemann_pl, estimate_busemann_pp, estimate_gpp, DistKind, DistributionSpec,
    Transform,
};
use polyvar::model::{Tilt, Velocity};
use polyvar::oracles::{exp_alpha, exp_gpl_tilt, rost_gpp, LogGammaModel};

use crate::config::{self, Estimator, McConfig};
use crate::csvout::{num, opt_num, vecf, Csv};
use crate::Failure;

pub const HEADER: &str = "model,beta,h_or_xi,n,replicas,seed,estimate,stderr,oracle,abs_err";

fn model_name(dist: &DistributionSpec) -> String {
    let kind = match dist.kind {
        DistKind::Exponential => "exponential".to_string(),
        DistKind::Gamma { shape } => format!("gamma({})", shape),
        DistKind::Bernoulli { p } => format!("bernoulli({})", p),
        DistKind::NormalTruncated { lo, hi } => format!("normal_truncated({}:{})", lo, hi),
    };
    match dist.transform {
        Transform::Identity => kind,
        Transform::NegLogPlusLog2 => format!("{kind}+neg_log_plus_log2"),
    }
}

/// True when the configuration is the exponential corner growth model.
fn is_exp_lpp(dist: &DistributionSpec, beta: f64) -> bool {
    dist.kind == DistKind::Exponential
        && dist.transform == Transform::Identity
        && beta.is_infinite()
}

/// The log-gamma polymer oracle applies at beta = 1 with Gamma weights and
/// the log transform.
fn loggamma_shape(dist: &DistributionSpec, beta: f64) -> Option<f64> {
    match (dist.kind, dist.transform) {
        (DistKind::Gamma { shape }, Transform::NegLogPlusLog2) if beta == 1.0 => Some(shape),
        _ => None,
    }
}

pub fn run(text: &str, seed_override: Option<u64>, threads: usize) -> Result<String, Failure> {
    let cfg: McConfig = config::parse(text)?;
    let dist = DistributionSpec::new(cfg.distribution, cfg.transform)?;
    let beta = cfg.beta.value();
    let seed = seed_override.unwrap_or(cfg.seed);
    let mut csv = Csv::new(HEADER);
    let name = model_name(&dist);
    let beta_s = if beta.is_infinite() {
        "inf".to_string()
    } else {
        num(beta)
    };

    match cfg.estimator {
        Estimator::Gpp => {
            let s = cfg
                .s
                .ok_or_else(|| Failure::Config("gpp needs the velocity parameter s".into()))?;
            let v = Velocity::planar(s)?;
            let est = estimate_gpp(dist, beta, &v, cfg.n, cfg.replicas, seed, threads)?;
            let oracle = if is_exp_lpp(&dist, beta) {
                Some(rost_gpp(s)?)
            } else if let Some(shape) = loggamma_shape(&dist, beta) {
                Some(LogGammaModel::new(shape)?.gpp(s)?)
            } else {
                None
            };
            csv.row(&[
                &format!("{name}:gpp"),
                &beta_s,
                &vecf(v.xi()),
                &cfg.n.to_string(),
                &cfg.replicas.to_string(),
                &seed.to_string(),
                &num(est.estimate.mean),
                &num(est.estimate.stderr),
                &opt_num(oracle),
                &opt_num(oracle.map(|o| (est.estimate.mean - o).abs())),
            ]);
        }
        Estimator::BusemannPp => {
            let s = cfg.s.ok_or_else(|| {
                Failure::Config("busemann_pp needs the velocity parameter s".into())
            })?;
            let v = Velocity::planar(s)?;
            let pairs = cfg.pairs.unwrap_or_else(|| vec![((0, 0), (1, 0))]);
            let est =
                estimate_busemann_pp(dist, beta, &v, &pairs, cfg.n, cfg.replicas, seed, threads)?;
            for pz in &est.per_z {
                for (pair, e) in pairs.iter().zip(&pz.per_pair) {
                    let diff = (pair.1 .0 - pair.0 .0, pair.1 .1 - pair.0 .1);
                    let oracle = if is_exp_lpp(&dist, beta) {
                        match diff {
                            (1, 0) => Some(exp_alpha(s)?.recip()),
                            (0, 1) => Some((1.0 - exp_alpha(s)?).recip()),
                            _ => None,
                        }
                    } else {
                        None
                    };
                    csv.row(&[
                        &format!(
                            "{name}:busemann_pp:z={};{}:pair=({};{})->({};{})",
                            pz.z.0, pz.z.1, pair.0 .0, pair.0 .1, pair.1 .0, pair.1 .1
                        ),
                        &beta_s,
                        &vecf(v.xi()),
                        &cfg.n.to_string(),
                        &cfg.replicas.to_string(),
                        &seed.to_string(),
                        &num(e.mean),
                        &num(e.stderr),
                        &opt_num(oracle),
                        &opt_num(oracle.map(|o| (e.mean - o).abs())),
                    ]);
                }
            }
        }
        Estimator::BusemannPl => {
            let h_raw = cfg
                .h
                .ok_or_else(|| Failure::Config("busemann_pl needs the tilt h".into()))?;
            let h = Tilt::new(h_raw)?;
            let est = estimate_busemann_pl(dist, beta, &h, cfg.n, cfg.replicas, seed, threads)?;
            let oracle = if is_exp_lpp(&dist, beta) {
                Some(exp_gpl_tilt(&h))
            } else if let Some(shape) = loggamma_shape(&dist, beta) {
                LogGammaModel::new(shape)?.gpl_of_tilt(&h).ok()
            } else {
                None
            };
            for (zi, e) in est.per_step.iter().enumerate() {
                let step = if zi == 0 { "e1" } else { "e2" };
                csv.row(&[
                    &format!("{name}:busemann_pl:{step}"),
                    &beta_s,
                    &vecf(h.components()),
                    &cfg.n.to_string(),
                    &cfg.replicas.to_string(),
                    &seed.to_string(),
                    &num(e.mean),
                    &num(e.stderr),
                    &opt_num(oracle),
                    &opt_num(oracle.map(|o| (e.mean - o).abs())),
                ]);
            }
        }
    }
    Ok(csv.finish())
}
