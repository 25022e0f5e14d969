//! `polyvar duality`: grid Legendre transforms between the point-to-point
//! and point-to-level constants of the solvable models.
//!
//! CSV header: `model,transform,h,s,value,arg`. For `pl_from_pp` the result
//! is `sup_s [g_pp(s) + h.(s, 1-s)]` with `arg` the maximizing `s`; for
//! `pp_from_pl` it is `inf_t [g_pl(t, 0) - t s]` with `arg` the minimizing
//! tilt parameter.

use polyvar::model::Tilt;
use polyvar::oracles::{
    exp_gpl_tilt, legendre_pl_from_pp, legendre_pp_from_pl, loggamma_pl_curve, loggamma_pp_curve,
    rost_curve, CurveAxis, FreeEnergyCurve, LogGammaModel, Provenance,
};

use crate::config::{self, DualityConfig, DualityTransform, OracleModel};
use crate::csvout::{num, vecf, Csv};
use crate::Failure;

pub const HEADER: &str = "model,transform,h,s,value,arg";

fn s_grid(points: usize) -> Vec<f64> {
    let lo = 1e-4;
    let hi = 1.0 - 1e-4;
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

pub fn run(text: &str) -> Result<String, Failure> {
    let cfg: DualityConfig = config::parse(text)?;
    let mut csv = Csv::new(HEADER);
    let model_name = match cfg.model {
        OracleModel::Rost => "rost",
        OracleModel::Loggamma => "loggamma",
    };
    if cfg.grid_points < 200 {
        return Err(Failure::Config("grid_points must be at least 200".into()));
    }
    match cfg.transform {
        DualityTransform::PlFromPp => {
            let h_raw = cfg
                .h
                .ok_or_else(|| Failure::Config("pl_from_pp needs the tilt h".into()))?;
            let h = Tilt::new(h_raw)?;
            let curve = match cfg.model {
                OracleModel::Rost => rost_curve(&s_grid(cfg.grid_points))?,
                OracleModel::Loggamma => {
                    let rho = cfg
                        .rho
                        .ok_or_else(|| Failure::Config("loggamma needs rho".into()))?;
                    loggamma_pp_curve(&LogGammaModel::new(rho)?, &s_grid(cfg.grid_points))?
                }
            };
            let (value, arg) = legendre_pl_from_pp(&curve, &h)?;
            csv.row(&[
                model_name,
                "pl_from_pp",
                &vecf(h.components()),
                "",
                &num(value),
                &num(arg),
            ]);
        }
        DualityTransform::PpFromPl => {
            let s = cfg
                .s
                .ok_or_else(|| Failure::Config("pp_from_pl needs the velocity parameter s".into()))?;
            let curve = match cfg.model {
                OracleModel::Rost => {
                    let (lo, hi) = cfg.t_range.unwrap_or((-8.0, 8.0));
                    let pts: Vec<(f64, f64)> = (0..cfg.grid_points)
                        .map(|i| {
                            let t = lo + (hi - lo) * i as f64 / (cfg.grid_points - 1) as f64;
                            (t, exp_gpl_tilt(&Tilt::new(vec![t, 0.0]).unwrap()))
                        })
                        .collect();
                    FreeEnergyCurve::new(CurveAxis::Tilt, Provenance::Oracle, pts)?
                }
                OracleModel::Loggamma => {
                    let rho = cfg
                        .rho
                        .ok_or_else(|| Failure::Config("loggamma needs rho".into()))?;
                    loggamma_pl_curve(&LogGammaModel::new(rho)?, &s_grid(cfg.grid_points))?
                }
            };
            let (value, arg) = legendre_pp_from_pl(&curve, s)?;
            csv.row(&[
                model_name,
                "pp_from_pl",
                "",
                &num(s),
                &num(value),
                &num(arg),
            ]);
        }
    }
    Ok(csv.finish())
}
