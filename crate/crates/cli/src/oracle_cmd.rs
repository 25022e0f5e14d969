//! `polyvar oracle`: closed-form curves on a velocity grid.
//!
//! CSV header: `model,rho,s,g_pp,theta_or_alpha,h1,h2,g_pl`. For the Rost
//! model `theta_or_alpha` is the Busemann parameter `alpha(xi)` and the
//! tilt columns hold the dual tilt `-(1/alpha, 1/(1-alpha))` (where `g_pl`
//! vanishes). For the log-gamma model they hold `theta(xi)` and the
//! representative dual tilt `(h1, 0)`.

use polyvar::oracles::{exp_alpha, exp_dual_tilt, rost_gpp, LogGammaModel};

use crate::config::{self, OracleConfig, OracleModel};
use crate::csvout::{num, Csv};
use crate::Failure;

pub const HEADER: &str = "model,rho,s,g_pp,theta_or_alpha,h1,h2,g_pl";

pub fn run(text: &str) -> Result<String, Failure> {
    let cfg: OracleConfig = config::parse(text)?;
    let mut csv = Csv::new(HEADER);
    match cfg.model {
        OracleModel::Rost => {
            for &s in &cfg.s_grid {
                let g = rost_gpp(s)?;
                let interior = s > 0.0 && s < 1.0;
                let (alpha, h1, h2, gpl) = if interior {
                    let a = exp_alpha(s)?;
                    let h = exp_dual_tilt(s)?;
                    (
                        num(a),
                        num(h.components()[0]),
                        num(h.components()[1]),
                        num(0.0),
                    )
                } else {
                    (String::new(), String::new(), String::new(), String::new())
                };
                csv.row(&["rost", "", &num(s), &num(g), &alpha, &h1, &h2, &gpl]);
            }
        }
        OracleModel::Loggamma => {
            let rho = cfg
                .rho
                .ok_or_else(|| Failure::Config("loggamma needs rho".into()))?;
            let model = LogGammaModel::new(rho)?;
            for &s in &cfg.s_grid {
                let g = model.gpp(s)?;
                let d = model.duality(s)?;
                csv.row(&[
                    "loggamma",
                    &num(rho),
                    &num(s),
                    &num(g),
                    &num(d.theta),
                    &num(d.tilt.components()[0]),
                    &num(d.tilt.components()[1]),
                    &num(d.g_pl),
                ]);
            }
        }
    }
    Ok(csv.finish())
}
