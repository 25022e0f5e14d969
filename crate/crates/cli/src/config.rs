//! JSON configuration schemas. Unknown keys are rejected everywhere so a
//! typo'd field fails loudly (exit 3) instead of being ignored.

use serde::Deserialize;

use polyvar::mc::{DistKind, Transform};

use crate::Failure;

pub fn parse<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Config(format!("bad config: {e}")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicConfig {
    /// Periodic environment document:
    /// `{dimension, period, weights, steps}`.
    pub environment: serde_json::Value,
    #[serde(default)]
    pub betas: Vec<f64>,
    pub tilts: Vec<Vec<f64>>,
    /// Velocities for point-to-point rows (hull of circuit mean steps).
    #[serde(default)]
    pub velocities: Vec<Vec<f64>>,
    #[serde(default = "default_busemann_n_max")]
    pub busemann_n_max: usize,
    #[serde(default = "default_circuit_cap")]
    pub circuit_cap: usize,
}

fn default_busemann_n_max() -> usize {
    64
}

fn default_circuit_cap() -> usize {
    polyvar::maxplus::DEFAULT_CIRCUIT_CAP
}

/// `beta` accepts a positive number or the string `"inf"`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum BetaParam {
    Number(f64),
    Word(InfWord),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfWord {
    Inf,
}

impl BetaParam {
    pub fn value(self) -> f64 {
        match self {
            BetaParam::Number(x) => x,
            BetaParam::Word(_) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Gpp,
    BusemannPp,
    BusemannPl,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub distribution: DistKind,
    pub transform: Transform,
    pub beta: BetaParam,
    pub estimator: Estimator,
    /// Velocity parameter `xi = (s, 1-s)` for `gpp` / `busemann_pp`.
    #[serde(default)]
    pub s: Option<f64>,
    /// Tilt for `busemann_pl`.
    #[serde(default)]
    pub h: Option<Vec<f64>>,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    /// `(x, y)` pairs for `busemann_pp`; defaults to `((0,0), (1,0))`.
    #[serde(default)]
    pub pairs: Option<Vec<((i64, i64), (i64, i64))>>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum OracleModel {
    Rost,
    Loggamma,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub model: OracleModel,
    #[serde(default)]
    pub rho: Option<f64>,
    pub s_grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DualityTransform {
    PlFromPp,
    PpFromPl,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualityConfig {
    pub model: OracleModel,
    #[serde(default)]
    pub rho: Option<f64>,
    pub transform: DualityTransform,
    /// Tilt for `pl_from_pp`.
    #[serde(default)]
    pub h: Option<Vec<f64>>,
    /// Velocity parameter for `pp_from_pl`.
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Tilt search box for `pp_from_pl` (Rost model), default `(-8, 8)`.
    #[serde(default)]
    pub t_range: Option<(f64, f64)>,
}

fn default_grid_points() -> usize {
    2001
}
