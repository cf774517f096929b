//! Declarative linear-quadratic problems and their TOML form.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::coefficients::Coef;
use super::cost::{Quadratic, QuadraticCost};
use super::dims::{ControlSet, Dimensions, JumpMeasure, TerminalMap, TerminalShift};
use super::lq::{AffineCoef, LqCoefficients};
use super::problem::{InitialState, ProblemSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonConfig {
    #[serde(rename = "T")]
    pub t: f64,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalConfig {
    pub c: f64,
    /// `m × n`, row-major
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    pub xi: Vec<f64>,
}

/// Either explicit marks and weights, or `count` midpoints of `[lo, hi]`
/// sharing `total` mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JumpsConfig {
    Explicit { marks: Vec<f64>, weights: Vec<f64> },
    Grid { lo: f64, hi: f64, count: usize, total: f64 },
}

impl JumpsConfig {
    pub fn build(&self) -> Result<JumpMeasure> {
        match self {
            JumpsConfig::Explicit { marks, weights } => JumpMeasure::new(marks.clone(), weights.clone()),
            JumpsConfig::Grid { lo, hi, count, total } => JumpMeasure::midpoint_grid(*lo, *hi, *count, *total),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LqConfig {
    pub b: AffineCoef,
    pub sigma: AffineCoef,
    pub phi: AffineCoef,
    pub f: AffineCoef,
    pub g: AffineCoef,
}

/// Running-cost blocks; `k` applies to each mark's `m`-vector and is weighted
/// by the jump measure.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunningCostConfig {
    pub y: Quadratic,
    #[serde(rename = "Y")]
    pub big_y: Quadratic,
    pub z: Quadratic,
    #[serde(rename = "Z")]
    pub big_z: Quadratic,
    pub k: Quadratic,
    pub v: Quadratic,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostConfig {
    pub running: RunningCostConfig,
    pub terminal: Quadratic,
    pub initial: Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlsConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Complete parameter pack of an LQ problem. This is also the on-disk schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub dims: Dimensions,
    pub horizon: HorizonConfig,
    pub terminal: TerminalConfig,
    pub jumps: JumpsConfig,
    #[serde(default)]
    pub lq: LqConfig,
    #[serde(default)]
    pub cost: CostConfig,
    pub controls: ControlsConfig,
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Reads and validates a TOML problem file.
pub fn load_problem_config(path: impl AsRef<Path>) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let config = ProblemConfig::from_toml(&text)?;
    build_lq_problem(&config)
}

/// Builds a problem whose coefficients are the affine maps of the pack, with
/// exact Jacobians, and whose cost is the separable quadratic of the pack.
pub fn build_lq_problem(pack: &ProblemConfig) -> Result<ProblemSpec> {
    let dims = pack.dims;
    dims.validate()?;
    let jumps = pack.jumps.build()?;
    let shape = dims.shape(jumps.len());

    let mut coeffs = LqCoefficients::zero(shape, jumps.marks().to_vec(), jumps.weights().to_vec());
    for (coef, src) in [
        (Coef::Drift, &pack.lq.b),
        (Coef::Diffusion, &pack.lq.sigma),
        (Coef::Jump, &pack.lq.phi),
        (Coef::Driver, &pack.lq.f),
        (Coef::BackwardDiffusion, &pack.lq.g),
    ] {
        *coeffs.coef_mut(coef) = src.clone();
    }
    coeffs.validate()?;

    let running = &pack.cost.running;
    let cost = QuadraticCost {
        shape,
        weights: jumps.weights().to_vec(),
        y: running.y.clone(),
        big_y: running.big_y.clone(),
        z: running.z.clone(),
        big_z: running.big_z.clone(),
        k: running.k.clone(),
        v: running.v.clone(),
        terminal: pack.cost.terminal.clone(),
        initial: pack.cost.initial.clone(),
    };
    cost.validate()?;

    let terminal = TerminalMap::new(
        pack.terminal.c,
        pack.terminal.r.clone(),
        dims.m,
        dims.n,
        TerminalShift::Constant(pack.terminal.xi.clone()),
    )?;
    let controls = ControlSet::boxed(pack.controls.lo.clone(), pack.controls.hi.clone())?;

    let spec = ProblemSpec {
        name: pack.name.clone().unwrap_or_else(|| "config".into()),
        dims,
        jumps,
        coeffs: Arc::new(coeffs),
        cost: Arc::new(cost),
        terminal,
        controls,
        initial: InitialState::Constant(pack.horizon.x0.clone()),
        horizon: pack.horizon.t,
        features: None,
    };
    spec.validate()?;
    Ok(spec)
}
