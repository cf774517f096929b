use serde::{Deserialize, Serialize};

use crate::audit::VerdictOptions;
use crate::error::{Error, Result};
use crate::kernel::{NoiseBundle, TimeGrid};
use crate::model::{build_lq_problem, ProblemConfig, ProblemSpec};
use crate::optimize::OptimizerOptions;
use crate::solver::{ControlProcess, PicardOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Solve,
    Adjoint,
    Audit,
    Optimize,
    VerifyExample,
    Identities,
}

impl CommandKind {
    pub fn label(self) -> &'static str {
        match self {
            CommandKind::Solve => "solve",
            CommandKind::Adjoint => "adjoint",
            CommandKind::Audit => "audit",
            CommandKind::Optimize => "optimize",
            CommandKind::VerifyExample => "verify-example",
            CommandKind::Identities => "identities",
        }
    }
}

/// Everything a run depends on. The problem is stored resolved, so a run can
/// be replayed from its manifest without the catalog or the original file.
/// The output directory is deliberately not part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    /// `catalog:<name>` or `file:<path>`
    pub source: String,
    pub problem: ProblemConfig,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    /// constant reference control (or starting control of the optimizer);
    /// a single value is broadcast to every control dimension
    pub control: Vec<f64>,
    /// constant probe controls of the verdict, broadcast like `control`
    pub probes: Vec<f64>,
    pub solver: PicardOptions,
    pub optimizer: OptimizerOptions,
    pub audit: VerdictOptions,
    /// turn a non-certified verdict into a failed run
    pub strict: bool,
}

impl RunConfig {
    pub fn problem(&self) -> Result<ProblemSpec> {
        build_lq_problem(&self.problem)
    }

    pub fn grid(&self, spec: &ProblemSpec) -> Result<TimeGrid> {
        TimeGrid::new(self.steps, spec.horizon)
    }

    pub fn noise(&self, spec: &ProblemSpec, grid: &TimeGrid) -> Result<NoiseBundle> {
        NoiseBundle::sample(grid, self.paths, &spec.dims, &spec.jumps, self.seed)
    }

    /// Constant control at `value`, broadcast to `r` dimensions when scalar.
    /// Values outside the control set are rejected rather than projected.
    pub fn constant_control(spec: &ProblemSpec, value: &[f64], nodes: usize) -> Result<ControlProcess> {
        let r = spec.dims.r;
        let v = match value.len() {
            0 => spec.controls.center(),
            1 => vec![value[0]; r],
            len if len == r => value.to_vec(),
            len => return Err(Error::shape("control value", r, len)),
        };
        if !spec.controls.contains(&v) {
            return Err(Error::Validation(format!("control {v:?} lies outside the control set")));
        }
        Ok(ControlProcess::constant(&spec.controls, &v, nodes))
    }
}
