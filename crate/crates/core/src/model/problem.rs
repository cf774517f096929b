use std::fmt;
use std::sync::Arc;

use super::coefficients::{Coef, Coefficients, EvalCtx, StateVec};
use super::cost::CostModel;
use super::dims::{ControlSet, Dimensions, JumpMeasure, Shape, TerminalMap};
use crate::error::{Error, Result};
use crate::paths::PathField;

/// Initial value of the forward component.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Constant(Vec<f64>),
    /// one vector per Monte Carlo path
    PerPath(Vec<Vec<f64>>),
}

impl InitialState {
    pub fn at(&self, path: usize) -> &[f64] {
        match self {
            InitialState::Constant(v) => v,
            InitialState::PerPath(all) => &all[path],
        }
    }
}

/// A fully specified controlled problem. Immutable and cheap to clone; the
/// evaluators are shared.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub dims: Dimensions,
    pub jumps: JumpMeasure,
    pub coeffs: Arc<dyn Coefficients>,
    pub cost: Arc<dyn CostModel>,
    pub terminal: TerminalMap,
    pub controls: ControlSet,
    pub initial: InitialState,
    pub horizon: f64,
    /// Extra regression features per `(node, path)`; set for systems whose
    /// coefficients are frozen along another trajectory.
    pub features: Option<Arc<PathField>>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dims", &self.dims)
            .field("jumps", &self.jumps)
            .field("terminal", &self.terminal)
            .field("controls", &self.controls)
            .field("initial", &self.initial)
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn shape(&self) -> Shape {
        self.dims.shape(self.jumps.len())
    }

    pub fn x0(&self, path: usize) -> &[f64] {
        self.initial.at(path)
    }

    /// Checks shapes and probes every evaluator at `t = 0`, `ζ = 0`, `v` at the
    /// center of the control set.
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        let shape = self.shape();
        if self.coeffs.shape() != shape {
            return Err(Error::Validation(format!(
                "coefficient shape {:?} does not match problem shape {:?}",
                self.coeffs.shape(),
                shape
            )));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Validation(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.terminal.rows != self.dims.m || self.terminal.cols != self.dims.n {
            return Err(Error::shape(
                "terminal matrix R",
                self.dims.m * self.dims.n,
                self.terminal.rows * self.terminal.cols,
            ));
        }
        if self.controls.dim() != self.dims.r {
            return Err(Error::shape("control set", self.dims.r, self.controls.dim()));
        }
        match &self.initial {
            InitialState::Constant(v) if v.len() != self.dims.n => {
                return Err(Error::shape("x0", self.dims.n, v.len()))
            }
            InitialState::PerPath(all) => {
                if let Some(v) = all.iter().find(|v| v.len() != self.dims.n) {
                    return Err(Error::shape("x0", self.dims.n, v.len()));
                }
            }
            _ => {}
        }
        let zero = StateVec::zeros(&shape);
        let v = self.controls.center();
        let ctx = EvalCtx::at(0.0);
        for coef in Coef::ALL {
            let mut out = vec![0.0; shape.coef_size(coef)];
            self.coeffs.eval(coef, &ctx, &zero.view(), &v, &mut out);
            if out.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    what: coef.label(),
                    step: 0,
                    path: 0,
                });
            }
        }
        if !self.cost.running(&ctx, &zero.view(), &v).is_finite() {
            return Err(Error::NonFinite {
                what: "running cost",
                step: 0,
                path: 0,
            });
        }
        Ok(())
    }

    pub fn with_initial(mut self, x0: Vec<f64>) -> Self {
        self.initial = InitialState::Constant(x0);
        self
    }

    pub fn with_cost(mut self, cost: Arc<dyn CostModel>) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_controls(mut self, controls: ControlSet) -> Self {
        self.controls = controls;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }
}
