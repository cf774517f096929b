//! Problem data: dimensions, coefficient and cost evaluators, the affine
//! (LQ) family, the TOML schema and the built-in catalog.

mod catalog;
mod coefficients;
mod config;
mod cost;
mod dims;
mod lq;
mod problem;

pub use catalog::{
    anti_monotone_config, catalog_config, catalog_lookup, decoupled_constant_config, example31,
    example31_config, monotone_dissipative_config, CATALOG,
};
pub use coefficients::{fd_jacobian, fd_step, Arg, Coef, Coefficients, EvalCtx, StatePoint, StateVec};
pub use config::{
    build_lq_problem, load_problem_config, ControlsConfig, CostConfig, HorizonConfig, JumpsConfig,
    LqConfig, ProblemConfig, RunningCostConfig, TerminalConfig,
};
pub use cost::{CostModel, Quadratic, QuadraticCost, ZeroCost};
pub use dims::{ControlSet, Dimensions, JumpMeasure, Shape, TerminalMap, TerminalShift};
pub use lq::{AffineCoef, AffineTerm, LqCoefficients};
pub use problem::{InitialState, ProblemSpec};
