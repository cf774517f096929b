//! Time grids, reproducible noise, discrete norms and the discrete product
//! rule.

mod grid;
mod noise;
mod norm;
mod product_rule;

pub use grid::TimeGrid;
pub use noise::NoiseBundle;
pub use norm::{discrete_norm_m2, field_norm, DiscreteNorm};
pub use product_rule::{
    check_discrete_product_rule, mean_se, reference_integrand_sets, IntegrandKind, Integrands, ProductRuleReport,
};
