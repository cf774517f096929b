//! Checks of the hypotheses and identities behind the sufficient maximum
//! principle, and the verdict that combines them.

mod convexity;
mod duality;
mod maximum;
mod monotonicity;
mod sampling;
mod verdict;

pub use convexity::{
    check_cost_convexity, check_hamiltonian_concavity, AdjointSampler, ConcavityReport, ConvexityReport,
};
pub use duality::{duality_residuals, DualityReport};
pub use maximum::{check_maximum_condition, MaxConditionOptions, MaxConditionReport};
pub use monotonicity::{
    audit_monotonicity, audit_monotonicity_identical_pairs, bracket_sample, classify, fit_monotonicity,
    BracketSample, MonotonicityReport, Regime, WorstSample,
};
pub use verdict::{
    probe_regularity, sufficiency_verdict, OptimalityVerdict, Overall, ProbeOutcome, RegularityReport,
    VerdictOptions,
};
