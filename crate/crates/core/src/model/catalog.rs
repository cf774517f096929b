//! Built-in problem instances.

use super::config::{
    build_lq_problem, ControlsConfig, CostConfig, HorizonConfig, JumpsConfig, LqConfig, ProblemConfig,
    RunningCostConfig, TerminalConfig,
};
use super::cost::Quadratic;
use super::dims::Dimensions;
use super::lq::{AffineCoef, AffineTerm};
use super::problem::ProblemSpec;
use crate::error::{Error, Result};

pub const CATALOG: [&str; 4] = [
    "example31",
    "decoupled-constant",
    "monotone-dissipative",
    "anti-monotone",
];

fn c(x: f64) -> AffineTerm {
    AffineTerm::constant(vec![x])
}

fn half_square() -> Quadratic {
    Quadratic::scaled_identity(1, 1.0)
}

fn unit_box() -> ControlsConfig {
    ControlsConfig {
        lo: vec![-1.0],
        hi: vec![1.0],
    }
}

fn isotropic_cost() -> CostConfig {
    CostConfig {
        running: RunningCostConfig {
            y: half_square(),
            big_y: half_square(),
            z: half_square(),
            big_z: half_square(),
            k: half_square(),
            v: half_square(),
        },
        terminal: half_square(),
        initial: half_square(),
    }
}

/// The scalar closed-form benchmark with initial value `x`:
///
/// ```text
/// dy = (1+t)v dt + (−z + Z + ∫kν + v) dW − z dB̄ − v ∫ρ Ñ(dρ,dt)
/// dY = (4−t)v dt − 3/2 (z + Z + ∫kν + v) dB̄ + Z dW + ∫k Ñ(dρ,dt)
/// y_0 = x,  Y_1 = y_1,  U = [−1, 1]
/// ```
///
/// with cost `½E[∫(y²+Y²+z²+Z²+∫k²ν+v²)dt + y_1² + Y_0²]`. For `u ≡ 0` the
/// solution is `(x, x, 0, 0, 0)` and the adjoint is `(−x(1+t), x(4−t), 0, 0, 0)`.
/// The mark space `[0, 1]` carries `ν = 2·Lebesgue`, discretized by 8 midpoints.
pub fn example31_config(x: f64) -> ProblemConfig {
    let gcoef = 1.5;
    ProblemConfig {
        name: Some("example31".into()),
        dims: Dimensions::scalar(),
        horizon: HorizonConfig { t: 1.0, x0: vec![x] },
        terminal: TerminalConfig {
            c: 1.0,
            r: vec![1.0],
            xi: vec![0.0],
        },
        jumps: JumpsConfig::Grid {
            lo: 0.0,
            hi: 1.0,
            count: 8,
            total: 2.0,
        },
        lq: LqConfig {
            b: AffineCoef {
                v: c(1.0).with_time(vec![1.0]),
                ..AffineCoef::default()
            },
            sigma: AffineCoef {
                z: c(-1.0),
                big_z: c(1.0),
                kint: c(1.0),
                v: c(1.0),
                ..AffineCoef::default()
            },
            phi: AffineCoef {
                v: AffineTerm::default().with_mark(vec![-1.0]),
                ..AffineCoef::default()
            },
            f: AffineCoef {
                v: c(-4.0).with_time(vec![1.0]),
                ..AffineCoef::default()
            },
            g: AffineCoef {
                z: c(gcoef),
                big_z: c(gcoef),
                kint: c(gcoef),
                v: c(gcoef),
                ..AffineCoef::default()
            },
        },
        cost: isotropic_cost(),
        controls: unit_box(),
    }
}

/// All coefficients vanish and `h(y) = y + 5` with `y_0 = 0`, so the solution
/// is `y ≡ 0`, `Y ≡ 5`, `z = Z = k = 0`. Cost `½∫v² dt`.
pub fn decoupled_constant_config() -> ProblemConfig {
    ProblemConfig {
        name: Some("decoupled-constant".into()),
        dims: Dimensions::scalar(),
        horizon: HorizonConfig {
            t: 1.0,
            x0: vec![0.0],
        },
        terminal: TerminalConfig {
            c: 1.0,
            r: vec![1.0],
            xi: vec![5.0],
        },
        jumps: JumpsConfig::Explicit {
            marks: vec![0.5],
            weights: vec![1.0],
        },
        lq: LqConfig::default(),
        cost: CostConfig {
            running: RunningCostConfig {
                v: half_square(),
                ..RunningCostConfig::default()
            },
            ..CostConfig::default()
        },
        controls: unit_box(),
    }
}

/// `f = s·y`, `b = −s·Y + v`, `g = s·z`, `σ = −s·Z`, `φ = −s·k`, `h(y) = s·y`.
fn dissipative(name: &str, s: f64) -> ProblemConfig {
    ProblemConfig {
        name: Some(name.into()),
        dims: Dimensions::scalar(),
        horizon: HorizonConfig {
            t: 1.0,
            x0: vec![0.0],
        },
        terminal: TerminalConfig {
            c: s,
            r: vec![1.0],
            xi: vec![0.0],
        },
        jumps: JumpsConfig::Explicit {
            marks: vec![0.25, 0.75],
            weights: vec![0.5, 0.5],
        },
        lq: LqConfig {
            b: AffineCoef {
                big_y: c(-s),
                v: c(1.0),
                ..AffineCoef::default()
            },
            sigma: AffineCoef {
                big_z: c(-s),
                ..AffineCoef::default()
            },
            phi: AffineCoef {
                kpoint: c(-s),
                ..AffineCoef::default()
            },
            f: AffineCoef {
                y: c(s),
                ..AffineCoef::default()
            },
            g: AffineCoef {
                z: c(s),
                ..AffineCoef::default()
            },
        },
        cost: isotropic_cost(),
        controls: unit_box(),
    }
}

/// Bracket `⟨A(ζ)−A(ζ̄), ζ−ζ̄⟩ = −|Δζ|²` with `c = 1`.
pub fn monotone_dissipative_config() -> ProblemConfig {
    dissipative("monotone-dissipative", 1.0)
}

/// Sign-flipped twin: bracket `+|Δζ|²` with `c = −1`.
pub fn anti_monotone_config() -> ProblemConfig {
    dissipative("anti-monotone", -1.0)
}

/// Parameter pack of a named instance. `x` overrides the initial value where
/// the instance has one (`example31` defaults to `x = 1`).
pub fn catalog_config(name: &str, x: Option<f64>) -> Result<ProblemConfig> {
    let mut config = match name {
        "example31" => example31_config(x.unwrap_or(1.0)),
        "decoupled-constant" => decoupled_constant_config(),
        "monotone-dissipative" => monotone_dissipative_config(),
        "anti-monotone" => anti_monotone_config(),
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    if let Some(x) = x {
        config.horizon.x0 = vec![x; config.dims.n];
    }
    Ok(config)
}

pub fn catalog_lookup(name: &str) -> Result<ProblemSpec> {
    build_lq_problem(&catalog_config(name, None)?)
}

pub fn example31(x: f64) -> ProblemSpec {
    build_lq_problem(&example31_config(x)).expect("built-in instance is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coef, EvalCtx, StateVec};

    #[test]
    fn every_entry_builds() {
        for name in CATALOG {
            let spec = catalog_lookup(name).unwrap();
            assert_eq!(spec.name, name);
        }
        assert!(matches!(catalog_lookup("nope"), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn example31_coefficients_at_half() {
        let spec = example31(1.0);
        let shape = spec.shape();
        let zero = StateVec::zeros(&shape);
        let ctx = EvalCtx::at(0.5);
        let eval = |coef| {
            let mut out = vec![0.0; shape.coef_size(coef)];
            spec.coeffs.eval(coef, &ctx, &zero.view(), &[1.0], &mut out);
            out
        };
        assert!((eval(Coef::Drift)[0] - 1.5).abs() < 1e-15);
        assert!((eval(Coef::Driver)[0] + 3.5).abs() < 1e-15);
        assert!((eval(Coef::Diffusion)[0] - 1.0).abs() < 1e-15);
        assert!((eval(Coef::BackwardDiffusion)[0] - 1.5).abs() < 1e-15);
        let phi = eval(Coef::Jump);
        for (value, rho) in phi.iter().zip(spec.jumps.marks()) {
            assert!((value + rho).abs() < 1e-15);
        }
    }

    #[test]
    fn example31_mark_measure_has_unit_first_moment() {
        let spec = example31(1.0);
        assert!((spec.jumps.integrate(|r| r) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn config_roundtrips_through_toml() {
        for name in CATALOG {
            let config = catalog_config(name, None).unwrap();
            let text = config.to_toml().unwrap();
            assert_eq!(ProblemConfig::from_toml(&text).unwrap(), config);
        }
    }
}
