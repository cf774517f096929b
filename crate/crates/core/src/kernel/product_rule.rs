//! Discrete integration by parts for two processes driven by the same noise.
//!
//! A process is accumulated as
//! `α_{i+1} = α_i + β_iΔt + γ_{i+1}ΔB_i + δ_iΔW_i + Σ_j K_i(ρ_j)ΔÑ_ij`,
//! with the `dB̄` integrand at the right node and every other integrand at the
//! left node. Stochastic integrals against `α̂` pair the left-node value of
//! `α` with `dt`, `dW`, `Ñ` and the right-node value with `dB̄`.

use serde::{Deserialize, Serialize};

use super::noise::NoiseBundle;
use crate::error::{Error, Result};
use crate::paths::PathField;

/// Which integrand a generator callback is asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrandKind {
    /// `β_i`, width `w`, nodes `0..N`
    Drift,
    /// `γ_i`, width `w × l`, nodes `1..=N` (node 0 unused)
    Backward,
    /// `δ_i`, width `w × d`, nodes `0..N`
    Forward,
    /// `K_i`, width `w × J`, nodes `0..N`
    Jump,
}

/// Integrands of one process of width `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrands {
    pub width: usize,
    pub alpha0: Vec<f64>,
    pub drift: PathField,
    pub backward: PathField,
    pub forward: PathField,
    pub jump: PathField,
}

impl Integrands {
    /// Fills every integrand from `f(kind, node, path, out)`.
    pub fn from_fn(
        noise: &NoiseBundle,
        alpha0: Vec<f64>,
        mut f: impl FnMut(IntegrandKind, usize, usize, &mut [f64]),
    ) -> Self {
        let w = alpha0.len();
        let (n, m) = (noise.steps(), noise.paths());
        let nodes = n + 1;
        let mut fill = |kind, width| {
            PathField::from_fn(nodes, m, width, |i, p, out| {
                let used = match kind {
                    IntegrandKind::Backward => i >= 1,
                    _ => i < n,
                };
                if used {
                    f(kind, i, p, out)
                }
            })
        };
        let drift = fill(IntegrandKind::Drift, w);
        let backward = fill(IntegrandKind::Backward, w * noise.l());
        let forward = fill(IntegrandKind::Forward, w * noise.d());
        let jump = fill(IntegrandKind::Jump, w * noise.marks());
        Self {
            width: w,
            alpha0,
            drift,
            backward,
            forward,
            jump,
        }
    }

    /// Deterministic constant integrands.
    pub fn constant(
        noise: &NoiseBundle,
        alpha0: Vec<f64>,
        drift: &[f64],
        backward: &[f64],
        forward: &[f64],
        jump: &[f64],
    ) -> Self {
        Self::from_fn(noise, alpha0, |kind, _, _, out| {
            let src = match kind {
                IntegrandKind::Drift => drift,
                IntegrandKind::Backward => backward,
                IntegrandKind::Forward => forward,
                IntegrandKind::Jump => jump,
            };
            out.copy_from_slice(src);
        })
    }

    fn check(&self, noise: &NoiseBundle) -> Result<()> {
        let nodes = noise.steps() + 1;
        let w = self.width;
        for (name, field, width) in [
            ("drift integrand", &self.drift, w),
            ("backward integrand", &self.backward, w * noise.l()),
            ("forward integrand", &self.forward, w * noise.d()),
            ("jump integrand", &self.jump, w * noise.marks()),
        ] {
            if field.nodes() != nodes || field.paths() != noise.paths() || field.width() != width {
                return Err(Error::shape(name, nodes * noise.paths() * width, field.as_slice().len()));
            }
        }
        Ok(())
    }

    /// The four pieces of `Δα_i` on a path: drift, backward, forward, jump.
    fn pieces(&self, noise: &NoiseBundle, i: usize, p: usize) -> [Vec<f64>; 4] {
        let w = self.width;
        let dt = noise.grid().dt();
        let (l, d, marks) = (noise.l(), noise.d(), noise.marks());
        let drift: Vec<f64> = self.drift.get(i, p).iter().map(|b| b * dt).collect();
        let gamma = self.backward.get(i + 1, p);
        let db = noise.db(i, p);
        let backward = (0..w)
            .map(|a| (0..l).map(|c| gamma[a * l + c] * db[c]).sum())
            .collect();
        let delta = self.forward.get(i, p);
        let dw = noise.dw(i, p);
        let forward = (0..w)
            .map(|a| (0..d).map(|c| delta[a * d + c] * dw[c]).sum())
            .collect();
        let k = self.jump.get(i, p);
        let jump = (0..w)
            .map(|a| (0..marks).map(|j| k[a * marks + j] * noise.dn(i, p, j)).sum())
            .collect();
        [drift, backward, forward, jump]
    }

    /// Discrete trajectory of `α`.
    pub fn accumulate(&self, noise: &NoiseBundle) -> Result<PathField> {
        self.check(noise)?;
        let (n, m, w) = (noise.steps(), noise.paths(), self.width);
        let mut alpha = PathField::zeros(n + 1, m, w);
        for p in 0..m {
            alpha.get_mut(0, p).copy_from_slice(&self.alpha0);
            for i in 0..n {
                let pieces = self.pieces(noise, i, p);
                let next: Vec<f64> = (0..w)
                    .map(|a| alpha.get(i, p)[a] + pieces.iter().map(|piece| piece[a]).sum::<f64>())
                    .collect();
                alpha.get_mut(i + 1, p).copy_from_slice(&next);
            }
        }
        Ok(alpha)
    }
}

/// Outcome of the discrete product rule check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductRuleReport {
    /// Largest relative pathwise telescoping residual.
    pub pathwise_max_residual: f64,
    /// Mean over paths of `⟨α_T,α̂_T⟩ − ⟨α_0,α̂_0⟩ − Σ(stochastic integrals) − Σ(compensators)`.
    pub expectation_residual: f64,
    pub expectation_se: f64,
    /// Mean of `E⟨α_T, α̂_T⟩ − ⟨α_0, α̂_0⟩`.
    pub lhs_mean: f64,
    /// Mean of the `−Σ⟨γ, γ̂⟩Δt` compensator (nonpositive when `γ = γ̂`).
    pub backward_correction: f64,
    /// Mean of the `+Σ⟨δ, δ̂⟩Δt` compensator.
    pub forward_correction: f64,
    /// Mean of the `+ΣΣ w_j⟨K_j, K̂_j⟩Δt` compensator.
    pub jump_correction: f64,
    pub paths: usize,
}

impl ProductRuleReport {
    pub fn pathwise_ok(&self, tol: f64) -> bool {
        self.pathwise_max_residual <= tol
    }

    /// `|residual| ≤ 3·SE`, or exact zero up to rounding when the SE vanishes.
    pub fn expectation_ok(&self) -> bool {
        self.expectation_residual.abs() <= 3.0 * self.expectation_se + 1e-12 * (1.0 + self.lhs_mean.abs())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add(parts: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; parts[0].len()];
    for part in parts {
        for (o, x) in out.iter_mut().zip(part) {
            *o += x;
        }
    }
    out
}

pub fn check_discrete_product_rule(
    a: &Integrands,
    b: &Integrands,
    noise: &NoiseBundle,
) -> Result<ProductRuleReport> {
    if a.width != b.width {
        return Err(Error::shape("product rule widths", a.width, b.width));
    }
    let alpha = a.accumulate(noise)?;
    let beta = b.accumulate(noise)?;
    let (n, m, w) = (noise.steps(), noise.paths(), a.width);
    let dt = noise.grid().dt();
    let weights = noise.weights();
    let marks = noise.marks();

    let mut worst: f64 = 0.0;
    let mut samples = Vec::with_capacity(m);
    let (mut lhs_sum, mut back_sum, mut fwd_sum, mut jump_sum) = (0.0, 0.0, 0.0, 0.0);
    for p in 0..m {
        let lhs = dot(alpha.get(n, p), beta.get(n, p)) - dot(alpha.get(0, p), beta.get(0, p));
        let mut integrals = 0.0;
        let mut covariation = 0.0;
        let mut scale = lhs.abs() + dot(alpha.get(0, p), beta.get(0, p)).abs();
        let (mut back, mut fwd, mut jmp, mut drift2) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let pa = a.pieces(noise, i, p);
            let pb = b.pieces(noise, i, p);
            let da = add(&pa);
            let db = add(&pb);
            let (a_i, a_next) = (alpha.get(i, p), alpha.get(i + 1, p));
            let (b_i, b_next) = (beta.get(i, p), beta.get(i + 1, p));
            // left-node pairing except the dB̄ piece, which meets the right node
            let left_b: Vec<f64> = (0..w).map(|c| db[c] - pb[1][c]).collect();
            let left_a: Vec<f64> = (0..w).map(|c| da[c] - pa[1][c]).collect();
            let ia = dot(a_i, &left_b) + dot(a_next, &pb[1]);
            let ib = dot(b_i, &left_a) + dot(b_next, &pa[1]);
            integrals += ia + ib;
            covariation += dot(&da, &db) - dot(&da, &pb[1]) - dot(&db, &pa[1]);
            scale += ia.abs() + ib.abs() + dot(&da, &db).abs();

            drift2 += dot(a.drift.get(i, p), b.drift.get(i, p)) * dt * dt;
            back -= dot(a.backward.get(i + 1, p), b.backward.get(i + 1, p)) * dt;
            fwd += dot(a.forward.get(i, p), b.forward.get(i, p)) * dt;
            let (ka, kb) = (a.jump.get(i, p), b.jump.get(i, p));
            jmp += (0..w * marks)
                .map(|idx| weights[idx % marks] * ka[idx] * kb[idx])
                .sum::<f64>()
                * dt;
        }
        worst = worst.max((lhs - integrals - covariation).abs() / (1.0 + scale));
        samples.push(lhs - integrals - (drift2 + back + fwd + jmp));
        lhs_sum += lhs;
        back_sum += back;
        fwd_sum += fwd;
        jump_sum += jmp;
    }
    let (mean, se) = mean_se(&samples);
    let mf = m as f64;
    Ok(ProductRuleReport {
        pathwise_max_residual: worst,
        expectation_residual: mean,
        expectation_se: se,
        lhs_mean: lhs_sum / mf,
        backward_correction: back_sum / mf,
        forward_correction: fwd_sum / mf,
        jump_correction: jump_sum / mf,
        paths: m,
    })
}

/// Sample mean and its standard error.
pub fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Three pairs of integrands exercising every term of the product rule:
/// deterministic constants, scalar integrands that are functions of the
/// adapted running noise, and a two-dimensional pair. Every pair has
/// `⟨γ, γ̂⟩ > 0`, so the backward correction is strictly negative.
pub fn reference_integrand_sets(noise: &NoiseBundle) -> Vec<(&'static str, Integrands, Integrands)> {
    let (l, d, marks) = (noise.l(), noise.d(), noise.marks());
    let constant = (
        "constant",
        Integrands::constant(noise, vec![0.3], &[1.0], &vec![0.5; l], &vec![0.3; d], &vec![0.2; marks]),
        Integrands::constant(noise, vec![-0.2], &[-0.5], &vec![1.0; l], &vec![0.7; d], &vec![-0.4; marks]),
    );
    let adapted = |sign: f64| {
        Integrands::from_fn(noise, vec![1.0], move |kind, i, p, out| {
            let w = noise.w_cum(i, p)[0];
            let nc = noise.n_cum(i, p).iter().sum::<f64>();
            match kind {
                IntegrandKind::Drift => out[0] = sign * w.sin(),
                IntegrandKind::Backward => {
                    for (c, o) in out.iter_mut().enumerate() {
                        *o = 1.5 + noise.b_tail(i, p)[c].cos();
                    }
                }
                IntegrandKind::Forward => out.fill(1.0 + 0.5 * sign * w),
                IntegrandKind::Jump => {
                    for (j, o) in out.iter_mut().enumerate() {
                        *o = 0.3 * sign * nc + 0.1 * j as f64;
                    }
                }
            }
        })
    };
    let coupled = ("adapted", adapted(1.0), adapted(-1.0));
    let vector = |scale: f64| {
        Integrands::from_fn(noise, vec![0.5, -1.0], move |kind, i, p, out| {
            let w = noise.w_cum(i, p)[0];
            for (c, o) in out.iter_mut().enumerate() {
                *o = match kind {
                    IntegrandKind::Drift => scale * (c as f64 + 1.0) * w.cos(),
                    IntegrandKind::Backward => 1.0 + scale * scale * (c as f64 + 1.0),
                    IntegrandKind::Forward => scale - 0.2 * c as f64 + 0.1 * w,
                    IntegrandKind::Jump => 0.25 * scale * (1.0 + (c % 3) as f64),
                };
            }
        })
    };
    let wide = ("two-dimensional", vector(1.0), vector(-0.5));
    vec![constant, coupled, wide]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::TimeGrid;
    use crate::model::{Dimensions, JumpMeasure};

    fn noise(paths: usize) -> NoiseBundle {
        let grid = TimeGrid::new(20, 1.0).unwrap();
        let jumps = JumpMeasure::new(vec![0.5], vec![1.0]).unwrap();
        NoiseBundle::sample(&grid, paths, &Dimensions::scalar(), &jumps, 3).unwrap()
    }

    #[test]
    fn pure_drift_is_exact() {
        let nz = noise(4);
        let a = Integrands::constant(&nz, vec![0.0], &[1.0], &[0.0], &[0.0], &[0.0]);
        let r = check_discrete_product_rule(&a, &a, &nz).unwrap();
        assert!((r.lhs_mean - 1.0).abs() < 1e-12);
        assert!(r.expectation_residual.abs() < 1e-12);
        assert!(r.pathwise_ok(1e-12));
    }

    #[test]
    fn backward_correction_is_negative() {
        let nz = noise(2000);
        let a = Integrands::constant(&nz, vec![0.0], &[0.0], &[1.0], &[0.0], &[0.0]);
        let r = check_discrete_product_rule(&a, &a, &nz).unwrap();
        assert!((r.backward_correction + 1.0).abs() < 1e-12);
        assert!(r.expectation_ok());
        assert!(r.pathwise_ok(1e-12));
    }

    #[test]
    fn reference_sets_telescope_and_balance() {
        let nz = noise(3000);
        for (name, a, b) in reference_integrand_sets(&nz) {
            let r = check_discrete_product_rule(&a, &b, &nz).unwrap();
            assert!(r.pathwise_ok(1e-10), "{name}: {}", r.pathwise_max_residual);
            assert!(r.expectation_ok(), "{name}: {} vs SE {}", r.expectation_residual, r.expectation_se);
            assert!(r.backward_correction < 0.0, "{name}");
        }
    }
}
