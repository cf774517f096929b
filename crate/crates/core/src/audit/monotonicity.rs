use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{random_control, random_state};
use crate::model::{Coef, EvalCtx, ProblemSpec, StatePoint, StateVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    A1,
    #[serde(rename = "A1'")]
    A1Prime,
    Violated,
    Inconclusive,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::A1 => "A1",
            Regime::A1Prime => "A1'",
            Regime::Violated => "violated",
            Regime::Inconclusive => "inconclusive",
        }
    }
}

/// One evaluated pair: the bracket `⟨A(ζ) − A(ζ̄), ζ − ζ̄⟩` and the two
/// quadratic forms it is compared against,
/// `q1 = |RΔy|² + |RᵀΔY|²` and `q2 = ‖RΔz‖² + ‖RᵀΔZ‖² + Σ_j w_j|RᵀΔk_j|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketSample {
    pub bracket: f64,
    pub q1: f64,
    pub q2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstSample {
    pub t: f64,
    pub zeta: Vec<f64>,
    pub zeta_bar: Vec<f64>,
    pub v: Vec<f64>,
    pub bracket: f64,
    /// `bracket / (q1 + q2)`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub regime: Regime,
    pub mu1_hat: f64,
    pub mu2_hat: f64,
    /// sign of the terminal constant `c`
    pub c: f64,
    pub worst_sample: Option<WorstSample>,
    pub sample_count: usize,
    pub note: String,
}

/// `⟨A(t,ζ,v) − A(t,ζ̄,v), ζ − ζ̄⟩` with
/// `A = (−Rᵀf, Rb, −Rᵀg, Rσ, Rφ)` and the matching quadratic forms.
pub fn bracket_sample(spec: &ProblemSpec, t: f64, zeta: &StatePoint, zeta_bar: &StatePoint, v: &[f64]) -> BracketSample {
    let shape = spec.shape();
    let dims = shape.dims;
    let (n, m, l, d, marks) = (dims.n, dims.m, dims.l, dims.d, shape.marks);
    let w = spec.jumps.weights();
    let tm = &spec.terminal;
    let ctx = EvalCtx::at(t);

    let diff = |coef: Coef| -> Vec<f64> {
        let size = shape.coef_size(coef);
        let mut a = vec![0.0; size];
        let mut b = vec![0.0; size];
        spec.coeffs.eval(coef, &ctx, zeta, v, &mut a);
        spec.coeffs.eval(coef, &ctx, zeta_bar, v, &mut b);
        a.iter().zip(&b).map(|(x, y)| x - y).collect()
    };
    let sub = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    // column `c` of a row-major `rows × cols` block
    let column = |x: &[f64], rows: usize, cols: usize, c: usize| -> Vec<f64> { (0..rows).map(|r| x[r * cols + c]).collect() };
    let r_of = |x: &[f64]| {
        let mut out = vec![0.0; m];
        tm.apply_r(x, &mut out);
        out
    };
    let rt_of = |x: &[f64]| {
        let mut out = vec![0.0; n];
        tm.apply_rt(x, &mut out);
        out
    };

    let dy = sub(zeta.y, zeta_bar.y);
    let dbig_y = sub(zeta.big_y, zeta_bar.big_y);
    let dz = sub(zeta.z, zeta_bar.z);
    let dbig_z = sub(zeta.big_z, zeta_bar.big_z);
    let dk = sub(zeta.k, zeta_bar.k);

    let df = diff(Coef::Driver);
    let db = diff(Coef::Drift);
    let dg = diff(Coef::BackwardDiffusion);
    let dsigma = diff(Coef::Diffusion);
    let dphi = diff(Coef::Jump);

    let mut bracket = -dot(&dy, &rt_of(&df)) + dot(&dbig_y, &r_of(&db));
    let q1 = dot(&r_of(&dy), &r_of(&dy)) + dot(&rt_of(&dbig_y), &rt_of(&dbig_y));
    let mut q2 = 0.0;
    for c in 0..l {
        let dzc = column(&dz, n, l, c);
        let dgc = column(&dg, m, l, c);
        bracket -= dot(&dzc, &rt_of(&dgc));
        let rz = r_of(&dzc);
        q2 += dot(&rz, &rz);
    }
    for c in 0..d {
        let dzc = column(&dbig_z, m, d, c);
        let dsc = column(&dsigma, n, d, c);
        bracket += dot(&dzc, &r_of(&dsc));
        let rz = rt_of(&dzc);
        q2 += dot(&rz, &rz);
    }
    for j in 0..marks {
        let dkj = column(&dk, m, marks, j);
        let dpj = column(&dphi, n, marks, j);
        bracket += w[j] * dot(&dkj, &r_of(&dpj));
        let rk = rt_of(&dkj);
        q2 += w[j] * dot(&rk, &rk);
    }
    BracketSample { bracket, q1, q2 }
}

fn slack(s: &BracketSample) -> f64 {
    1e-12 * (1.0 + s.bracket.abs() + s.q1 + s.q2)
}

/// Largest feasible `(μ₁, μ₂)` (by `μ₁ + μ₂`) with
/// `sign·bracket ≤ −(μ₁q1 + μ₂q2)` on every sample, where `sign = 1` tests
/// (A1) and `sign = −1` tests (A1'). `None` if some sample has the wrong sign.
///
/// The rounding slack only widens the sign test; the constants are fitted
/// against brackets shrunk by the same slack, so they never overstate.
pub fn fit_monotonicity(samples: &[BracketSample], sign: f64) -> Option<(f64, f64)> {
    if samples.iter().any(|s| !(-sign * s.bracket + slack(s) >= 0.0)) {
        return None;
    }
    // constraints a·μ₁ + b·μ₂ ≤ c
    let rows: Vec<(f64, f64, f64)> = samples
        .iter()
        .map(|s| (s.q1, s.q2, (-sign * s.bracket - slack(s)).max(0.0)))
        .collect();
    let cap: f64 = 1e12;
    let mu2_max = |mu1: f64| -> f64 {
        let mut best = cap;
        for (a, b, c) in &rows {
            let room = c - a * mu1;
            if *b > 0.0 {
                best = best.min(room / b);
            } else if room < 0.0 {
                return f64::NEG_INFINITY;
            }
        }
        best
    };
    let mut mu1_max = cap;
    for (a, _, c) in &rows {
        if *a > 0.0 {
            mu1_max = mu1_max.min(c / a);
        }
    }
    let objective = |mu1: f64| mu1 + mu2_max(mu1).max(0.0);
    // golden-section search of a concave function
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, mu1_max);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = objective(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = objective(x1);
        }
    }
    let mut mu1 = 0.5 * (lo + hi);
    for cand in [0.0, mu1_max] {
        if objective(cand) > objective(mu1) {
            mu1 = cand;
        }
    }
    let mu2 = mu2_max(mu1).max(0.0);
    Some((mu1.max(0.0), mu2))
}

/// Classifies samples into a regime given the sign of `c`.
pub fn classify(samples: &[BracketSample], c: f64, dims: (usize, usize)) -> (Regime, f64, f64, String) {
    let (n, m) = dims;
    if samples.iter().all(|s| s.q1 + s.q2 <= 0.0 && s.bracket.abs() <= slack(s)) {
        return (Regime::Inconclusive, 0.0, 0.0, "every sampled pair coincides".into());
    }
    let (regime, sign) = if c > 0.0 {
        (Regime::A1, 1.0)
    } else {
        (Regime::A1Prime, -1.0)
    };
    match fit_monotonicity(samples, sign) {
        None => (
            Regime::Violated,
            0.0,
            0.0,
            format!("a sampled bracket has the wrong sign for {} (c = {c})", regime.label()),
        ),
        Some((mu1, mu2)) => {
            let positive = mu1 + mu2 > 1e-9;
            let dims_ok = !(m > n && mu1 <= 1e-9) && !(n > m && mu2 <= 1e-9);
            if positive && dims_ok {
                (regime, mu1, mu2, String::new())
            } else {
                (
                    Regime::Violated,
                    mu1,
                    mu2,
                    "no positive constants fit the samples".into(),
                )
            }
        }
    }
}

/// Samples random `(t, ζ, ζ̄, v)` with standard normal `ζ, ζ̄`, computes the
/// brackets and fits `(μ₁, μ₂)`.
pub fn audit_monotonicity(spec: &ProblemSpec, samples: usize, seed: u64) -> MonotonicityReport {
    let shape = spec.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluated = Vec::with_capacity(samples);
    let mut draws: Vec<(f64, StateVec, StateVec, Vec<f64>)> = Vec::with_capacity(samples);
    for _ in 0..samples.max(1) {
        let t = rng.random_range(0.0..=spec.horizon);
        let a = random_state(&mut rng, &shape, 1.0);
        let b = random_state(&mut rng, &shape, 1.0);
        let v = random_control(&mut rng, &spec.controls);
        evaluated.push(bracket_sample(spec, t, &a.view(), &b.view(), &v));
        draws.push((t, a, b, v));
    }
    report_from(spec, &evaluated, &draws)
}

fn report_from(
    spec: &ProblemSpec,
    samples: &[BracketSample],
    draws: &[(f64, StateVec, StateVec, Vec<f64>)],
) -> MonotonicityReport {
    let c = spec.terminal.c;
    let (regime, mu1, mu2, note) = classify(samples, c, (spec.dims.n, spec.dims.m));
    let sign = if c > 0.0 { 1.0 } else { -1.0 };
    let worst = samples
        .iter()
        .zip(draws)
        .filter(|(s, _)| s.q1 + s.q2 > 0.0)
        .max_by(|(a, _), (b, _)| {
            let ra = sign * a.bracket / (a.q1 + a.q2);
            let rb = sign * b.bracket / (b.q1 + b.q2);
            ra.total_cmp(&rb)
        })
        .map(|(s, (t, a, b, v))| WorstSample {
            t: *t,
            zeta: a.flatten(),
            zeta_bar: b.flatten(),
            v: v.clone(),
            bracket: s.bracket,
            ratio: s.bracket / (s.q1 + s.q2),
        });
    MonotonicityReport {
        regime,
        mu1_hat: mu1,
        mu2_hat: mu2,
        c,
        worst_sample: worst,
        sample_count: samples.len(),
        note,
    }
}

/// Same as [`audit_monotonicity`] but with `ζ̄ = ζ` on every draw.
pub fn audit_monotonicity_identical_pairs(spec: &ProblemSpec, samples: usize, seed: u64) -> MonotonicityReport {
    let shape = spec.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluated = Vec::new();
    let mut draws = Vec::new();
    for _ in 0..samples.max(1) {
        let t = rng.random_range(0.0..=spec.horizon);
        let a = random_state(&mut rng, &shape, 1.0);
        let v = random_control(&mut rng, &spec.controls);
        evaluated.push(bracket_sample(spec, t, &a.view(), &a.view(), &v));
        draws.push((t, a.clone(), a, v));
    }
    report_from(spec, &evaluated, &draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog_lookup;

    #[test]
    fn dissipative_instance_is_a1_with_unit_constants() {
        let spec = catalog_lookup("monotone-dissipative").unwrap();
        let r = audit_monotonicity(&spec, 2000, 1);
        assert_eq!(r.regime, Regime::A1);
        assert!((0.95..=1.0 + 1e-9).contains(&r.mu1_hat), "{}", r.mu1_hat);
        assert!((0.95..=1.0 + 1e-9).contains(&r.mu2_hat), "{}", r.mu2_hat);
    }

    #[test]
    fn anti_monotone_instance_is_a1_prime() {
        let spec = catalog_lookup("anti-monotone").unwrap();
        let r = audit_monotonicity(&spec, 2000, 2);
        assert_eq!(r.regime, Regime::A1Prime);
    }

    #[test]
    fn identical_pairs_are_inconclusive() {
        let spec = catalog_lookup("monotone-dissipative").unwrap();
        let r = audit_monotonicity_identical_pairs(&spec, 50, 3);
        assert_eq!(r.regime, Regime::Inconclusive);
    }

    #[test]
    fn fit_on_a_single_direction() {
        let s = [
            BracketSample { bracket: -2.0, q1: 1.0, q2: 0.0 },
            BracketSample { bracket: -3.0, q1: 0.0, q2: 1.0 },
        ];
        let (mu1, mu2) = fit_monotonicity(&s, 1.0).unwrap();
        assert!((mu1 - 2.0).abs() < 1e-6 && (mu2 - 3.0).abs() < 1e-6, "{mu1} {mu2}");
        assert!(fit_monotonicity(&s, -1.0).is_none());
    }
}
