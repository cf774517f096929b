use serde::{Deserialize, Serialize};

use super::coefficients::{Arg, EvalCtx, StatePoint};
use super::dims::Shape;

/// Running cost `ℓ`, terminal cost `β(y_T)` and initial cost `γ(Y_0)`, with
/// gradients. Gradients with respect to `k` are taken on the flattened
/// `m × J` block, so they already carry the jump weights.
pub trait CostModel: Send + Sync {
    fn running(&self, ctx: &EvalCtx, pt: &StatePoint, v: &[f64]) -> f64;

    fn running_grad(&self, arg: Arg, ctx: &EvalCtx, pt: &StatePoint, v: &[f64], out: &mut [f64]);

    fn terminal(&self, y: &[f64]) -> f64;

    fn terminal_grad(&self, y: &[f64], out: &mut [f64]);

    fn initial(&self, big_y: &[f64]) -> f64;

    fn initial_grad(&self, big_y: &[f64], out: &mut [f64]);
}

/// `½ xᵀ W x + ⟨a, x⟩ + c`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Quadratic {
    /// `dim × dim`, row-major; empty means zero
    pub weight: Vec<f64>,
    /// empty means zero
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl Quadratic {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `½ s·|x|²`
    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut weight = vec![0.0; dim * dim];
        for i in 0..dim {
            weight[i * dim + i] = s;
        }
        Self {
            weight,
            linear: Vec::new(),
            constant: 0.0,
        }
    }

    pub fn linear(coeffs: Vec<f64>) -> Self {
        Self {
            weight: Vec::new(),
            linear: coeffs,
            constant: 0.0,
        }
    }

    pub fn with_linear(mut self, linear: Vec<f64>) -> Self {
        self.linear = linear;
        self
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant = c;
        self
    }

    pub(crate) fn check(&self, dim: usize) -> crate::Result<()> {
        if !self.weight.is_empty() && self.weight.len() != dim * dim {
            return Err(crate::Error::shape("quadratic weight", dim * dim, self.weight.len()));
        }
        if !self.linear.is_empty() && self.linear.len() != dim {
            return Err(crate::Error::shape("quadratic linear term", dim, self.linear.len()));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let dim = x.len();
        let mut total = self.constant;
        if !self.weight.is_empty() {
            let mut q = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    q += x[i] * self.weight[i * dim + j] * x[j];
                }
            }
            total += 0.5 * q;
        }
        if !self.linear.is_empty() {
            total += x.iter().zip(&self.linear).map(|(a, b)| a * b).sum::<f64>();
        }
        total
    }

    /// Gradient `½(W + Wᵀ)x + a`, scaled by `scale`.
    pub fn add_grad(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        let dim = x.len();
        if !self.weight.is_empty() {
            for i in 0..dim {
                let mut g = 0.0;
                for j in 0..dim {
                    g += 0.5 * (self.weight[i * dim + j] + self.weight[j * dim + i]) * x[j];
                }
                out[i] += scale * g;
            }
        }
        if !self.linear.is_empty() {
            for (o, a) in out.iter_mut().zip(&self.linear) {
                *o += scale * a;
            }
        }
    }
}

/// Separable quadratic cost, the cost family used by the LQ builder.
///
/// `ℓ = q_y(y) + q_Y(Y) + q_z(z) + q_Z(Z) + Σ_j w_j q_k(k_j) + q_v(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    pub shape: Shape,
    pub weights: Vec<f64>,
    pub y: Quadratic,
    pub big_y: Quadratic,
    pub z: Quadratic,
    pub big_z: Quadratic,
    /// applied to each mark's `m`-vector `k(ρ_j)`
    pub k: Quadratic,
    pub v: Quadratic,
    pub terminal: Quadratic,
    pub initial: Quadratic,
}

impl QuadraticCost {
    pub fn zero(shape: Shape, weights: Vec<f64>) -> Self {
        Self {
            shape,
            weights,
            y: Quadratic::zero(),
            big_y: Quadratic::zero(),
            z: Quadratic::zero(),
            big_z: Quadratic::zero(),
            k: Quadratic::zero(),
            v: Quadratic::zero(),
            terminal: Quadratic::zero(),
            initial: Quadratic::zero(),
        }
    }

    /// `ℓ = ½ s(|y|²+|Y|²+‖z‖²+‖Z‖²+|‖k‖|²+|v|²)`, `β = ½ s_T|y|²`, `γ = ½ s_0|Y|²`.
    pub fn isotropic(shape: Shape, weights: Vec<f64>, s: f64, s_terminal: f64, s_initial: f64) -> Self {
        use Arg::*;
        let d = shape.dims;
        Self {
            y: Quadratic::scaled_identity(shape.arg_size(Y), s),
            big_y: Quadratic::scaled_identity(shape.arg_size(BigY), s),
            z: Quadratic::scaled_identity(shape.arg_size(Z), s),
            big_z: Quadratic::scaled_identity(shape.arg_size(BigZ), s),
            k: Quadratic::scaled_identity(d.m, s),
            v: Quadratic::scaled_identity(shape.arg_size(V), s),
            terminal: Quadratic::scaled_identity(d.n, s_terminal),
            initial: Quadratic::scaled_identity(d.m, s_initial),
            shape,
            weights,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        use Arg::*;
        let s = &self.shape;
        self.y.check(s.arg_size(Y))?;
        self.big_y.check(s.arg_size(BigY))?;
        self.z.check(s.arg_size(Z))?;
        self.big_z.check(s.arg_size(BigZ))?;
        self.k.check(s.dims.m)?;
        self.v.check(s.arg_size(V))?;
        self.terminal.check(s.dims.n)?;
        self.initial.check(s.dims.m)?;
        if self.weights.len() != s.marks {
            return Err(crate::Error::shape("cost jump weights", s.marks, self.weights.len()));
        }
        Ok(())
    }

    fn mark_vector(&self, k: &[f64], j: usize) -> Vec<f64> {
        let marks = self.shape.marks;
        (0..self.shape.dims.m).map(|a| k[a * marks + j]).collect()
    }
}

impl CostModel for QuadraticCost {
    fn running(&self, _ctx: &EvalCtx, pt: &StatePoint, v: &[f64]) -> f64 {
        let mut total = self.y.value(pt.y)
            + self.big_y.value(pt.big_y)
            + self.z.value(pt.z)
            + self.big_z.value(pt.big_z)
            + self.v.value(v);
        for (j, w) in self.weights.iter().enumerate() {
            total += w * self.k.value(&self.mark_vector(pt.k, j));
        }
        total
    }

    fn running_grad(&self, arg: Arg, _ctx: &EvalCtx, pt: &StatePoint, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        match arg {
            Arg::Y => self.y.add_grad(pt.y, 1.0, out),
            Arg::BigY => self.big_y.add_grad(pt.big_y, 1.0, out),
            Arg::Z => self.z.add_grad(pt.z, 1.0, out),
            Arg::BigZ => self.big_z.add_grad(pt.big_z, 1.0, out),
            Arg::V => self.v.add_grad(v, 1.0, out),
            Arg::K => {
                let marks = self.shape.marks;
                let m = self.shape.dims.m;
                let mut g = vec![0.0; m];
                for (j, w) in self.weights.iter().enumerate() {
                    g.iter_mut().for_each(|x| *x = 0.0);
                    self.k.add_grad(&self.mark_vector(pt.k, j), *w, &mut g);
                    for a in 0..m {
                        out[a * marks + j] = g[a];
                    }
                }
            }
        }
    }

    fn terminal(&self, y: &[f64]) -> f64 {
        self.terminal.value(y)
    }

    fn terminal_grad(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        self.terminal.add_grad(y, 1.0, out);
    }

    fn initial(&self, big_y: &[f64]) -> f64 {
        self.initial.value(big_y)
    }

    fn initial_grad(&self, big_y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        self.initial.add_grad(big_y, 1.0, out);
    }
}

/// No cost at all; the cost carried by derived (adjoint) systems.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroCost;

impl CostModel for ZeroCost {
    fn running(&self, _: &EvalCtx, _: &StatePoint, _: &[f64]) -> f64 {
        0.0
    }
    fn running_grad(&self, _: Arg, _: &EvalCtx, _: &StatePoint, _: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
    fn terminal(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn terminal_grad(&self, _: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
    fn initial(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn initial_grad(&self, _: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
}
