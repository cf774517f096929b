use serde::{Deserialize, Serialize};

use super::dims::Shape;

/// Argument blocks of the coefficients: the solution quintuple and the
/// control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arg {
    Y,
    BigY,
    Z,
    BigZ,
    K,
    V,
}

impl Arg {
    pub const STATE: [Arg; 5] = [Arg::Y, Arg::BigY, Arg::Z, Arg::BigZ, Arg::K];
    pub const ALL: [Arg; 6] = [Arg::Y, Arg::BigY, Arg::Z, Arg::BigZ, Arg::K, Arg::V];

    pub fn label(self) -> &'static str {
        match self {
            Arg::Y => "y",
            Arg::BigY => "Y",
            Arg::Z => "z",
            Arg::BigZ => "Z",
            Arg::K => "k",
            Arg::V => "v",
        }
    }
}

/// The five coefficient maps of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coef {
    /// `b`, forward drift (`n`)
    Drift,
    /// `σ`, forward `dW` coefficient (`n × d`)
    Diffusion,
    /// `φ(·, ρ_j)` for every mark (`n × J`)
    Jump,
    /// `f`, backward driver (`m`)
    Driver,
    /// `g`, backward `dB̄` coefficient (`m × l`)
    BackwardDiffusion,
}

impl Coef {
    pub const ALL: [Coef; 5] = [
        Coef::Drift,
        Coef::Diffusion,
        Coef::Jump,
        Coef::Driver,
        Coef::BackwardDiffusion,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Coef::Drift => "b",
            Coef::Diffusion => "sigma",
            Coef::Jump => "phi",
            Coef::Driver => "f",
            Coef::BackwardDiffusion => "g",
        }
    }
}

/// Where a coefficient is evaluated. `step` and `path` let coefficients depend
/// on a frozen trajectory, which is how path-dependent (random) coefficients
/// enter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalCtx {
    pub t: f64,
    pub step: usize,
    pub path: usize,
}

impl EvalCtx {
    pub fn at(t: f64) -> Self {
        Self { t, step: 0, path: 0 }
    }
}

/// Borrowed view of `ζ = (y, Y, z, Z, k)`.
#[derive(Debug, Clone, Copy)]
pub struct StatePoint<'a> {
    pub y: &'a [f64],
    pub big_y: &'a [f64],
    pub z: &'a [f64],
    pub big_z: &'a [f64],
    pub k: &'a [f64],
}

impl<'a> StatePoint<'a> {
    pub fn block(&self, arg: Arg) -> &'a [f64] {
        match arg {
            Arg::Y => self.y,
            Arg::BigY => self.big_y,
            Arg::Z => self.z,
            Arg::BigZ => self.big_z,
            Arg::K => self.k,
            Arg::V => panic!("the control is not part of the state point"),
        }
    }

    pub fn to_owned(&self) -> StateVec {
        StateVec {
            y: self.y.to_vec(),
            big_y: self.big_y.to_vec(),
            z: self.z.to_vec(),
            big_z: self.big_z.to_vec(),
            k: self.k.to_vec(),
        }
    }
}

/// Owned `ζ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateVec {
    pub y: Vec<f64>,
    pub big_y: Vec<f64>,
    pub z: Vec<f64>,
    pub big_z: Vec<f64>,
    pub k: Vec<f64>,
}

impl StateVec {
    pub fn zeros(shape: &Shape) -> Self {
        use Arg::*;
        Self {
            y: vec![0.0; shape.arg_size(Y)],
            big_y: vec![0.0; shape.arg_size(BigY)],
            z: vec![0.0; shape.arg_size(Z)],
            big_z: vec![0.0; shape.arg_size(BigZ)],
            k: vec![0.0; shape.arg_size(K)],
        }
    }

    pub fn view(&self) -> StatePoint<'_> {
        StatePoint {
            y: &self.y,
            big_y: &self.big_y,
            z: &self.z,
            big_z: &self.big_z,
            k: &self.k,
        }
    }

    pub fn block_mut(&mut self, arg: Arg) -> &mut Vec<f64> {
        match arg {
            Arg::Y => &mut self.y,
            Arg::BigY => &mut self.big_y,
            Arg::Z => &mut self.z,
            Arg::BigZ => &mut self.big_z,
            Arg::K => &mut self.k,
            Arg::V => panic!("the control is not part of the state point"),
        }
    }

    /// Concatenation `(y, Y, z, Z, k)`.
    pub fn flatten(&self) -> Vec<f64> {
        [&self.y, &self.big_y, &self.z, &self.big_z, &self.k]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }

    pub fn from_flat(shape: &Shape, flat: &[f64]) -> Self {
        let mut out = Self::zeros(shape);
        let mut offset = 0;
        for arg in Arg::STATE {
            let block = out.block_mut(arg);
            let len = block.len();
            block.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        out
    }
}

/// Coefficient evaluators `b, σ, φ, f, g` and their Jacobians.
///
/// Outputs are flattened row-major (see [`Shape`]). Implementations must be
/// pure and reentrant: the solver calls them concurrently from many paths.
pub trait Coefficients: Send + Sync {
    fn shape(&self) -> Shape;

    fn eval(&self, coef: Coef, ctx: &EvalCtx, pt: &StatePoint, v: &[f64], out: &mut [f64]);

    /// Jacobian of `coef` with respect to `arg`, written row-major as
    /// `coef_size × arg_size`. The default is a central finite difference.
    fn jacobian(
        &self,
        coef: Coef,
        arg: Arg,
        ctx: &EvalCtx,
        pt: &StatePoint,
        v: &[f64],
        out: &mut [f64],
    ) {
        fd_jacobian(self, coef, arg, ctx, pt, v, out);
    }
}

/// Step used by central differences: `ε^{1/3}·max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

pub fn fd_jacobian<C: Coefficients + ?Sized>(
    model: &C,
    coef: Coef,
    arg: Arg,
    ctx: &EvalCtx,
    pt: &StatePoint,
    v: &[f64],
    out: &mut [f64],
) {
    let shape = model.shape();
    let rows = shape.coef_size(coef);
    let cols = shape.arg_size(arg);
    debug_assert_eq!(out.len(), rows * cols);
    let mut plus = vec![0.0; rows];
    let mut minus = vec![0.0; rows];
    let mut point = pt.to_owned();
    let mut control = v.to_vec();
    for col in 0..cols {
        let x0 = if arg == Arg::V {
            control[col]
        } else {
            point.block_mut(arg)[col]
        };
        let h = fd_step(x0);
        let set = |x: f64, point: &mut StateVec, control: &mut Vec<f64>| {
            if arg == Arg::V {
                control[col] = x;
            } else {
                point.block_mut(arg)[col] = x;
            }
        };
        set(x0 + h, &mut point, &mut control);
        model.eval(coef, ctx, &point.view(), &control, &mut plus);
        set(x0 - h, &mut point, &mut control);
        model.eval(coef, ctx, &point.view(), &control, &mut minus);
        set(x0, &mut point, &mut control);
        for row in 0..rows {
            out[row * cols + col] = (plus[row] - minus[row]) / (2.0 * h);
        }
    }
}
