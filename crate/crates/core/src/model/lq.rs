use serde::{Deserialize, Serialize};

use super::coefficients::{Arg, Coef, Coefficients, EvalCtx, StatePoint};
use super::dims::Shape;
use crate::error::{Error, Result};

/// Matrix whose entries are affine in time and (for jump coefficients) in the
/// mark: `A(t, ρ) = base + t·time + ρ·mark`. Empty parts are zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffineTerm {
    pub base: Vec<f64>,
    pub time: Vec<f64>,
    pub mark: Vec<f64>,
}

impl AffineTerm {
    pub fn constant(base: Vec<f64>) -> Self {
        Self {
            base,
            ..Self::default()
        }
    }

    pub fn with_time(mut self, time: Vec<f64>) -> Self {
        self.time = time;
        self
    }

    pub fn with_mark(mut self, mark: Vec<f64>) -> Self {
        self.mark = mark;
        self
    }

    pub fn is_zero(&self) -> bool {
        [&self.base, &self.time, &self.mark]
            .iter()
            .all(|p| p.iter().all(|x| *x == 0.0))
    }

    fn check(&self, what: &str, len: usize) -> Result<()> {
        for part in [&self.base, &self.time, &self.mark] {
            if !part.is_empty() && part.len() != len {
                return Err(Error::shape(what, len, part.len()));
            }
            if part.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation(format!("{what} has non-finite entries")));
            }
        }
        Ok(())
    }

    #[inline]
    fn entry(&self, idx: usize, t: f64, rho: f64) -> f64 {
        let mut a = 0.0;
        if !self.base.is_empty() {
            a += self.base[idx];
        }
        if !self.time.is_empty() {
            a += t * self.time[idx];
        }
        if !self.mark.is_empty() {
            a += rho * self.mark[idx];
        }
        a
    }
}

/// One affine coefficient: `Σ_blocks A_block(t, ρ)·x_block + const(t, ρ)`.
///
/// Block widths: `y` n, `big_y` m, `z` n·l, `big_z` m·d, `kint` m (acts on
/// `∫k ν = Σ_j w_j k(ρ_j)`), `kpoint` m (acts on `k(ρ)` at the same mark;
/// jump coefficient only), `v` r, `constant` 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffineCoef {
    pub y: AffineTerm,
    #[serde(rename = "Y")]
    pub big_y: AffineTerm,
    pub z: AffineTerm,
    #[serde(rename = "Z")]
    pub big_z: AffineTerm,
    pub kint: AffineTerm,
    pub kpoint: AffineTerm,
    pub v: AffineTerm,
    pub constant: AffineTerm,
}

/// Coefficient family that is affine in `(y, Y, z, Z, ∫kν, v)`, with exact
/// Jacobians.
#[derive(Debug, Clone, PartialEq)]
pub struct LqCoefficients {
    shape: Shape,
    marks: Vec<f64>,
    weights: Vec<f64>,
    pub b: AffineCoef,
    pub sigma: AffineCoef,
    /// per mark, `n` rows
    pub phi: AffineCoef,
    pub f: AffineCoef,
    pub g: AffineCoef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    Y,
    BigY,
    Z,
    BigZ,
    Kint,
    Kpoint,
    V,
    Constant,
}

impl LqCoefficients {
    pub fn zero(shape: Shape, marks: Vec<f64>, weights: Vec<f64>) -> Self {
        Self {
            shape,
            marks,
            weights,
            b: AffineCoef::default(),
            sigma: AffineCoef::default(),
            phi: AffineCoef::default(),
            f: AffineCoef::default(),
            g: AffineCoef::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.marks.len() != self.shape.marks || self.weights.len() != self.shape.marks {
            return Err(Error::shape("lq jump marks", self.shape.marks, self.marks.len()));
        }
        for coef in Coef::ALL {
            let rows = self.rows(coef);
            let c = self.coef(coef);
            let blocks = [
                (Block::Y, &c.y),
                (Block::BigY, &c.big_y),
                (Block::Z, &c.z),
                (Block::BigZ, &c.big_z),
                (Block::Kint, &c.kint),
                (Block::Kpoint, &c.kpoint),
                (Block::V, &c.v),
                (Block::Constant, &c.constant),
            ];
            for (block, term) in blocks {
                let what = format!("lq {}.{block:?}", coef.label());
                if coef != Coef::Jump && block == Block::Kpoint && !term.is_zero() {
                    return Err(Error::Validation(format!(
                        "{what}: pointwise k dependence is only allowed in the jump coefficient"
                    )));
                }
                term.check(&what, rows * self.width(block))?;
            }
        }
        Ok(())
    }

    pub fn coef(&self, coef: Coef) -> &AffineCoef {
        match coef {
            Coef::Drift => &self.b,
            Coef::Diffusion => &self.sigma,
            Coef::Jump => &self.phi,
            Coef::Driver => &self.f,
            Coef::BackwardDiffusion => &self.g,
        }
    }

    pub fn coef_mut(&mut self, coef: Coef) -> &mut AffineCoef {
        match coef {
            Coef::Drift => &mut self.b,
            Coef::Diffusion => &mut self.sigma,
            Coef::Jump => &mut self.phi,
            Coef::Driver => &mut self.f,
            Coef::BackwardDiffusion => &mut self.g,
        }
    }

    /// Rows of one affine map: the full output, or one mark's `n` rows for φ.
    fn rows(&self, coef: Coef) -> usize {
        match coef {
            Coef::Jump => self.shape.dims.n,
            other => self.shape.coef_size(other),
        }
    }

    fn width(&self, block: Block) -> usize {
        let d = &self.shape.dims;
        match block {
            Block::Y => d.n,
            Block::BigY => d.m,
            Block::Z => d.n * d.l,
            Block::BigZ => d.m * d.d,
            Block::Kint | Block::Kpoint => d.m,
            Block::V => d.r,
            Block::Constant => 1,
        }
    }

    fn kint(&self, k: &[f64]) -> Vec<f64> {
        let marks = self.shape.marks;
        (0..self.shape.dims.m)
            .map(|a| (0..marks).map(|j| self.weights[j] * k[a * marks + j]).sum())
            .collect()
    }

    fn apply(
        &self,
        term: &AffineTerm,
        rows: usize,
        x: &[f64],
        t: f64,
        rho: f64,
        out: &mut [f64],
    ) {
        if term.base.is_empty() && term.time.is_empty() && term.mark.is_empty() {
            return;
        }
        let cols = x.len();
        for (i, o) in out.iter_mut().enumerate().take(rows) {
            let mut s = 0.0;
            for (c, xc) in x.iter().enumerate() {
                s += term.entry(i * cols + c, t, rho) * xc;
            }
            *o += s;
        }
    }

    /// One affine map evaluated at a single mark `rho` (ignored off φ).
    fn eval_rows(&self, c: &AffineCoef, rows: usize, t: f64, rho: f64, pt: &StatePoint, kint: &[f64], kpoint: Option<&[f64]>, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        self.apply(&c.y, rows, pt.y, t, rho, out);
        self.apply(&c.big_y, rows, pt.big_y, t, rho, out);
        self.apply(&c.z, rows, pt.z, t, rho, out);
        self.apply(&c.big_z, rows, pt.big_z, t, rho, out);
        self.apply(&c.kint, rows, kint, t, rho, out);
        if let Some(kp) = kpoint {
            self.apply(&c.kpoint, rows, kp, t, rho, out);
        }
        self.apply(&c.v, rows, v, t, rho, out);
        self.apply(&c.constant, rows, &[1.0], t, rho, out);
    }
}

impl Coefficients for LqCoefficients {
    fn shape(&self) -> Shape {
        self.shape
    }

    fn eval(&self, coef: Coef, ctx: &EvalCtx, pt: &StatePoint, v: &[f64], out: &mut [f64]) {
        let kint = self.kint(pt.k);
        let c = self.coef(coef);
        if coef != Coef::Jump {
            let rows = self.rows(coef);
            self.eval_rows(c, rows, ctx.t, 0.0, pt, &kint, None, v, out);
            return;
        }
        let n = self.shape.dims.n;
        let m = self.shape.dims.m;
        let marks = self.shape.marks;
        let mut row = vec![0.0; n];
        let mut kp = vec![0.0; m];
        for j in 0..marks {
            for a in 0..m {
                kp[a] = pt.k[a * marks + j];
            }
            self.eval_rows(c, n, ctx.t, self.marks[j], pt, &kint, Some(&kp), v, &mut row);
            for i in 0..n {
                out[i * marks + j] = row[i];
            }
        }
    }

    fn jacobian(
        &self,
        coef: Coef,
        arg: Arg,
        ctx: &EvalCtx,
        _pt: &StatePoint,
        _v: &[f64],
        out: &mut [f64],
    ) {
        let t = ctx.t;
        let marks = self.shape.marks;
        let m = self.shape.dims.m;
        let cols = self.shape.arg_size(arg);
        out.iter_mut().for_each(|o| *o = 0.0);
        let c = self.coef(coef);
        let term = match arg {
            Arg::Y => &c.y,
            Arg::BigY => &c.big_y,
            Arg::Z => &c.z,
            Arg::BigZ => &c.big_z,
            Arg::K => &c.kint,
            Arg::V => &c.v,
        };
        // (output row, mark of that row) pairs
        let rows: Vec<(usize, f64, Option<usize>)> = if coef == Coef::Jump {
            let n = self.shape.dims.n;
            (0..n)
                .flat_map(|i| (0..marks).map(move |j| (i, j)))
                .map(|(i, j)| (i, self.marks[j], Some(j)))
                .collect()
        } else {
            (0..self.rows(coef)).map(|i| (i, 0.0, None)).collect()
        };
        for (row_idx, &(i, rho, mark)) in rows.iter().enumerate() {
            let out_row = &mut out[row_idx * cols..(row_idx + 1) * cols];
            if arg == Arg::K {
                for a in 0..m {
                    let a_int = term.entry(i * m + a, t, rho);
                    for j in 0..marks {
                        out_row[a * marks + j] += a_int * self.weights[j];
                    }
                    if let Some(j) = mark {
                        out_row[a * marks + j] += c.kpoint.entry(i * m + a, t, rho);
                    }
                }
            } else if !(term.base.is_empty() && term.time.is_empty() && term.mark.is_empty()) {
                for (col, o) in out_row.iter_mut().enumerate() {
                    *o = term.entry(i * cols + col, t, rho);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fd_jacobian, Dimensions, StateVec};

    fn scalar_shape(marks: usize) -> Shape {
        Dimensions::scalar().shape(marks)
    }

    #[test]
    fn zero_pack_is_identically_zero() {
        let lq = LqCoefficients::zero(scalar_shape(2), vec![0.2, 0.7], vec![1.0, 1.0]);
        lq.validate().unwrap();
        let mut st = StateVec::zeros(&lq.shape());
        st.y[0] = 3.0;
        st.k = vec![1.0, -2.0];
        for coef in Coef::ALL {
            let mut out = vec![1.0; lq.shape().coef_size(coef)];
            lq.eval(coef, &EvalCtx::at(0.3), &st.view(), &[0.4], &mut out);
            assert!(out.iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn sigma_on_kint_sums_the_weights() {
        let mut lq = LqCoefficients::zero(scalar_shape(4), vec![0.1, 0.2, 0.3, 0.4], vec![0.25; 4]);
        lq.sigma.kint = AffineTerm::constant(vec![1.0]);
        let mut st = StateVec::zeros(&lq.shape());
        st.k = vec![1.0; 4];
        let mut out = [0.0];
        lq.eval(Coef::Diffusion, &EvalCtx::at(0.0), &st.view(), &[0.0], &mut out);
        assert!((out[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        let mut lq = LqCoefficients::zero(scalar_shape(2), vec![0.25, 0.75], vec![0.5, 1.5]);
        lq.phi.kpoint = AffineTerm::constant(vec![-1.0]).with_time(vec![0.5]);
        lq.phi.kint = AffineTerm::constant(vec![2.0]);
        lq.phi.v = AffineTerm::default().with_mark(vec![-1.0]);
        lq.g.z = AffineTerm::constant(vec![1.5]).with_time(vec![-0.2]);
        lq.g.kint = AffineTerm::constant(vec![1.5]);
        lq.validate().unwrap();
        let mut st = StateVec::zeros(&lq.shape());
        st.y[0] = 0.3;
        st.k = vec![0.7, -1.1];
        let ctx = EvalCtx::at(0.4);
        for coef in Coef::ALL {
            for arg in Arg::ALL {
                let len = lq.shape().coef_size(coef) * lq.shape().arg_size(arg);
                let mut exact = vec![0.0; len];
                let mut approx = vec![0.0; len];
                lq.jacobian(coef, arg, &ctx, &st.view(), &[0.2], &mut exact);
                fd_jacobian(&lq, coef, arg, &ctx, &st.view(), &[0.2], &mut approx);
                for (a, b) in exact.iter().zip(&approx) {
                    assert!((a - b).abs() < 1e-8, "{coef:?}/{arg:?}: {a} vs {b}");
                }
            }
        }
    }
}
