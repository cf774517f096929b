use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sizes of the forward state, backward state, the two Brownian drivers and
/// the control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    /// forward state `y`
    pub n: usize,
    /// backward state `Y`
    pub m: usize,
    /// backward-integral driver `B`
    pub l: usize,
    /// forward driver `W`
    pub d: usize,
    /// control
    pub r: usize,
}

impl Dimensions {
    pub fn new(n: usize, m: usize, l: usize, d: usize, r: usize) -> Result<Self> {
        let dims = Self { n, m, l, d, r };
        dims.validate()?;
        Ok(dims)
    }

    pub fn scalar() -> Self {
        Self {
            n: 1,
            m: 1,
            l: 1,
            d: 1,
            r: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.l == 0 || self.d == 0 || self.r == 0 {
            return Err(Error::Validation(format!(
                "all dimensions must be positive, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn shape(&self, marks: usize) -> Shape {
        Shape { dims: *self, marks }
    }
}

/// Dimensions together with the number of jump marks; gives the flattened
/// size of every argument and coefficient block. Matrices are row-major and
/// per-mark quantities (`k`, `φ`) are `rows × J` with the mark index fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub dims: Dimensions,
    pub marks: usize,
}

impl Shape {
    pub fn arg_size(&self, arg: crate::model::Arg) -> usize {
        use crate::model::Arg;
        let d = &self.dims;
        match arg {
            Arg::Y => d.n,
            Arg::BigY => d.m,
            Arg::Z => d.n * d.l,
            Arg::BigZ => d.m * d.d,
            Arg::K => d.m * self.marks,
            Arg::V => d.r,
        }
    }

    pub fn coef_size(&self, coef: crate::model::Coef) -> usize {
        use crate::model::Coef;
        let d = &self.dims;
        match coef {
            Coef::Drift => d.n,
            Coef::Diffusion => d.n * d.d,
            Coef::Jump => d.n * self.marks,
            Coef::Driver => d.m,
            Coef::BackwardDiffusion => d.m * d.l,
        }
    }

    /// Total flattened size of `(y, Y, z, Z, k)`.
    pub fn state_size(&self) -> usize {
        let d = &self.dims;
        d.n + d.m + d.n * d.l + d.m * d.d + d.m * self.marks
    }
}

/// Finite-activity jump measure: `ν = Σ_j w_j δ_{ρ_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpMeasure {
    marks: Vec<f64>,
    weights: Vec<f64>,
}

impl JumpMeasure {
    pub fn new(marks: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if marks.is_empty() {
            return Err(Error::Validation("jump measure needs at least one mark".into()));
        }
        if marks.len() != weights.len() {
            return Err(Error::shape("jump weights", marks.len(), weights.len()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Validation(format!(
                "jump weights must be finite and positive, got {w}"
            )));
        }
        if marks.iter().any(|r| !r.is_finite()) {
            return Err(Error::Validation("jump marks must be finite".into()));
        }
        Ok(Self { marks, weights })
    }

    /// `count` midpoints of `[lo, hi]`, each carrying mass `total / count`.
    pub fn midpoint_grid(lo: f64, hi: f64, count: usize, total: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Validation("jump measure needs at least one mark".into()));
        }
        let h = (hi - lo) / count as f64;
        let marks = (0..count).map(|j| lo + (j as f64 + 0.5) * h).collect();
        let weights = vec![total / count as f64; count];
        Self::new(marks, weights)
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_rate(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `∫ φ(ρ) ν(dρ)` as the weighted sum over marks.
    pub fn integrate(&self, mut phi: impl FnMut(f64) -> f64) -> f64 {
        self.marks
            .iter()
            .zip(&self.weights)
            .map(|(&rho, &w)| w * phi(rho))
            .sum()
    }
}

/// Per-path terminal shift `ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TerminalShift {
    Constant(Vec<f64>),
    /// one `m`-vector per Monte Carlo path
    PerPath(Vec<Vec<f64>>),
}

/// `h(x) = c·R·x + ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalMap {
    pub c: f64,
    /// `m × n`, row-major
    pub r: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub xi: TerminalShift,
}

impl TerminalMap {
    pub fn new(c: f64, r: Vec<f64>, rows: usize, cols: usize, xi: TerminalShift) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::Validation(format!(
                "terminal constant c must be finite and nonzero, got {c}"
            )));
        }
        if r.len() != rows * cols {
            return Err(Error::shape("terminal matrix R", rows * cols, r.len()));
        }
        match &xi {
            TerminalShift::Constant(v) if v.len() != rows => {
                return Err(Error::shape("terminal shift xi", rows, v.len()))
            }
            TerminalShift::PerPath(all) => {
                if let Some(v) = all.iter().find(|v| v.len() != rows) {
                    return Err(Error::shape("terminal shift xi", rows, v.len()));
                }
            }
            _ => {}
        }
        let rank = matrix_rank(&r, rows, cols);
        if rank < rows.min(cols) {
            return Err(Error::Validation(format!(
                "terminal matrix R must have full rank {}, got rank {rank}",
                rows.min(cols)
            )));
        }
        Ok(Self {
            c,
            r,
            rows,
            cols,
            xi,
        })
    }

    pub fn xi(&self, path: usize) -> &[f64] {
        match &self.xi {
            TerminalShift::Constant(v) => v,
            TerminalShift::PerPath(all) => &all[path],
        }
    }

    /// `R·x`
    pub fn apply_r(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..self.cols).map(|j| self.r[i * self.cols + j] * x[j]).sum();
        }
    }

    /// `Rᵀ·x`
    pub fn apply_rt(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = (0..self.rows).map(|i| self.r[i * self.cols + j] * x[i]).sum();
        }
    }

    pub fn eval(&self, x: &[f64], path: usize, out: &mut [f64]) {
        self.apply_r(x, out);
        for (o, s) in out.iter_mut().zip(self.xi(path)) {
            *o = self.c * *o + s;
        }
    }
}

fn matrix_rank(data: &[f64], rows: usize, cols: usize) -> usize {
    let m = nalgebra::DMatrix::from_row_slice(rows, cols, data);
    m.rank(1e-10 * m.amax().max(1.0))
}

/// Admissible control values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ControlSet {
    /// `[lo_i, hi_i]` per coordinate; infinite bounds are allowed.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{center}`, a single admissible point.
    Point(Vec<f64>),
}

impl ControlSet {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::shape("control bounds", lo.len(), hi.len()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || a.is_nan()) {
            return Err(Error::Validation("control box needs lo <= hi".into()));
        }
        Ok(ControlSet::Box { lo, hi })
    }

    pub fn unbounded(r: usize) -> Self {
        ControlSet::Box {
            lo: vec![f64::NEG_INFINITY; r],
            hi: vec![f64::INFINITY; r],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ControlSet::Box { lo, .. } => lo.len(),
            ControlSet::Point(c) => c.len(),
        }
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        match self {
            ControlSet::Box { lo, hi } => v
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(x, (a, b))| x.clamp(*a, *b))
                .collect(),
            ControlSet::Point(c) => c.clone(),
        }
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        match self {
            ControlSet::Box { lo, hi } => v
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (a, b))| *a <= *x && *x <= *b),
            ControlSet::Point(c) => c.as_slice() == v,
        }
    }

    /// Midpoint of the box (clamped to zero on unbounded sides).
    pub fn center(&self) -> Vec<f64> {
        match self {
            ControlSet::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| match (a.is_finite(), b.is_finite()) {
                    (true, true) => 0.5 * (a + b),
                    (true, false) => a.max(0.0),
                    (false, true) => b.min(0.0),
                    (false, false) => 0.0,
                })
                .collect(),
            ControlSet::Point(c) => c.clone(),
        }
    }

    /// Uniform grid with `per_dim` points per coordinate (bounded boxes only).
    pub fn grid(&self, per_dim: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            ControlSet::Point(c) => Ok(vec![c.clone()]),
            ControlSet::Box { lo, hi } => {
                if lo.iter().chain(hi).any(|b| !b.is_finite()) {
                    return Err(Error::Validation(
                        "grid search needs a bounded control box".into(),
                    ));
                }
                let per_dim = per_dim.max(1);
                let axes: Vec<Vec<f64>> = lo
                    .iter()
                    .zip(hi)
                    .map(|(a, b)| {
                        if per_dim == 1 || a == b {
                            vec![0.5 * (a + b)]
                        } else {
                            (0..per_dim)
                                .map(|i| a + (b - a) * i as f64 / (per_dim - 1) as f64)
                                .collect()
                        }
                    })
                    .collect();
                let mut out = vec![Vec::new()];
                for axis in axes {
                    out = out
                        .into_iter()
                        .flat_map(|prefix| {
                            axis.iter().map(move |x| {
                                let mut p = prefix.clone();
                                p.push(*x);
                                p
                            })
                        })
                        .collect();
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_dimension_rejected() {
        assert!(Dimensions::new(1, 0, 1, 1, 1).is_err());
    }

    #[test]
    fn empty_jump_measure_rejected() {
        assert!(JumpMeasure::new(vec![], vec![]).is_err());
        assert!(JumpMeasure::new(vec![0.5], vec![0.0]).is_err());
    }

    #[test]
    fn midpoint_grid_integrates_linear_exactly() {
        let nu = JumpMeasure::midpoint_grid(0.0, 1.0, 8, 2.0).unwrap();
        assert!((nu.integrate(|r| r) - 1.0).abs() < 1e-15);
        assert!((nu.total_rate() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn terminal_map_rejects_zero_c_and_rank_deficiency() {
        let xi = TerminalShift::Constant(vec![0.0]);
        assert!(TerminalMap::new(0.0, vec![1.0], 1, 1, xi.clone()).is_err());
        let xi2 = TerminalShift::Constant(vec![0.0, 0.0]);
        assert!(TerminalMap::new(1.0, vec![1.0, 2.0, 2.0, 4.0], 2, 2, xi2).is_err());
    }

    #[test]
    fn control_grid_has_endpoints() {
        let u = ControlSet::boxed(vec![-1.0], vec![1.0]).unwrap();
        let g = u.grid(41).unwrap();
        assert_eq!(g.len(), 41);
        assert_eq!(g[0], vec![-1.0]);
        assert_eq!(g[40], vec![1.0]);
        assert_eq!(g[20], vec![0.0]);
    }
}
