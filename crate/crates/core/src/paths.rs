//! Discrete trajectories stored on a `nodes × paths` grid.

use serde::{Deserialize, Serialize};

use crate::model::{Arg, Shape, StatePoint};

/// A vector-valued process on the time grid, one `width`-vector per
/// `(node, path)`, laid out node-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathField {
    nodes: usize,
    paths: usize,
    width: usize,
    data: Vec<f64>,
}

impl PathField {
    pub fn zeros(nodes: usize, paths: usize, width: usize) -> Self {
        Self {
            nodes,
            paths,
            width,
            data: vec![0.0; nodes * paths * width],
        }
    }

    /// Every `(node, path)` holds `value`.
    pub fn filled(nodes: usize, paths: usize, value: &[f64]) -> Self {
        let width = value.len();
        let mut data = Vec::with_capacity(nodes * paths * width);
        for _ in 0..nodes * paths {
            data.extend_from_slice(value);
        }
        Self {
            nodes,
            paths,
            width,
            data,
        }
    }

    pub fn from_fn(nodes: usize, paths: usize, width: usize, mut f: impl FnMut(usize, usize, &mut [f64])) -> Self {
        let mut out = Self::zeros(nodes, paths, width);
        for i in 0..nodes {
            for p in 0..paths {
                f(i, p, out.get_mut(i, p));
            }
        }
        out
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, node: usize, path: usize) -> &[f64] {
        let start = (node * self.paths + path) * self.width;
        &self.data[start..start + self.width]
    }

    #[inline]
    pub fn get_mut(&mut self, node: usize, path: usize) -> &mut [f64] {
        let start = (node * self.paths + path) * self.width;
        &mut self.data[start..start + self.width]
    }

    /// All paths at one node, `paths × width`.
    pub fn node(&self, node: usize) -> &[f64] {
        let stride = self.paths * self.width;
        &self.data[node * stride..(node + 1) * stride]
    }

    pub fn node_mut(&mut self, node: usize) -> &mut [f64] {
        let stride = self.paths * self.width;
        &mut self.data[node * stride..(node + 1) * stride]
    }

    pub fn same_layout(&self, other: &PathField) -> bool {
        self.nodes == other.nodes && self.paths == other.paths && self.width == other.width
    }

    /// Cross-path mean at a node.
    pub fn mean_at(&self, node: usize) -> Vec<f64> {
        let mut mean = vec![0.0; self.width];
        for p in 0..self.paths {
            for (m, x) in mean.iter_mut().zip(self.get(node, p)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= self.paths as f64);
        mean
    }

    /// Cross-path sample standard deviation at a node, per component.
    pub fn std_at(&self, node: usize) -> Vec<f64> {
        let mean = self.mean_at(node);
        if self.paths < 2 {
            return vec![0.0; self.width];
        }
        let mut var = vec![0.0; self.width];
        for p in 0..self.paths {
            for ((v, x), m) in var.iter_mut().zip(self.get(node, p)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        var.iter()
            .map(|v| (v / (self.paths - 1) as f64).sqrt())
            .collect()
    }

    /// `max_{node, path, comp} |field − target(node)|`.
    pub fn sup_distance(&self, mut target: impl FnMut(usize) -> Vec<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nodes {
            let t = target(i);
            for p in 0..self.paths {
                for (x, y) in self.get(i, p).iter().zip(&t) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        worst
    }

    /// `θ·other + (1−θ)·self`, in place.
    pub fn relax_towards(&mut self, other: &PathField, theta: f64) {
        debug_assert!(self.same_layout(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = (1.0 - theta) * *a + theta * b;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// First non-finite entry as `(node, path)`.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        let idx = self.data.iter().position(|x| !x.is_finite())?;
        let cell = idx / self.width.max(1);
        Some((cell / self.paths, cell % self.paths))
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> PathField {
        PathField {
            data: self.data.iter().map(|x| f(*x)).collect(),
            ..*self
        }
    }

    pub fn sub(&self, other: &PathField) -> PathField {
        debug_assert!(self.same_layout(other));
        PathField {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
            ..*self
        }
    }
}

/// Discrete solution `(y, Y, z, Z, k)` of the coupled system. `k` is stored
/// `m × J` per node, mark index fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePaths {
    pub y: PathField,
    pub big_y: PathField,
    pub z: PathField,
    pub big_z: PathField,
    pub k: PathField,
}

impl StatePaths {
    pub fn zeros(shape: &Shape, nodes: usize, paths: usize) -> Self {
        Self {
            y: PathField::zeros(nodes, paths, shape.arg_size(Arg::Y)),
            big_y: PathField::zeros(nodes, paths, shape.arg_size(Arg::BigY)),
            z: PathField::zeros(nodes, paths, shape.arg_size(Arg::Z)),
            big_z: PathField::zeros(nodes, paths, shape.arg_size(Arg::BigZ)),
            k: PathField::zeros(nodes, paths, shape.arg_size(Arg::K)),
        }
    }

    pub fn nodes(&self) -> usize {
        self.y.nodes()
    }

    pub fn paths(&self) -> usize {
        self.y.paths()
    }

    pub fn point(&self, node: usize, path: usize) -> StatePoint<'_> {
        StatePoint {
            y: self.y.get(node, path),
            big_y: self.big_y.get(node, path),
            z: self.z.get(node, path),
            big_z: self.big_z.get(node, path),
            k: self.k.get(node, path),
        }
    }

    pub fn fields(&self) -> [&PathField; 5] {
        [&self.y, &self.big_y, &self.z, &self.big_z, &self.k]
    }

    pub fn fields_mut(&mut self) -> [&mut PathField; 5] {
        [
            &mut self.y,
            &mut self.big_y,
            &mut self.z,
            &mut self.big_z,
            &mut self.k,
        ]
    }

    pub fn relax_towards(&mut self, other: &StatePaths, theta: f64) {
        for (a, b) in self.fields_mut().into_iter().zip(other.fields()) {
            a.relax_towards(b, theta);
        }
    }

    pub fn sub(&self, other: &StatePaths) -> StatePaths {
        StatePaths {
            y: self.y.sub(&other.y),
            big_y: self.big_y.sub(&other.big_y),
            z: self.z.sub(&other.z),
            big_z: self.big_z.sub(&other.big_z),
            k: self.k.sub(&other.k),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.fields().iter().all(|f| f.all_finite())
    }
}

/// Discrete adjoint solution `(p, P, q, Q, V)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointPaths {
    /// `m`
    pub p: PathField,
    /// `n`
    pub big_p: PathField,
    /// `m × l`
    pub q: PathField,
    /// `n × d`
    pub big_q: PathField,
    /// `n × J`
    pub big_v: PathField,
}

impl AdjointPaths {
    /// Reads the adjoint unknowns off a solution of the mirrored system, whose
    /// forward slot carries `p` and backward slot carries `P`.
    pub fn from_mirrored(paths: StatePaths) -> Self {
        Self {
            p: paths.y,
            big_p: paths.big_y,
            q: paths.z,
            big_q: paths.big_z,
            big_v: paths.k,
        }
    }

    pub fn zeros(shape: &Shape, nodes: usize, paths: usize) -> Self {
        let d = shape.dims;
        Self {
            p: PathField::zeros(nodes, paths, d.m),
            big_p: PathField::zeros(nodes, paths, d.n),
            q: PathField::zeros(nodes, paths, d.m * d.l),
            big_q: PathField::zeros(nodes, paths, d.n * d.d),
            big_v: PathField::zeros(nodes, paths, d.n * shape.marks),
        }
    }

    pub fn point(&self, node: usize, path: usize) -> AdjointPoint<'_> {
        AdjointPoint {
            p: self.p.get(node, path),
            big_p: self.big_p.get(node, path),
            q: self.q.get(node, path),
            big_q: self.big_q.get(node, path),
            big_v: self.big_v.get(node, path),
        }
    }

    pub fn fields(&self) -> [&PathField; 5] {
        [&self.p, &self.big_p, &self.q, &self.big_q, &self.big_v]
    }
}

/// Borrowed adjoint point `(p, P, q, Q, V)`.
#[derive(Debug, Clone, Copy)]
pub struct AdjointPoint<'a> {
    pub p: &'a [f64],
    pub big_p: &'a [f64],
    pub q: &'a [f64],
    pub big_q: &'a [f64],
    pub big_v: &'a [f64],
}

/// Owned adjoint point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdjointVec {
    pub p: Vec<f64>,
    pub big_p: Vec<f64>,
    pub q: Vec<f64>,
    pub big_q: Vec<f64>,
    pub big_v: Vec<f64>,
}

impl AdjointVec {
    pub fn zeros(shape: &Shape) -> Self {
        let d = shape.dims;
        Self {
            p: vec![0.0; d.m],
            big_p: vec![0.0; d.n],
            q: vec![0.0; d.m * d.l],
            big_q: vec![0.0; d.n * d.d],
            big_v: vec![0.0; d.n * shape.marks],
        }
    }

    pub fn view(&self) -> AdjointPoint<'_> {
        AdjointPoint {
            p: &self.p,
            big_p: &self.big_p,
            q: &self.q,
            big_q: &self.big_q,
            big_v: &self.big_v,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_node_major() {
        let f = PathField::from_fn(3, 2, 2, |i, p, out| {
            out[0] = i as f64;
            out[1] = p as f64;
        });
        assert_eq!(f.get(2, 1), &[2.0, 1.0]);
        assert_eq!(f.node(1), &[1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn mean_and_std() {
        let f = PathField::from_fn(1, 4, 1, |_, p, out| out[0] = p as f64);
        assert_eq!(f.mean_at(0), vec![1.5]);
        let expected = (5.0f64 / 3.0).sqrt();
        assert!((f.std_at(0)[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn relax_is_convex_combination() {
        let mut a = PathField::filled(2, 2, &[0.0]);
        let b = PathField::filled(2, 2, &[2.0]);
        a.relax_towards(&b, 0.25);
        assert!(a.as_slice().iter().all(|x| *x == 0.5));
    }
}
