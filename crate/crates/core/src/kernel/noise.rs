use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use super::grid::TimeGrid;
use crate::error::{Error, Result};
use crate::model::{Dimensions, JumpMeasure};

const MAGIC: &[u8; 8] = b"FBDSNOIS";
const VERSION: u32 = 1;

/// Increments of `W` (`d`), `B` (`l`) and the per-mark Poisson counts for
/// every step and path, plus the running sums the regressions use as
/// features. Immutable once sampled.
///
/// Each path draws from its own ChaCha stream (`seed`, stream = path index),
/// so a bundle does not depend on the thread count.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBundle {
    seed: u64,
    grid: TimeGrid,
    paths: usize,
    d: usize,
    l: usize,
    weights: Vec<f64>,
    dw: Vec<f64>,
    db: Vec<f64>,
    counts: Vec<u32>,
    b_tail: Vec<f64>,
    w_cum: Vec<f64>,
    n_cum: Vec<f64>,
}

impl NoiseBundle {
    pub fn sample(
        grid: &TimeGrid,
        paths: usize,
        dims: &Dimensions,
        jumps: &JumpMeasure,
        seed: u64,
    ) -> Result<Self> {
        if paths == 0 {
            return Err(Error::Validation("need at least one path".into()));
        }
        let (n_steps, d, l, marks) = (grid.steps(), dims.d, dims.l, jumps.len());
        let dt = grid.dt();
        let sqrt_dt = dt.sqrt();
        let poissons = jumps
            .weights()
            .iter()
            .map(|w| Poisson::new(w * dt).map_err(|e| Error::Validation(e.to_string())))
            .collect::<Result<Vec<_>>>()?;

        let per_path: Vec<(Vec<f64>, Vec<f64>, Vec<u32>)> = (0..paths)
            .into_par_iter()
            .map(|path| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(path as u64);
                let mut dw = Vec::with_capacity(n_steps * d);
                let mut db = Vec::with_capacity(n_steps * l);
                let mut counts = Vec::with_capacity(n_steps * marks);
                for _ in 0..n_steps {
                    for _ in 0..d {
                        let x: f64 = rng.sample(StandardNormal);
                        dw.push(sqrt_dt * x);
                    }
                    for _ in 0..l {
                        let x: f64 = rng.sample(StandardNormal);
                        db.push(sqrt_dt * x);
                    }
                    for p in &poissons {
                        counts.push(p.sample(&mut rng) as u32);
                    }
                }
                (dw, db, counts)
            })
            .collect();

        let mut dw = vec![0.0; n_steps * paths * d];
        let mut db = vec![0.0; n_steps * paths * l];
        let mut counts = vec![0u32; n_steps * paths * marks];
        for (path, (pdw, pdb, pc)) in per_path.into_iter().enumerate() {
            for i in 0..n_steps {
                let dst = (i * paths + path) * d;
                dw[dst..dst + d].copy_from_slice(&pdw[i * d..(i + 1) * d]);
                let dst = (i * paths + path) * l;
                db[dst..dst + l].copy_from_slice(&pdb[i * l..(i + 1) * l]);
                let dst = (i * paths + path) * marks;
                counts[dst..dst + marks].copy_from_slice(&pc[i * marks..(i + 1) * marks]);
            }
        }
        Ok(Self::assemble(seed, *grid, paths, d, l, jumps.weights().to_vec(), dw, db, counts))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        seed: u64,
        grid: TimeGrid,
        paths: usize,
        d: usize,
        l: usize,
        weights: Vec<f64>,
        dw: Vec<f64>,
        db: Vec<f64>,
        counts: Vec<u32>,
    ) -> Self {
        let n_steps = grid.steps();
        let marks = weights.len();
        let dt = grid.dt();
        let nodes = n_steps + 1;

        let mut b_tail = vec![0.0; nodes * paths * l];
        for i in (0..n_steps).rev() {
            for p in 0..paths {
                for c in 0..l {
                    b_tail[(i * paths + p) * l + c] =
                        b_tail[((i + 1) * paths + p) * l + c] + db[(i * paths + p) * l + c];
                }
            }
        }
        let mut w_cum = vec![0.0; nodes * paths * d];
        let mut n_cum = vec![0.0; nodes * paths * marks];
        for i in 0..n_steps {
            for p in 0..paths {
                for c in 0..d {
                    w_cum[((i + 1) * paths + p) * d + c] =
                        w_cum[(i * paths + p) * d + c] + dw[(i * paths + p) * d + c];
                }
                for j in 0..marks {
                    n_cum[((i + 1) * paths + p) * marks + j] = n_cum[(i * paths + p) * marks + j]
                        + counts[(i * paths + p) * marks + j] as f64
                        - weights[j] * dt;
                }
            }
        }
        Self {
            seed,
            grid,
            paths,
            d,
            l,
            weights,
            dw,
            db,
            counts,
            b_tail,
            w_cum,
            n_cum,
        }
    }

    /// The same increments with path `p` of the result taken from path
    /// `perm[p]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.paths];
        if perm.len() != self.paths || !perm.iter().all(|&p| p < self.paths && !std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Validation("not a permutation of the paths".into()));
        }
        let marks = self.marks();
        let n_steps = self.grid.steps();
        let mut dw = Vec::with_capacity(self.dw.len());
        let mut db = Vec::with_capacity(self.db.len());
        let mut counts = Vec::with_capacity(self.counts.len());
        for i in 0..n_steps {
            for &src in perm {
                dw.extend_from_slice(self.dw(i, src));
                db.extend_from_slice(self.db(i, src));
                counts.extend_from_slice(&self.counts[(i * self.paths + src) * marks..(i * self.paths + src + 1) * marks]);
            }
        }
        Ok(Self::assemble(self.seed, self.grid, self.paths, self.d, self.l, self.weights.clone(), dw, db, counts))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn marks(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `ΔW_i` on a path.
    #[inline]
    pub fn dw(&self, step: usize, path: usize) -> &[f64] {
        let s = (step * self.paths + path) * self.d;
        &self.dw[s..s + self.d]
    }

    /// `ΔB_i` on a path.
    #[inline]
    pub fn db(&self, step: usize, path: usize) -> &[f64] {
        let s = (step * self.paths + path) * self.l;
        &self.db[s..s + self.l]
    }

    /// Jump counts per mark in step `i`.
    #[inline]
    pub fn counts(&self, step: usize, path: usize) -> &[u32] {
        let s = (step * self.paths + path) * self.marks();
        &self.counts[s..s + self.marks()]
    }

    /// Compensated increment `ΔÑ_{ij} = count − w_j Δt`.
    #[inline]
    pub fn dn(&self, step: usize, path: usize, mark: usize) -> f64 {
        self.counts(step, path)[mark] as f64 - self.weights[mark] * self.grid.dt()
    }

    /// `B_T − B_{t_i}`, the backward information revealed at node `i`.
    #[inline]
    pub fn b_tail(&self, node: usize, path: usize) -> &[f64] {
        let s = (node * self.paths + path) * self.l;
        &self.b_tail[s..s + self.l]
    }

    /// `W_{t_i}`.
    #[inline]
    pub fn w_cum(&self, node: usize, path: usize) -> &[f64] {
        let s = (node * self.paths + path) * self.d;
        &self.w_cum[s..s + self.d]
    }

    /// Compensated cumulative `Ñ([0, t_i], {ρ_j})` per mark.
    #[inline]
    pub fn n_cum(&self, node: usize, path: usize) -> &[f64] {
        let m = self.marks();
        let s = (node * self.paths + path) * m;
        &self.n_cum[s..s + m]
    }

    /// Little-endian dump: header (magic, version, seed, N, M, d, l, J, T,
    /// weights), then all `ΔW`, all `ΔB` as `f64` and all counts as `u32`,
    /// each in `[step][path][component]` order.
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        for v in [self.grid.steps(), self.paths] {
            out.write_all(&(v as u64).to_le_bytes())?;
        }
        for v in [self.d, self.l, self.marks()] {
            out.write_all(&(v as u32).to_le_bytes())?;
        }
        out.write_all(&self.grid.horizon().to_le_bytes())?;
        for w in &self.weights {
            out.write_all(&w.to_le_bytes())?;
        }
        for x in self.dw.iter().chain(&self.db) {
            out.write_all(&x.to_le_bytes())?;
        }
        for c in &self.counts {
            out.write_all(&c.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("not a noise bundle dump".into()));
        }
        let version = read_u32(&mut input)?;
        if version != VERSION {
            return Err(Error::Parse(format!("unsupported noise dump version {version}")));
        }
        let seed = read_u64(&mut input)?;
        let steps = read_u64(&mut input)? as usize;
        let paths = read_u64(&mut input)? as usize;
        let d = read_u32(&mut input)? as usize;
        let l = read_u32(&mut input)? as usize;
        let marks = read_u32(&mut input)? as usize;
        let horizon = read_f64(&mut input)?;
        let grid = TimeGrid::new(steps, horizon)?;
        let weights = (0..marks).map(|_| read_f64(&mut input)).collect::<Result<Vec<_>>>()?;
        let dw = (0..steps * paths * d)
            .map(|_| read_f64(&mut input))
            .collect::<Result<Vec<_>>>()?;
        let db = (0..steps * paths * l)
            .map(|_| read_f64(&mut input))
            .collect::<Result<Vec<_>>>()?;
        let counts = (0..steps * paths * marks)
            .map(|_| read_u32(&mut input))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(seed, grid, paths, d, l, weights, dw, db, counts))
    }
}

fn read_u32(input: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(input: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(input: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> NoiseBundle {
        let grid = TimeGrid::new(4, 1.0).unwrap();
        let jumps = JumpMeasure::new(vec![0.5], vec![2.0]).unwrap();
        NoiseBundle::sample(&grid, 7, &Dimensions::scalar(), &jumps, 11).unwrap()
    }

    #[test]
    fn dump_roundtrip() {
        let noise = small();
        let mut buf = Vec::new();
        noise.write_to(&mut buf).unwrap();
        let back = NoiseBundle::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, noise);
    }

    #[test]
    fn tails_and_sums_are_consistent() {
        let noise = small();
        for p in 0..noise.paths() {
            let total: f64 = (0..4).map(|i| noise.db(i, p)[0]).sum();
            assert!((noise.b_tail(0, p)[0] - total).abs() < 1e-14);
            assert_eq!(noise.b_tail(4, p)[0], 0.0);
            let w: f64 = (0..4).map(|i| noise.dw(i, p)[0]).sum();
            assert!((noise.w_cum(4, p)[0] - w).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_truncated_dump() {
        let mut buf = Vec::new();
        small().write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(NoiseBundle::read_from(buf.as_slice()).is_err());
    }
}
