use serde::{Deserialize, Serialize};

use super::grid::TimeGrid;
use crate::error::{Error, Result};
use crate::paths::{PathField, StatePaths};

/// Discrete `𝕄²` norm with per-process contributions; `value² = Σ components²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteNorm {
    pub value: f64,
    /// `[y, Y, z, Z, k]`
    pub components: [f64; 5],
}

/// `(mean over paths of Σ_{i<N} Δt |x_i|²_w)^{1/2}` where the squared norm of
/// a per-mark block weights entry `a·J + j` by `w_j`.
pub fn field_norm(field: &PathField, grid: &TimeGrid, weights: Option<&[f64]>) -> Result<f64> {
    if field.nodes() != grid.nodes() {
        return Err(Error::shape("path field nodes", grid.nodes(), field.nodes()));
    }
    if let Some(w) = weights {
        if w.is_empty() || field.width() % w.len() != 0 {
            return Err(Error::shape("per-mark block width", w.len(), field.width()));
        }
    }
    let dt = grid.dt();
    let mut total = 0.0;
    for i in 0..grid.steps() {
        for p in 0..field.paths() {
            let x = field.get(i, p);
            total += match weights {
                None => x.iter().map(|v| v * v).sum::<f64>(),
                Some(w) => x
                    .iter()
                    .enumerate()
                    .map(|(idx, v)| w[idx % w.len()] * v * v)
                    .sum::<f64>(),
            } * dt;
        }
    }
    Ok((total / field.paths() as f64).sqrt())
}

pub fn discrete_norm_m2(paths: &StatePaths, grid: &TimeGrid, weights: &[f64]) -> Result<DiscreteNorm> {
    let mut components = [0.0; 5];
    for (slot, (idx, field)) in components.iter_mut().zip(paths.fields().into_iter().enumerate()) {
        *slot = field_norm(field, grid, (idx == 4).then_some(weights))?;
    }
    let value = components.iter().map(|c| c * c).sum::<f64>().sqrt();
    Ok(DiscreteNorm { value, components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dimensions;

    #[test]
    fn constant_forward_state_has_unit_norm() {
        let grid = TimeGrid::new(10, 1.0).unwrap();
        let shape = Dimensions::scalar().shape(1);
        let mut paths = StatePaths::zeros(&shape, grid.nodes(), 3);
        paths.y = PathField::filled(grid.nodes(), 3, &[1.0]);
        let norm = discrete_norm_m2(&paths, &grid, &[1.0]).unwrap();
        assert!((norm.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_jump_block() {
        let grid = TimeGrid::new(8, 2.0).unwrap();
        let shape = Dimensions::scalar().shape(1);
        let mut paths = StatePaths::zeros(&shape, grid.nodes(), 2);
        paths.k = PathField::filled(grid.nodes(), 2, &[1.0]);
        let norm = discrete_norm_m2(&paths, &grid, &[3.0]).unwrap();
        assert!((norm.value * norm.value - 6.0).abs() < 1e-13);
        assert_eq!(norm.components[..4], [0.0; 4]);
    }
}
