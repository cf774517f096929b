use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `t_i = i·T/N`, `i = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    steps: usize,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(steps: usize, horizon: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Validation("time grid needs at least one step".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Validation(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self { steps, horizon })
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes `N + 1`.
    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.t(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        let g = TimeGrid::new(3, 0.7).unwrap();
        assert_eq!(g.t(0), 0.0);
        assert_eq!(g.t(3), 0.7);
        assert_eq!(g.nodes(), 4);
        assert!(TimeGrid::new(0, 1.0).is_err());
        assert!(TimeGrid::new(1, -1.0).is_err());
    }
}
