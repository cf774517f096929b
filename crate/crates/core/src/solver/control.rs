use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ControlSet;

/// Piecewise-constant control on the grid nodes. Every value it returns lies
/// in the control set it was built with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ControlProcess {
    /// Deterministic `u_i`, one vector per node.
    OpenLoop { values: Vec<Vec<f64>> },
    /// `u_i = Π_U(offset_i + gain_i·y)`, with `gain_i` stored `r × n`
    /// row-major.
    Feedback {
        offset: Vec<Vec<f64>>,
        gain: Vec<Vec<f64>>,
        set: ControlSet,
    },
}

impl ControlProcess {
    /// The same value at every node, projected onto `set`.
    pub fn constant(set: &ControlSet, value: &[f64], nodes: usize) -> Self {
        let v = set.project(value);
        ControlProcess::OpenLoop {
            values: vec![v; nodes],
        }
    }

    pub fn open_loop(set: &ControlSet, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.iter().any(|v| v.len() != set.dim()) {
            return Err(Error::Validation("control values have the wrong dimension".into()));
        }
        Ok(ControlProcess::OpenLoop {
            values: values.iter().map(|v| set.project(v)).collect(),
        })
    }

    pub fn feedback(set: &ControlSet, offset: Vec<Vec<f64>>, gain: Vec<Vec<f64>>) -> Result<Self> {
        if offset.len() != gain.len() {
            return Err(Error::shape("feedback gains", offset.len(), gain.len()));
        }
        let r = set.dim();
        if offset.iter().any(|o| o.len() != r) || gain.iter().any(|g| r == 0 || g.len() % r != 0) {
            return Err(Error::Validation("feedback offset/gain have the wrong dimension".into()));
        }
        Ok(ControlProcess::Feedback {
            offset,
            gain,
            set: set.clone(),
        })
    }

    pub fn nodes(&self) -> usize {
        match self {
            ControlProcess::OpenLoop { values } => values.len(),
            ControlProcess::Feedback { offset, .. } => offset.len(),
        }
    }

    pub fn is_open_loop(&self) -> bool {
        matches!(self, ControlProcess::OpenLoop { .. })
    }

    /// Control at `node` given the forward state there.
    pub fn value(&self, node: usize, y: &[f64]) -> Vec<f64> {
        match self {
            ControlProcess::OpenLoop { values } => values[node].clone(),
            ControlProcess::Feedback { offset, gain, set } => {
                let n = y.len();
                let raw: Vec<f64> = offset[node]
                    .iter()
                    .enumerate()
                    .map(|(a, o)| o + (0..n).map(|c| gain[node][a * n + c] * y[c]).sum::<f64>())
                    .collect();
                set.project(&raw)
            }
        }
    }

    /// Open-loop values, if any.
    pub fn values(&self) -> Option<&[Vec<f64>]> {
        match self {
            ControlProcess::OpenLoop { values } => Some(values),
            ControlProcess::Feedback { .. } => None,
        }
    }

    pub fn check(&self, nodes: usize, r: usize) -> Result<()> {
        if self.nodes() != nodes {
            return Err(Error::shape("control nodes", nodes, self.nodes()));
        }
        let ok = match self {
            ControlProcess::OpenLoop { values } => values.iter().all(|v| v.len() == r),
            ControlProcess::Feedback { offset, .. } => offset.iter().all(|v| v.len() == r),
        };
        if !ok {
            return Err(Error::Validation("control dimension does not match problem".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_are_projected() {
        let set = ControlSet::boxed(vec![-1.0], vec![1.0]).unwrap();
        let u = ControlProcess::constant(&set, &[3.0], 4);
        assert_eq!(u.value(2, &[0.0]), vec![1.0]);
        let fb = ControlProcess::feedback(&set, vec![vec![0.5]; 2], vec![vec![2.0]; 2]).unwrap();
        assert_eq!(fb.value(0, &[1.0]), vec![1.0]);
        assert_eq!(fb.value(0, &[-0.5]), vec![-0.5]);
    }
}
