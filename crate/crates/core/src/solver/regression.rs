//! Least-squares projection onto polynomial features across paths.

use nalgebra::{DMatrix, SymmetricEigen};

/// Relative eigenvalue cutoff of the normal-equation pseudo-inverse.
const CUTOFF: f64 = 1e-12;

/// Projection onto the span of a polynomial basis evaluated on every path.
///
/// Features are standardized; features that are constant across paths are
/// dropped, so a deterministic target regresses exactly onto the constant.
#[derive(Debug, Clone)]
pub struct Projector {
    basis: DMatrix<f64>,
    gram_pinv: DMatrix<f64>,
    condition: f64,
    rank: usize,
}

impl Projector {
    /// `features` is `paths × p`; `degree` is 1 or 2 (total degree).
    pub fn new(features: &DMatrix<f64>, degree: usize) -> Self {
        Self::mixed(features, &DMatrix::zeros(features.nrows(), 0), degree)
    }

    /// Polynomials of total degree `degree` in `features`, plus `linear`
    /// features entering only to first order.
    pub fn mixed(features: &DMatrix<f64>, linear: &DMatrix<f64>, degree: usize) -> Self {
        let m = features.nrows();
        let cols = standardize(features);
        let mut columns: Vec<Vec<f64>> = vec![vec![1.0; m]];
        for c in &cols {
            columns.push(c.clone());
        }
        if degree >= 2 {
            for a in 0..cols.len() {
                for b in a..cols.len() {
                    columns.push(cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).collect());
                }
            }
        }
        columns.extend(standardize(linear));
        let k = columns.len();
        let basis = DMatrix::from_fn(m, k, |r, c| columns[c][r]);
        let gram = basis.transpose() * &basis / m as f64;
        let eigen = SymmetricEigen::new(gram);
        let max = eigen.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let min = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        let mut inv = DMatrix::zeros(k, k);
        let mut rank = 0;
        for (i, lambda) in eigen.eigenvalues.iter().enumerate() {
            if *lambda > CUTOFF * max {
                rank += 1;
                let v = eigen.eigenvectors.column(i);
                inv += (v * v.transpose()) / *lambda;
            }
        }
        Self {
            basis,
            gram_pinv: inv / m as f64,
            condition,
            rank,
        }
    }

    /// Fitted values of each target column.
    pub fn project(&self, targets: &DMatrix<f64>) -> DMatrix<f64> {
        let coef = &self.gram_pinv * (self.basis.transpose() * targets);
        &self.basis * coef
    }

    /// Eigenvalue ratio of the normalized Gram matrix (infinite when singular).
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn basis_size(&self) -> usize {
        self.basis.ncols()
    }
}

fn standardize(features: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let m = features.nrows() as f64;
    let mut out = Vec::new();
    for col in features.column_iter() {
        let mean = col.iter().sum::<f64>() / m;
        let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m;
        let sd = var.sqrt();
        if sd <= 1e-10 * (1.0 + mean.abs()) {
            continue;
        }
        out.push(col.iter().map(|x| (x - mean) / sd).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_target_is_exact() {
        let x = DMatrix::from_fn(50, 2, |r, c| ((r * 7 + c * 3) % 11) as f64);
        let p = Projector::new(&x, 2);
        let t = DMatrix::from_element(50, 1, 5.0);
        let fit = p.project(&t);
        assert!(fit.iter().all(|v| (v - 5.0).abs() < 1e-10));
    }

    #[test]
    fn quadratic_is_reproduced() {
        let x = DMatrix::from_fn(40, 1, |r, _| r as f64 / 10.0 - 2.0);
        let t = x.map(|v| 1.0 + 2.0 * v - 0.5 * v * v);
        let fit = Projector::new(&x, 2).project(&t);
        assert!((fit - t).amax() < 1e-9);
    }

    #[test]
    fn constant_features_are_dropped() {
        let x = DMatrix::from_element(10, 3, 2.0);
        let p = Projector::new(&x, 2);
        assert_eq!(p.basis_size(), 1);
        assert_eq!(p.condition(), 1.0);
    }
}
